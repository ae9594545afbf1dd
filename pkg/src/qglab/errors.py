"""Exception types shared across the package.

Invalid arguments raise plain ``ValueError``; genuine floating-point range
problems raise ``OverflowError``.  The classes below cover failure modes that
callers are expected to catch and react to individually.
"""


class SingularIntegrandError(ValueError):
    """Weighted integrand is certifiably non-integrable at the origin."""


class BracketError(ValueError):
    """Shooting bracket does not straddle a sign change."""


class DomainError(ValueError):
    """Logarithm argument of the closed-form transform crossed zero."""

    def __init__(self, message: str, s: float | None = None):
        super().__init__(message)
        self.s = s


class DivergenceError(RuntimeError):
    """Damped fixed-point iteration diverged; carries the residual history."""

    def __init__(self, message: str, history: list[float]):
        super().__init__(message)
        self.history = history


class UnstableInversionError(RuntimeError):
    """The two Laplace-inversion methods disagree beyond tolerance."""


class MarchOverflowError(OverflowError):
    """Marching produced a non-finite value; carries the abscissa."""

    def __init__(self, message: str, eta: float):
        super().__init__(message)
        self.eta = eta
