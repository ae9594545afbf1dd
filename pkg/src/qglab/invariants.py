"""Membership checks and empirical invariance experiments for the a-priori
bound sets: the exponential envelope class, its Hölder-modulus refinement,
and the weighted-integral lower-bound class.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .grids import (
    EvenFn,
    GridSpec,
    Representation,
    holder_modulus_profile,
    lp_norm,
    make_grid,
    weighted_integral,
)
from .renorm import RenormParams, apply_psi
from .specfun import mu0_threshold

__all__ = [
    "BoundsParams",
    "MembershipReport",
    "DEFAULT_GRID",
    "candidate_member",
    "check_envelope",
    "check_holder",
    "check_weighted_lower_bound",
    "InvarianceReport",
    "invariance_experiment",
]

DEFAULT_GRID = make_grid(8.0, 1025)

_ENVELOPE_SLACK = 1e-8
_WEIGHTED_SLACK = 1e-6


@dataclass(frozen=True)
class BoundsParams:
    """Constants defining the invariant sets."""

    a: float
    k: float
    K: float
    A: float
    alpha: float
    delta0: float
    mu: float
    sigma: float
    nu_exp: float

    def __post_init__(self):
        if not (self.a > 0):
            raise ValueError(f"a must be positive, got {self.a}")
        if not (0.0 < self.k <= 1.0):
            raise ValueError(f"k must be in (0, 1], got {self.k}")
        if not (self.K > 0 and self.A > 0):
            raise ValueError("K and A must be positive")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not (self.delta0 > 0):
            raise ValueError(f"delta0 must be positive, got {self.delta0}")
        if not (self.mu > 0):
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not (-3.0 < self.sigma < -1.0):
            raise ValueError(f"sigma must be in (-3, -1), got {self.sigma}")
        if not (-1.0 - self.sigma < self.nu_exp < 1.0):
            raise ValueError(
                f"nu_exp must be in ({-1.0 - self.sigma}, 1), got {self.nu_exp}"
            )


@dataclass
class MembershipReport:
    in_E_ak: Optional[bool] = None
    worst_envelope_ratio: Optional[float] = None
    in_holder: Optional[bool] = None
    holder_norm: Optional[float] = None
    modulus_envelope_ok: Optional[bool] = None
    in_M: Optional[bool] = None
    I_value: Optional[float] = None


def candidate_member(k: float, nu_exp: float, a: float,
                     grid: GridSpec | None = None) -> EvenFn:
    """The concrete set member ``k * min(1, |x|^nu_exp) * exp(-a|x|)``."""
    if not (0.0 < k <= 1.0) or not (a > 0) or not (0.0 < nu_exp < 1.0):
        raise ValueError("need k in (0,1], a > 0, nu_exp in (0,1)")
    grid = DEFAULT_GRID if grid is None else grid
    x = grid.nodes()
    vals = k * np.minimum(1.0, x**nu_exp) * np.exp(-a * x)
    return EvenFn(grid, vals, a, Representation.PSI)


def check_envelope(f: EvenFn, a: float, k: float) -> MembershipReport:
    """Envelope membership ``|f(x)| <= k exp(-a|x|)`` checked at the nodes."""
    x = f.grid.nodes()
    env = k * np.exp(-a * x)
    ratio = float(np.max(np.abs(f.values) / env))
    return MembershipReport(in_E_ak=bool(ratio <= 1.0 + 1e-9), worst_envelope_ratio=ratio)


def check_holder(f: EvenFn, params: BoundsParams, p: float) -> MembershipReport:
    """Empirical Hölder-modulus membership: p-norm bound by K and the
    ``A |x| exp(-a|x|)`` modulus envelope beyond |x| = 1."""
    deltas = params.delta0 / np.array([8.0, 4.0, 2.0, 1.0])
    omega = holder_modulus_profile(f, params.alpha, deltas)
    norm = lp_norm(omega, p)
    x = f.grid.nodes()
    outer = x > 1.0
    env_ok = bool(
        np.all(omega.values[outer] <= params.A * x[outer] * np.exp(-params.a * x[outer]) + 1e-12)
    )
    return MembershipReport(
        in_holder=bool(norm <= params.K),
        holder_norm=float(norm),
        modulus_envelope_ok=env_ok,
    )


def check_weighted_lower_bound(f: EvenFn, mu: float, sigma: float,
                               local_order_hint: float) -> MembershipReport:
    """Weighted-integral membership ``I[f] >= mu``."""
    value = weighted_integral(f, sigma, local_order_hint)
    return MembershipReport(in_M=bool(value >= mu), I_value=float(value))


# -- invariance experiment --------------------------------------------------


def _random_modulation(rng: np.random.Generator, x: np.ndarray, L: float) -> np.ndarray:
    """Smooth random even modulation with values in [-1, 1]: a low-order
    cosine polynomial normalized by its sup."""
    coefs = rng.normal(size=4)
    modes = np.cos(np.outer(x, np.arange(1, 5)) * np.pi / L)
    m = modes @ coefs
    return m / max(1.0, float(np.max(np.abs(m))))


@dataclass
class InvarianceReport:
    params: BoundsParams
    betas: tuple
    n_samples: int
    seed: int
    mu0: float
    envelope_pass: int = 0
    envelope_total: int = 0
    envelope_worst_margin: float = np.inf
    weighted_pass: int = 0
    weighted_total: int = 0
    weighted_worst_margin: float = np.inf
    holder_norm_ratios: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return (
            self.envelope_pass == self.envelope_total
            and self.weighted_pass == self.weighted_total
        )


def invariance_experiment(params: BoundsParams, betas: Sequence[float],
                          n_samples: int, seed: int, *, beta0: float = 0.8,
                          p: float = 2.0, grid: GridSpec | None = None) -> InvarianceReport:
    """Draw random set members, apply the scale map, re-check memberships.

    Envelope stream: random smooth sign-modulations under the exponential
    envelope.  Weighted stream: candidate-member modulations built to keep
    the weighted integral above ``mu``.  Deterministic given ``seed``.
    """
    if not (0.0 < beta0 < 1.0):
        raise ValueError(f"beta0 must be in (0, 1), got {beta0}")
    if any(not (beta0 < b < 1.0) for b in betas):
        raise ValueError(f"betas must lie in (beta0, 1) = ({beta0}, 1)")
    if not (params.alpha < 1.0 / p):
        raise ValueError(f"alpha={params.alpha} must be below 1/p={1.0 / p}")
    mu0 = mu0_threshold(params.a, params.k, params.sigma, beta0)
    if params.mu <= mu0:
        raise ValueError(f"mu={params.mu} must exceed the threshold mu0={mu0}")
    if n_samples < 0:
        raise ValueError("n_samples must be non-negative")
    grid = DEFAULT_GRID if grid is None else grid
    rng = np.random.default_rng(seed)
    report = InvarianceReport(params, tuple(betas), n_samples, seed, mu0)
    x = grid.nodes()
    L = grid.half_width
    envelope = params.k * np.exp(-params.a * x)
    cand = candidate_member(params.k, params.nu_exp, params.a, grid)

    for idx in range(n_samples):
        member = EvenFn(grid, envelope * _random_modulation(rng, x, L), params.a,
                        Representation.PSI)
        # record the empirical Hölder norm before/after one application
        omega_before = check_holder(member, params, p).holder_norm
        for beta in betas:
            image = apply_psi(member, RenormParams(beta=beta))
            margin = float(np.min(envelope + _ENVELOPE_SLACK - np.abs(image.values)))
            ok = margin >= 0.0
            report.envelope_total += 1
            report.envelope_pass += int(ok)
            report.envelope_worst_margin = min(report.envelope_worst_margin, margin)
            if not ok:
                report.failures.append(
                    {"stream": "envelope", "sample": idx, "beta": beta,
                     "margin": margin, "member": member}
                )
            if beta == betas[0]:
                omega_after = check_holder(image, params, p).holder_norm
                report.holder_norm_ratios.append(omega_after / max(omega_before, 1e-300))

    for idx in range(n_samples):
        m = _random_modulation(rng, x, L)
        member = cand.with_values(cand.values * (0.55 + 0.45 * m))
        value = weighted_integral(member, params.sigma, params.nu_exp)
        if value < params.mu:
            # headroom of the candidate makes this unreachable for the default
            # parameters; skip rather than mislabel
            continue
        for beta in betas:
            image = apply_psi(member, RenormParams(beta=beta))
            after = weighted_integral(image, params.sigma, params.nu_exp)
            margin = float(after - (params.mu - _WEIGHTED_SLACK))
            ok = margin >= 0.0
            report.weighted_total += 1
            report.weighted_pass += int(ok)
            report.weighted_worst_margin = min(report.weighted_worst_margin, margin)
            if not ok:
                report.failures.append(
                    {"stream": "weighted", "sample": idx, "beta": beta,
                     "margin": margin, "member": member}
                )
    return report
