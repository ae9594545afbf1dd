"""Special functions for the membership threshold and the closed-form
transform: erf, gamma functions, Kummer M and Tricomi U.

M uses its everywhere-positive power series up to ``Z_SWITCH`` and the large-z
expansion beyond (both pieces optimally truncated).  U at moderate z comes
from the sqrt(pi)-weighted M combination, evaluated in extended precision to
push back the e^z cancellation; for large z the optimally-truncated divergent
series ``z^{-a} 2F0(a, a-b+1; -1/z)`` takes over.  Only b in {1/2, 3/2} is
supported; b = 3/2 reduces to b = 1/2 through ``U(a,3/2,z) = z^{-1/2}
U(a-1/2,1/2,z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammainc as _reg_lower_gamma

__all__ = [
    "HypergeomArgs",
    "TricomiValue",
    "erf",
    "gamma_fn",
    "lower_incomplete_gamma",
    "kummer_m",
    "tricomi_u",
    "mu0_threshold",
    "Z_SWITCH",
]

Z_SWITCH = 30.0     # M: series below, asymptotic expansion above
_U_BAND_LO = 12.0   # U: M-combination below; both branches compete in between
_U_BAND_HI = 40.0   # U: divergent series above
_SUPPORTED_B = (0.5, 1.5)


@dataclass(frozen=True)
class HypergeomArgs:
    a: float
    b: float
    z: float

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.a, self.b, self.z)):
            raise ValueError("hypergeometric arguments must be finite")
        if self.b <= 0 and float(self.b).is_integer():
            raise ValueError(f"b={self.b} is a pole of the confluent series")
        if self.z < 0:
            raise ValueError(f"z must be non-negative, got {self.z}")


def erf(x: float) -> float:
    if not np.isfinite(x):
        raise ValueError(f"erf argument must be finite, got {x}")
    return math.erf(x)


def gamma_fn(x: float) -> float:
    if x <= 0 and float(x).is_integer():
        raise OverflowError(f"gamma pole at non-positive integer {x}")
    return math.gamma(x)


def lower_incomplete_gamma(s: float, x: float) -> float:
    """Lower incomplete gamma ``int_0^x t^{s-1} e^{-t} dt`` for s > 0."""
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    return float(_reg_lower_gamma(s, x)) * math.gamma(s)


def _m_series(a: float, b: float, z: float, dtype=float) -> float:
    term = dtype(1.0)
    total = dtype(1.0)
    for n in range(2000):
        term = term * (dtype(a) + n) / (dtype(b) + n) * dtype(z) / (n + 1)
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total


def _asymptotic_sum(c1: float, c2: float, zinv: float, alternating: bool) -> tuple[float, float]:
    """Optimally truncated ``sum_n (c1)_n (c2)_n / n! * (+-zinv)^n``; returns
    (sum, magnitude of the first omitted term)."""
    term = 1.0
    total = 1.0
    best = abs(term)
    sign = -1.0 if alternating else 1.0
    for n in range(400):
        nxt = term * (c1 + n) * (c2 + n) / (n + 1) * zinv * sign
        if abs(nxt) >= best:
            return total, abs(nxt)
        term = nxt
        total += term
        best = abs(term)
    return total, abs(term)


def _m_asymptotic(a: float, b: float, z: float) -> float:
    # dominant branch e^z z^{a-b}; subdominant |z|^{-a} term uses the real-axis
    # reading of the (-z)^{-a} factor and is kept for completeness
    s_plus, _ = _asymptotic_sum(b - a, 1.0 - a, 1.0 / z, alternating=False)
    lead = math.gamma(b) / math.gamma(a) * math.exp(z) * z ** (a - b) * s_plus
    gb_ma = b - a
    if not (gb_ma <= 0 and float(gb_ma).is_integer()):
        s_minus, _ = _asymptotic_sum(a, a - b + 1.0, 1.0 / z, alternating=True)
        lead += math.gamma(b) / math.gamma(gb_ma) * z ** (-a) * s_minus
    return lead


def kummer_m(args: HypergeomArgs) -> float:
    """Confluent hypergeometric M(a, b, z) for z >= 0 to ~1e-9 relative."""
    a, b, z = args.a, args.b, args.z
    if z == 0.0:
        return 1.0
    if z <= Z_SWITCH:
        return float(_m_series(a, b, z))
    return float(_m_asymptotic(a, b, z))


class TricomiValue(NamedTuple):
    value: float
    precision_warning: bool


def _longdouble_const(value) -> np.longdouble:
    """Convert an mpmath scalar to longdouble without a double round-trip."""
    import mpmath as mp

    return np.longdouble(mp.nstr(value, 25))


def _u_half_via_m(a: float, z: float) -> tuple[float, float]:
    """U(a, 1/2, z) from the M-combination in extended precision; returns
    ``(value, estimated relative error)``.

    The gamma/sqrt prefactors are taken at full extended precision: the two
    terms cancel to ~e^-z of their size, so double-rounded constants would
    dominate the error.
    """
    import mpmath as mp

    ld = np.longdouble
    m1 = _m_series(a, 0.5, z, dtype=ld)
    m2 = _m_series(a + 0.5, 1.5, z, dtype=ld)
    t1 = _longdouble_const(mp.sqrt(mp.pi) / mp.gamma(a + 0.5)) * m1
    t2 = _longdouble_const(2 * mp.sqrt(mp.pi) / mp.gamma(a) * mp.sqrt(z)) * m2
    val = t1 - t2
    scale = max(abs(t1), abs(t2))
    est = float(scale / max(abs(val), np.finfo(np.longdouble).tiny)) * 1e-18
    return float(val), est


def _u_divergent(a: float, b: float, z: float) -> tuple[float, float]:
    """Optimally-truncated large-z series; returns (value, estimated rel err)."""
    total, omitted = _asymptotic_sum(a, a - b + 1.0, 1.0 / z, alternating=True)
    return z ** (-a) * total, omitted / abs(total)


def tricomi_u(args: HypergeomArgs) -> TricomiValue:
    """Tricomi U(a, b, z) for b in {1/2, 3/2}, z >= 0, with a precision flag.

    In the band where both the M-combination and the divergent series are
    viable, whichever carries the smaller error estimate wins; the flag is
    raised when even that estimate exceeds 1e-10 (more than six of the
    sixteen digits lost).
    """
    a, b, z = args.a, args.b, args.z
    if b not in _SUPPORTED_B:
        raise ValueError(f"b must be one of {_SUPPORTED_B}, got {b}")
    if b == 1.5:
        if z == 0.0:
            raise ValueError("U(a, 3/2, z) diverges at z = 0")
        inner = tricomi_u(HypergeomArgs(a - 0.5, 0.5, z))
        return TricomiValue(inner.value / math.sqrt(z), inner.precision_warning)
    if z == 0.0:
        # the sqrt(z) term vanishes
        return TricomiValue(math.sqrt(math.pi) / math.gamma(a + 0.5), False)
    if z <= _U_BAND_LO:
        val, est = _u_half_via_m(a, z)
    elif z >= _U_BAND_HI:
        val, est = _u_divergent(a, 0.5, z)
    else:
        val_m, est_m = _u_half_via_m(a, z)
        val_d, est_d = _u_divergent(a, 0.5, z)
        val, est = (val_m, est_m) if est_m <= est_d else (val_d, est_d)
    return TricomiValue(val, bool(est > 1e-10))


def mu0_threshold(a: float, k: float, sigma: float, beta0: float) -> float:
    """Threshold above which the weighted-integral lower bound is preserved by
    every scale map with beta in (beta0, 1)."""
    if not (a > 0):
        raise ValueError(f"a must be positive, got {a}")
    if not (0.0 < k <= 1.0):
        raise ValueError(f"k must be in (0, 1], got {k}")
    if not (-3.0 < sigma < -1.0):
        raise ValueError(f"sigma must be in (-3, -1), got {sigma}")
    if abs(sigma + 1.0) < 1e-9:
        raise OverflowError("prefactor diverges as sigma -> -1 (denominator -> 0)")
    if not (0.0 < beta0 < 1.0):
        raise ValueError(f"beta0 must be in (0, 1), got {beta0}")
    s1 = (sigma + 3.0) / 2.0
    s2 = (sigma + 4.0) / 2.0
    q = a * a / 4.0
    combo = gamma_fn(s1) * kummer_m(HypergeomArgs(s1, 0.5, q)) - a * gamma_fn(s2) * kummer_m(
        HypergeomArgs(s2, 1.5, q)
    )
    return (k * k / beta0**2) * (1.0 - beta0**2) / (beta0 ** (1.0 + sigma) - 1.0) * combo
