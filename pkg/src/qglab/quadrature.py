"""Truncated convolutions and Gaussian-weighted integrals.

The half-line convolution ``(f * g)(z) = int_0^z f(x) g(z-x) dx`` is the
nonlinearity of the reduced problem.  Batch tables are produced with two
``np.convolve`` passes (even/odd index split) so that every entry reproduces
the pointwise composite rule exactly.

Overflow policy: the factor ``exp(x^2)`` on its own is never part of any
result; Gaussian-weighted integrals are assembled from exponent differences
such as ``beta^2*eta^2 - z^2`` (non-positive on the integration range).  For
accuracy, the rapidly-varying Gaussian factor is integrated in the
substituted variable ``u = z^2 - shift`` where it becomes a plain ``e^{-u}``,
while the slowly-varying convolution factor is interpolated from its table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grids import (
    EvenFn,
    GridSpec,
    Representation,
    interp_table,
    uniform_weights,
)

__all__ = [
    "ConvTable",
    "bullet_convolution",
    "bullet_all",
    "bullet_table_values",
    "gaussian_band_integral",
    "j_functional",
    "j_functional_profile",
    "phi_pair_table",
    "phi_nonlinear_term",
]

# integration ranges are clipped where exp(shift - z^2) falls below e^-50
RANGE_EXPONENT = 50.0
# u-substitution resolution for the e^{-u} factor (Simpson error ~ step^4/180)
_U_STEP = 0.015625


@dataclass(frozen=True, eq=False)
class ConvTable:
    """Half-line convolution sampled at the grid nodes; odd in its argument."""

    grid: GridSpec
    values: np.ndarray


def _require_psi(f: EvenFn, name: str) -> None:
    if f.repr_form is not Representation.PSI:
        raise ValueError(f"{name} expects the raw (PSI) representation")


def bullet_table_values(fv: np.ndarray, gv: np.ndarray, h: float) -> np.ndarray:
    """Convolution table ``int_0^{i*h} f(x) g(i*h - x) dx`` for all i, matching
    the pointwise uniform rule of :func:`qglab.grids.uniform_weights`."""
    n = len(fv)
    if len(gv) != n:
        raise ValueError("sample arrays must have equal length")
    fe = fv.copy()
    fe[1::2] = 0.0
    fo = fv.copy()
    fo[0::2] = 0.0
    A = np.convolve(fe, gv)[:n]  # sum over even j of f_j g_{i-j}
    B = np.convolve(fo, gv)[:n]  # sum over odd j
    i = np.arange(n)
    p0 = fv[0] * gv
    pi = fv * gv[0]
    out = np.zeros(n)
    ev = (i % 2 == 0) & (i >= 4)
    out[ev] = h / 3.0 * (2.0 * A[ev] + 4.0 * B[ev] - p0[ev] - pi[ev])
    od = (i % 2 == 1) & (i >= 5)
    if np.any(od):
        idx = i[od]
        # Simpson head + 3/8 tail ...
        pm1 = fv[idx - 1] * gv[1]
        pm2 = fv[idx - 2] * gv[2]
        pm3 = fv[idx - 3] * gv[3]
        head_simpson = h / 3.0 * (
            2.0 * (A[od] - pm1) + 4.0 * (B[od] - pm2 - pi[od]) - p0[od] - pm3
        ) + 3.0 * h / 8.0 * (pm3 + 3.0 * pm2 + 3.0 * pm1 + pi[od])
        # ... averaged with its mirror (3/8 head + Simpson tail) so the rule
        # matches the symmetrized odd-interval weights exactly
        q1 = fv[1] * gv[idx - 1]
        q2 = fv[2] * gv[idx - 2]
        q3 = fv[3] * gv[idx - 3]
        tail_simpson = h / 3.0 * (
            2.0 * (B[od] - q1) + 4.0 * (A[od] - p0[od] - q2) - q3 - pi[od]
        ) + 3.0 * h / 8.0 * (p0[od] + 3.0 * q1 + 3.0 * q2 + q3)
        out[od] = 0.5 * (head_simpson + tail_simpson)
    if n > 1:
        out[1] = h / 2.0 * (p0[1] + pi[1])
    if n > 2:
        out[2] = h / 3.0 * (p0[2] + 4.0 * fv[1] * gv[1] + pi[2])
    if n > 3:
        out[3] = 3.0 * h / 8.0 * (p0[3] + 3.0 * fv[1] * gv[2] + 3.0 * fv[2] * gv[1] + pi[3])
    return out


def bullet_convolution(f: EvenFn, g: EvenFn, zeta: float) -> float:
    """``int_0^zeta f(x) g(zeta - x) dx`` by the composite uniform rule, with
    grid-snapped nodes and an interpolated partial end cell."""
    _require_psi(f, "bullet_convolution")
    _require_psi(g, "bullet_convolution")
    if not np.isfinite(zeta) or zeta < 0:
        raise ValueError(f"zeta must be non-negative, got {zeta}")
    h = f.grid.spacing
    m = int(math.floor(zeta / h + 1e-12))
    xm = m * h
    xs = np.arange(m + 1) * h
    p = f.evaluate(xs) * g.evaluate(zeta - xs)
    full = float(np.dot(uniform_weights(m, h), p))
    if abs(zeta - xm) < 1e-12 * max(1.0, zeta):
        return full
    # partial cell [xm, zeta] by 3-point Simpson on interpolated values
    sub = np.array([xm, 0.5 * (xm + zeta), zeta])
    ps = f.evaluate(sub) * g.evaluate(zeta - sub)
    return full + (zeta - xm) / 6.0 * float(ps[0] + 4.0 * ps[1] + ps[2])


def bullet_all(f: EvenFn, g: EvenFn | None = None) -> ConvTable:
    """Table of ``(f * g)(zeta_i)`` at all grid nodes (g defaults to f)."""
    _require_psi(f, "bullet_all")
    gv = f.values if g is None else g.values
    if g is not None:
        _require_psi(g, "bullet_all")
        if g.grid != f.grid:
            raise ValueError("operands must share a grid")
    return ConvTable(
        f.grid, bullet_table_values(np.asarray(f.values), np.asarray(gv), f.grid.spacing)
    )


# -- Gaussian-weighted band integrals ---------------------------------------


def gaussian_band_integral(table: np.ndarray, h: float, lo: float, hi: float,
                           shift: float) -> float:
    """``int_lo^hi exp(shift - z^2) G(z) dz`` with ``shift <= lo^2`` and ``G``
    interpolated from a uniform table.

    Near the origin the exponential factor is tame and plain Simpson in z is
    used; beyond, the substitution ``u = z^2 - shift`` turns the factor into
    ``e^{-u}`` resolved on a uniform u-mesh, so the accuracy is independent of
    how fast ``exp(-z^2)`` varies on the z-grid.
    """
    hi = min(hi, (len(table) - 1) * h, math.sqrt(max(lo * lo, shift) + RANGE_EXPONENT))
    if hi <= lo:
        return 0.0
    total = 0.0
    z_switch = 0.5
    if lo < z_switch:
        b = min(hi, z_switch)
        m = max(8, 2 * int(math.ceil((b - lo) / min(h, 0.02) / 2)))
        zs = np.linspace(lo, b, m + 1)
        vals = np.exp(shift - zs * zs) * interp_table(table, h, zs)
        total += float(np.dot(uniform_weights(m, (b - lo) / m), vals))
        lo = b
    if hi <= lo:
        return total
    u_lo = lo * lo - shift
    u_hi = hi * hi - shift
    m = max(8, 2 * int(math.ceil((u_hi - u_lo) / _U_STEP / 2)))
    us = np.linspace(u_lo, u_hi, m + 1)
    zs = np.sqrt(us + shift)
    vals = np.exp(-us) * interp_table(table, h, zs) / (2.0 * zs)
    total += float(np.dot(uniform_weights(m, (u_hi - u_lo) / m), vals))
    return total


def _extended_bullet(f: EvenFn, zeta_max: float) -> tuple[np.ndarray, float]:
    """Self-convolution table on an extended grid reaching ``zeta_max``."""
    h = f.grid.spacing
    n_ext = max(f.grid.n_points, int(math.ceil(zeta_max / h - 1e-12)) + 1)
    fv = f.extended_values(n_ext)
    return bullet_table_values(fv, fv, h), h


def j_functional(f: EvenFn, beta: float, eta: float) -> float:
    """``J(eta) = int_{beta*eta}^{eta} exp(beta^2 eta^2 - z^2) (f*f)(z) dz``.

    The exponent ``beta^2 eta^2 - z^2`` is non-positive on the whole range, so
    no large exponential is ever formed.
    """
    _require_psi(f, "j_functional")
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    ae = abs(eta)
    table, h = _extended_bullet(f, ae)
    return gaussian_band_integral(table, h, beta * ae, ae, beta * beta * ae * ae)


def j_functional_profile(f: EvenFn, beta: float) -> EvenFn:
    """``J`` sampled at all grid nodes (even in eta), sharing one table."""
    _require_psi(f, "j_functional_profile")
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    table, h = _extended_bullet(f, f.grid.half_width)
    vals = np.array(
        [gaussian_band_integral(table, h, beta * x, x, beta * beta * x * x)
         for x in f.grid.nodes()]
    )
    return EvenFn(f.grid, vals, max(f.tail_rate, 1.0), Representation.PSI)


# -- Gaussian-weighted representation ---------------------------------------

# exp(+z^2) stays representable up to this z; the extended tables for the
# bounded-kernel operator must not cross it
PHI_SAFE_HALF_WIDTH = 26.0


def phi_extended_values(phi: EvenFn, n_ext: int) -> np.ndarray:
    """Extension of Gaussian-weighted samples past the grid end.

    The stored tail rate of a PHI function is the local log-slope
    ``psi_rate + 2L``; the companion of the raw-representation tail model is
    ``phi(L) * exp(-(x^2 - L^2) - psi_rate (x - L))``, which this extension
    uses (the plain exponential model badly under-decays for a Gaussian).
    """
    if phi.repr_form is not Representation.PHI:
        raise ValueError("phi_extended_values expects the PHI representation")
    n = phi.grid.n_points
    out = np.empty(n_ext)
    out[: min(n, n_ext)] = phi.values[: min(n, n_ext)]
    if n_ext > n:
        h = phi.grid.spacing
        L = phi.grid.half_width
        psi_rate = max(phi.tail_rate - 2.0 * L, 1e-12)
        xs = np.arange(n, n_ext) * h
        out[n:] = phi.values[-1] * np.exp(-(xs * xs - L * L) - psi_rate * (xs - L))
    return out


def phi_pair_table(phi: EvenFn, zeta_max: float) -> tuple[np.ndarray, float]:
    """Table ``T(z_i) = int_0^{z_i} phi(u) phi(z_i - u) exp(-2u(z_i - u)) du``.

    Every factor of the integrand is bounded, so the construction is
    overflow-free; the integrand equals ``exp(-z^2) psi(u) psi(z-u)`` whose
    z-derivatives are governed by the slowly-varying raw factors, so the
    uniform rule keeps full order.  Equals ``exp(-z^2) (psi*psi)(z)``.
    """
    if phi.repr_form is not Representation.PHI:
        raise ValueError("phi_pair_table expects the Gaussian-weighted (PHI) representation")
    h = phi.grid.spacing
    n_ext = max(phi.grid.n_points, int(math.ceil(zeta_max / h - 1e-12)) + 1)
    if (n_ext - 1) * h > PHI_SAFE_HALF_WIDTH:
        raise OverflowError(
            f"extended table reaches {(n_ext - 1) * h}, beyond the exp(+z^2)-safe range"
        )
    pv = phi_extended_values(phi, n_ext)
    xs = np.arange(n_ext) * h
    out = np.zeros(n_ext)
    for i in range(1, n_ext):
        kern = np.exp(-2.0 * xs[: i + 1] * xs[i::-1])
        out[i] = float(np.dot(uniform_weights(i, h), pv[: i + 1] * pv[i::-1] * kern))
    return out, h


def phi_zeta_max(beta: float, L: float) -> float:
    """Table reach for the outer integral: contributions beyond
    ``sqrt(L^2 + R)`` are below ``e^-R`` of the local scale."""
    return min(L / beta, math.sqrt(L * L + RANGE_EXPONENT))


def phi_nonlinear_term(phi: EvenFn, beta: float, eta: float) -> float:
    """Nonlinear part of the Gaussian-weighted operator:
    ``2 int_eta^{eta/beta} T(z) dz`` with ``T`` from :func:`phi_pair_table`."""
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    ae = abs(eta)
    L = max(phi.grid.half_width, ae)
    table, h = phi_pair_table(phi, phi_zeta_max(beta, L))
    xs = np.arange(len(table)) * h
    smooth = table * np.exp(xs * xs)  # = (psi*psi) by the defining identity
    hi = min(ae / beta, math.sqrt(ae * ae + RANGE_EXPONENT))
    # T(z) = exp(-z^2) smooth(z); band integral with shift 0 against exp(+eta^2)
    # amplification folded in analytically:
    return 2.0 * math.exp(-ae * ae) * gaussian_band_integral(
        smooth, h, ae, hi, ae * ae
    )
