"""Numerical laboratory for scale-map fixed points and self-similar blow-up
in the one-dimensional quasi-geostrophic equation (Fourier side)."""

__version__ = "0.1.0"
