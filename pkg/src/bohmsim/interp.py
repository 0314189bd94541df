"""Local 4-point Lagrange cubic interpolation, vectorized.

Used for trajectory velocity lookups, conditional slices, and the shear
map.  Queries that need points outside the grid return `fill` (fields
are assumed to vanish near the boundary; watchdogs enforce that).
"""
from __future__ import annotations

import numpy as np

__all__ = ["cubic_interp", "cubic_interp_rows", "cubic_interp_fractional"]


def _weights(u):
    um1 = u - 1.0
    um2 = u - 2.0
    up1 = u + 1.0
    return (
        -u * um1 * um2 / 6.0,
        up1 * um1 * um2 / 2.0,
        -up1 * u * um2 / 2.0,
        up1 * u * um1 / 6.0,
    )


def cubic_interp(values, x0: float, dx: float, xq, fill=0.0):
    """Interpolate `values` along its last axis onto positions xq.

    values (..., n) with xq (m,) broadcasts to (..., m); scalar xq drops
    the query axis.
    """
    values = np.asarray(values)
    xq = np.asarray(xq, dtype=float)
    n = values.shape[-1]
    f = (xq - x0) / dx
    i = np.floor(f).astype(np.int64)
    u = f - i
    ok = (i >= 1) & (i <= n - 3)
    ic = np.clip(i, 1, n - 3)
    w0, w1, w2, w3 = _weights(u)
    out = (
        w0 * values[..., ic - 1]
        + w1 * values[..., ic]
        + w2 * values[..., ic + 1]
        + w3 * values[..., ic + 2]
    )
    return np.where(ok, out, fill)


def cubic_interp_rows(values, x0: float, dx: float, xq, fill=0.0):
    """Row r of `values` (R, n) interpolated at the single position xq[r]."""
    values = np.asarray(values)
    xq = np.asarray(xq, dtype=float)
    rows = np.arange(values.shape[0])
    n = values.shape[1]
    f = (xq - x0) / dx
    i = np.floor(f).astype(np.int64)
    u = f - i
    ok = (i >= 1) & (i <= n - 3)
    ic = np.clip(i, 1, n - 3)
    w0, w1, w2, w3 = _weights(u)
    out = (
        w0 * values[rows, ic - 1]
        + w1 * values[rows, ic]
        + w2 * values[rows, ic + 1]
        + w3 * values[rows, ic + 2]
    )
    return np.where(ok, out, fill)


def cubic_interp_fractional(values, frac_idx, fill=0.0):
    """Interpolate along the last axis at per-element fractional indices."""
    values = np.asarray(values)
    n = values.shape[-1]
    i = np.floor(frac_idx).astype(np.int64)
    u = frac_idx - i
    ok = (i >= 1) & (i <= n - 3)
    ic = np.clip(i, 1, n - 3)
    w0, w1, w2, w3 = _weights(u)
    g = lambda off: np.take_along_axis(values, ic + off, axis=-1)
    out = w0 * g(-1) + w1 * g(0) + w2 * g(1) + w3 * g(2)
    return np.where(ok, out, fill)
