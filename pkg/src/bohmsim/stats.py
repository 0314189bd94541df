"""Small statistics helpers: KS distances, grid CDFs, line fits."""
from __future__ import annotations

import numpy as np

from .grids import RealField1D

__all__ = [
    "KS_C99",
    "KS_C95",
    "grid_cdf",
    "ks_statistic",
    "ks_two_sample",
    "fit_line",
]

# Asymptotic one-sample KS critical coefficients c(alpha): D_crit = c / sqrt(n).
KS_C99 = 1.63
KS_C95 = 1.36


def grid_cdf(rho: RealField1D) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative trapezoid CDF of a grid density, normalized to end at 1."""
    vals = np.clip(rho.values, 0.0, None)
    cell = 0.5 * (vals[:-1] + vals[1:]) * rho.grid.dx
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    total = cdf[-1]
    if total <= 0:
        raise ValueError("density integrates to zero")
    return rho.grid.x(), cdf / total


def ks_statistic(samples: np.ndarray, rho: RealField1D) -> float:
    """One-sample KS distance of samples against a grid density."""
    xs, cdf = grid_cdf(rho)
    s = np.sort(np.asarray(samples, dtype=float))
    n = len(s)
    f = np.interp(s, xs, cdf, left=0.0, right=1.0)
    hi = np.max(np.arange(1, n + 1) / n - f)
    lo = np.max(f - np.arange(0, n) / n)
    return float(max(hi, lo))


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample KS distance."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    allv = np.concatenate([a, b])
    fa = np.searchsorted(a, allv, side="right") / len(a)
    fb = np.searchsorted(b, allv, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


def fit_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least-squares line fit; returns (slope, intercept, slope_stderr)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    if n > 2:
        resid = y - (slope * x + intercept)
        s2 = np.sum(resid**2) / (n - 2)
        stderr = float(np.sqrt(s2 / sxx))
    else:
        stderr = 0.0
    return slope, intercept, stderr
