"""FFT split-operator propagation, densities, sampling, expectations.

One Strang step is exp(-iV dt/2hbar) . IFFT . exp(-i hbar k^2 dt/2m) . FFT
. exp(-iV dt/2hbar); adjacent half-steps are intentionally not merged so
that every call sees the identical factor sequence (bit-stable stepping).
"""
from __future__ import annotations

import numpy as np

from .errors import (
    AliasingError,
    DegenerateDistributionError,
    IntegratorToleranceError,
    NumericOverflowError,
)
from .grids import NATURAL, ComplexField1D, Grid1D, PotentialSpec, RealField1D, UnitsContext

__all__ = [
    "StrangStepper",
    "split_step_propagate",
    "probability_density",
    "sample_from_density",
    "expectation",
    "position_spread",
    "momentum_spread",
    "spectral_derivative",
    "spectral_tail_fraction",
    "check_aliasing",
    "boundary_density",
]

SPECTRAL_TAIL_LIMIT = 1e-8
NORM_DRIFT_LIMIT = 1e-10
BOUNDARY_DENSITY_LIMIT = 1e-10


def spectral_tail_fraction(psi: ComplexField1D) -> float:
    """Fraction of spectral mass at |k| >= 0.8 k_Nyquist."""
    spec = np.abs(np.fft.fft(psi.values)) ** 2
    total = np.sum(spec)
    if total == 0:
        return 0.0
    tail = np.abs(psi.grid.k()) >= 0.8 * psi.grid.k_nyquist
    return float(np.sum(spec[tail]) / total)


def check_aliasing(psi: ComplexField1D) -> None:
    frac = spectral_tail_fraction(psi)
    if frac >= SPECTRAL_TAIL_LIMIT:
        raise AliasingError(
            f"spectral tail mass {frac:.3e} >= {SPECTRAL_TAIL_LIMIT:.0e}; "
            "refine the grid or shrink the momentum content"
        )


def boundary_density(values: np.ndarray) -> float:
    """Largest |psi|^2 within two cells of either grid edge."""
    dens = np.abs(values) ** 2
    return float(max(dens[..., :2].max(), dens[..., -2:].max()))


class StrangStepper:
    """Precomputed second-order split-step factors for (grid, V, units, dt).

    step() acts on the last axis, so a (runs, n) batch of independent
    realizations advances in one call.
    """

    def __init__(self, grid: Grid1D, V: PotentialSpec, units: UnitsContext, dt: float):
        if dt == 0:
            raise ValueError("dt must be nonzero")
        self.grid = grid
        self.dt = dt
        v = V.values(grid)
        k = grid.k()
        self.half_v = np.exp(-0.5j * v * dt / units.hbar)
        self.kinetic = np.exp(-0.5j * units.hbar * k * k * dt / units.mass)

    def step(self, values: np.ndarray) -> np.ndarray:
        out = values * self.half_v
        out = np.fft.fft(out, axis=-1)
        out *= self.kinetic
        out = np.fft.ifft(out, axis=-1)
        out *= self.half_v
        return out


def split_step_propagate(
    psi: ComplexField1D,
    V: PotentialSpec,
    units: UnitsContext,
    dt: float,
    steps: int,
) -> ComplexField1D:
    """Advance a normalized field by `steps` Strang steps of size dt."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    check_aliasing(psi)
    stepper = StrangStepper(psi.grid, V, units, dt)
    vals = psi.values.copy()
    for _ in range(steps):
        vals = stepper.step(vals)
    if not np.all(np.isfinite(vals)):
        raise NumericOverflowError("field became non-finite during propagation")
    out = ComplexField1D(psi.grid, vals)
    if abs(out.norm() - psi.norm()) > NORM_DRIFT_LIMIT:
        raise IntegratorToleranceError(
            f"norm drifted by {abs(out.norm() - psi.norm()):.3e} (> {NORM_DRIFT_LIMIT:.0e})"
        )
    return out


def probability_density(psi: ComplexField1D) -> RealField1D:
    """|psi|^2 for a normalized field."""
    dens = psi.density()
    if abs(dens.integral() - 1.0) > 1e-6:
        raise ValueError("field is not normalized")
    return dens


def sample_from_density(rho: RealField1D, rng: np.random.Generator, n: int) -> np.ndarray:
    """Inverse-CDF draw of n points, linear interpolation inside cells."""
    if n <= 0:
        raise ValueError("n must be positive")
    vals = rho.values
    if np.min(vals) < -1e-12 * max(np.max(vals), 0.0):
        raise ValueError("density has negative entries")
    vals = np.clip(vals, 0.0, None)
    cell = 0.5 * (vals[:-1] + vals[1:]) * rho.grid.dx
    cdf = np.concatenate([[0.0], np.cumsum(cell)])
    total = cdf[-1]
    if total <= 0.0:
        raise DegenerateDistributionError("density is identically zero")
    u = rng.random(n) * total
    j = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, len(cell) - 1)
    mass = cell[j]
    frac = np.where(mass > 0, (u - cdf[j]) / np.where(mass > 0, mass, 1.0), 0.0)
    x = rho.grid.x()
    return x[j] + frac * rho.grid.dx


def spectral_derivative(values: np.ndarray, grid: Grid1D) -> np.ndarray:
    """d/dx along the last axis via FFT."""
    return np.fft.ifft(1j * grid.k() * np.fft.fft(values, axis=-1), axis=-1)


def expectation(psi: ComplexField1D, observable: str, units: UnitsContext = NATURAL) -> float:
    """<x> or <p> of a normalized field."""
    if abs(psi.norm() - 1.0) > 1e-6:
        raise ValueError("field is not normalized")
    dx = psi.grid.dx
    if observable == "position":
        return float(np.sum(psi.grid.x() * np.abs(psi.values) ** 2) * dx)
    if observable == "momentum":
        dpsi = spectral_derivative(psi.values, psi.grid)
        return float(np.real(np.sum(np.conj(psi.values) * (-1j * units.hbar) * dpsi)) * dx)
    raise ValueError(f"unknown observable {observable!r}")


def position_spread(psi: ComplexField1D) -> float:
    dx = psi.grid.dx
    dens = np.abs(psi.values) ** 2
    x = psi.grid.x()
    m1 = np.sum(x * dens) * dx
    m2 = np.sum(x * x * dens) * dx
    return float(np.sqrt(max(m2 - m1 * m1, 0.0)))


def momentum_spread(psi: ComplexField1D, units: UnitsContext = NATURAL) -> float:
    spec = np.abs(np.fft.fft(psi.values)) ** 2
    spec /= np.sum(spec)
    p = units.hbar * psi.grid.k()
    m1 = np.sum(p * spec)
    m2 = np.sum(p * p * spec)
    return float(np.sqrt(max(m2 - m1 * m1, 0.0)))
