"""Spontaneous localization: Poisson-timed Gaussian hits and the matching
master equation.

Hit operator on the line: L(z) = (pi r_C^2)^(-1/4) exp(-(x-z)^2 / (2 r_C^2)),
whose center law p(z) = ||L(z) psi||^2 integrates to exactly 1.  Jump times
are snapped to the nearest propagator substep boundary; the default dt keeps
the snap error below 1e-3 of the mean inter-event gap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CollapseToNullError, IntegratorToleranceError, ResourceLimitError
from .grids import NATURAL, ComplexField1D, Grid1D, PotentialSpec, RealField1D, UnitsContext
from .bohm import DensityMatrix1D
from .propagation import StrangStepper, check_aliasing, sample_from_density

__all__ = [
    "GrwParams",
    "PoissonClock",
    "CollapseEvent",
    "amplified_rate",
    "localization_profile",
    "apply_localization",
    "collapse_center_pdf",
    "sample_collapse_center",
    "default_jump_dt",
    "evolve_grw",
    "grw_ensemble",
    "master_equation_evolve",
]

MAX_EXPECTED_EVENTS = 1e6


@dataclass(frozen=True)
class GrwParams:
    """Single-particle rate, localization width, and particle count."""

    lambda_rate: float
    r_c: float
    n_particles: int = 1

    def __post_init__(self):
        if self.lambda_rate <= 0:
            raise ValueError("lambda_rate must be positive")
        if self.r_c <= 0:
            raise ValueError("r_c must be positive")
        if self.n_particles < 1:
            raise ValueError("n_particles must be at least 1")

    @property
    def effective_rate(self) -> float:
        return self.n_particles * self.lambda_rate


def amplified_rate(params: GrwParams) -> float:
    """Total hit rate seen by the center of mass: N * lambda."""
    return params.effective_rate


class PoissonClock:
    """Exponential inter-event gaps via inverse CDF of a uniform stream."""

    def __init__(self, rate: float, rng: np.random.Generator):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.rng = rng

    def next_gap(self) -> float:
        return -math.log1p(-self.rng.random()) / self.rate

    def sample_times(self, T: float) -> np.ndarray:
        """Event times in (0, T], drawn sequentially."""
        times = []
        t = self.next_gap()
        while t <= T:
            times.append(t)
            t += self.next_gap()
        return np.array(times)


@dataclass(frozen=True)
class CollapseEvent:
    time: float
    center: float
    pre_norm: float


def localization_profile(x: np.ndarray, z: float, r_c: float) -> np.ndarray:
    return (np.pi * r_c**2) ** (-0.25) * np.exp(-((x - z) ** 2) / (2.0 * r_c**2))


def apply_localization(psi: ComplexField1D, z: float, r_c: float) -> tuple[ComplexField1D, float]:
    """Multiply by L(z) and renormalize; returns (field, pre-collapse norm)."""
    hit = psi.values * localization_profile(psi.grid.x(), z, r_c)
    pre_norm = float(np.sqrt(np.sum(np.abs(hit) ** 2) * psi.grid.dx))
    if pre_norm < 1e-14:
        raise CollapseToNullError(f"localization at z={z:.6g} annihilated the state")
    return ComplexField1D(psi.grid, hit / pre_norm), pre_norm


def _center_kernel_fft(grid: Grid1D, r_c: float) -> np.ndarray:
    # squared localization profile on periodic offsets, ready for cyclic convolution
    u = grid.dx * np.arange(grid.n)
    L = grid.length
    u = (u + 0.5 * L) % L - 0.5 * L
    kernel = (np.pi * r_c**2) ** (-0.5) * np.exp(-(u**2) / r_c**2)
    return np.fft.fft(kernel)


def collapse_center_pdf(psi: ComplexField1D, r_c: float) -> RealField1D:
    """p(z) = ||L(z) psi||^2: |psi|^2 convolved with the squared profile."""
    dens = np.abs(psi.values) ** 2
    pdf = np.fft.ifft(np.fft.fft(dens) * _center_kernel_fft(psi.grid, r_c)).real * psi.grid.dx
    return RealField1D(psi.grid, np.clip(pdf, 0.0, None))


def sample_collapse_center(
    psi: ComplexField1D, r_c: float, rng: np.random.Generator, n: int = 1
) -> np.ndarray:
    return sample_from_density(collapse_center_pdf(psi, r_c), rng, n)


def default_jump_dt(rate: float, T: float) -> float:
    """Snap-rule default: dt <= 1e-3 * mean inter-event gap (and <= T)."""
    return min(1e-3 / rate, T)


def _snap_schedule(rng: np.random.Generator, rate: float, T: float, dt: float, steps: int):
    """Event boundary indices for one run (times snapped to k*dt)."""
    clock = PoissonClock(rate, rng)
    times = clock.sample_times(T)
    return np.clip(np.round(times / dt).astype(np.int64), 0, steps)


def grw_ensemble(
    psi0: ComplexField1D,
    V: PotentialSpec,
    params: GrwParams,
    T: float,
    rngs: list[np.random.Generator],
    units: UnitsContext = NATURAL,
    dt: float | None = None,
) -> tuple[np.ndarray, list[list[CollapseEvent]]]:
    """Advance independent hit-process realizations in one vectorized batch.

    Each realization draws its gaps and centers from its own stream, so a
    batch of size one is bit-identical to evolve_grw with that stream.
    Returns (final field values (runs, n), per-run event logs).
    """
    rate = params.effective_rate
    if rate * T > MAX_EXPECTED_EVENTS:
        raise ResourceLimitError(f"expected event count {rate * T:.3g} exceeds {MAX_EXPECTED_EVENTS:.0g}")
    check_aliasing(psi0)
    if dt is None:
        dt = default_jump_dt(rate, T)
    steps = max(1, int(round(T / dt)))
    grid = psi0.grid
    stepper = StrangStepper(grid, V, units, dt)
    runs = len(rngs)
    vals = np.tile(psi0.values, (runs, 1))
    kernel_fft = _center_kernel_fft(grid, params.r_c)
    profile_x = grid.x()
    logs: list[list[CollapseEvent]] = [[] for _ in range(runs)]
    # boundary index -> runs hit there, preserving each run's event order
    by_boundary: dict[int, list[int]] = {}
    for r in range(runs):
        for idx in _snap_schedule(rngs[r], rate, T, dt, steps):
            by_boundary.setdefault(int(idx), []).append(r)
    for i in range(steps + 1):
        hits = by_boundary.get(i)
        if hits is not None:
            for r in hits:
                dens = np.abs(vals[r]) ** 2
                pdf = np.fft.ifft(np.fft.fft(dens) * kernel_fft).real * grid.dx
                pdf_field = RealField1D(grid, np.clip(pdf, 0.0, None))
                z = float(sample_from_density(pdf_field, rngs[r], 1)[0])
                hit = vals[r] * localization_profile(profile_x, z, params.r_c)
                pre_norm = float(np.sqrt(np.sum(np.abs(hit) ** 2) * grid.dx))
                if pre_norm < 1e-14:
                    raise CollapseToNullError(f"run {r}: localization at z={z:.6g} annihilated the state")
                vals[r] = hit / pre_norm
                logs[r].append(CollapseEvent(i * dt, z, pre_norm))
        if i < steps:
            vals = stepper.step(vals)
    return vals, logs


def evolve_grw(
    psi0: ComplexField1D,
    V: PotentialSpec,
    params: GrwParams,
    T: float,
    rng: np.random.Generator,
    units: UnitsContext = NATURAL,
    dt: float | None = None,
) -> tuple[ComplexField1D, list[CollapseEvent]]:
    """Hybrid evolution: Strang propagation with localization hits at
    Poisson times (snapped to step boundaries)."""
    vals, logs = grw_ensemble(psi0, V, params, T, [rng], units=units, dt=dt)
    return ComplexField1D(psi0.grid, vals[0]), logs[0]


def master_equation_evolve(
    rho0: DensityMatrix1D,
    V: PotentialSpec,
    params: GrwParams,
    T: float,
    units: UnitsContext = NATURAL,
    dt: float | None = None,
    kinetic: bool = True,
) -> DensityMatrix1D:
    """RK4 integration of drho/dt = -(i/hbar)[H,rho] + Lambda(G - 1) o rho,
    G(x,x') = exp(-(x-x')^2 / (4 r_C^2)) applied entrywise.

    kinetic=False drops the Hamiltonian entirely (pure decoherence), used
    to check the closed-form off-diagonal decay.
    """
    grid = rho0.grid
    x = grid.x()
    rate = params.effective_rate
    decay = rate * (np.exp(-((x[:, None] - x[None, :]) ** 2) / (4.0 * params.r_c**2)) - 1.0)
    vvals = V.values(grid)
    vdiff = vvals[:, None] - vvals[None, :]
    kin = 0.5 * units.hbar**2 * grid.k() ** 2 / units.mass

    def rhs(rho: np.ndarray) -> np.ndarray:
        out = decay * rho
        if kinetic:
            krho = np.fft.ifft(kin[:, None] * np.fft.fft(rho, axis=0), axis=0)
            rhok = np.fft.ifft(kin[None, :] * np.fft.fft(rho, axis=1), axis=1)
            out += (-1j / units.hbar) * (krho - rhok + vdiff * rho)
        elif np.any(vdiff):
            out += (-1j / units.hbar) * (vdiff * rho)
        return out

    if dt is None:
        scale = rate + np.max(np.abs(vdiff)) / units.hbar
        if kinetic:
            scale += units.hbar * grid.k_nyquist**2 / units.mass
        dt = 0.5 / scale
    steps = max(1, int(math.ceil(T / dt)))
    dt = T / steps
    rho = rho0.values.astype(np.complex128).copy()
    for i in range(steps):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * dt * k1)
        k3 = rhs(rho + 0.5 * dt * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if i % 16 == 0 or i == steps - 1:
            drift = abs(float(np.real(np.trace(rho)) * grid.dx) - 1.0)
            if drift > 1e-6:
                raise IntegratorToleranceError(f"trace drifted by {drift:.3e} at step {i + 1}")
    return DensityMatrix1D(grid, rho)
