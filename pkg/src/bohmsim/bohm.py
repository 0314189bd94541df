"""Guidance velocity fields, trajectory ensembles, conditional wave functions.

The velocity field is v = (hbar/m) Im(dpsi/dx / psi).  Near nodes the
denominator is regularized by eps = 1e-12 * max|psi|^2 and the result is
clamped to 10 * (hbar/m) * k_Nyquist, so trajectories stay finite when
they graze an interference zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, DomainEscapeError, NullSliceError
from .grids import NATURAL, ComplexField1D, Grid1D, JointField2D, PotentialSpec, RealField1D, UnitsContext
from .interp import cubic_interp, cubic_interp_rows
from .propagation import (
    BOUNDARY_DENSITY_LIMIT,
    StrangStepper,
    boundary_density,
    check_aliasing,
    sample_from_density,
    spectral_derivative,
)
from .stats import KS_C99, ks_statistic

__all__ = [
    "VelocityFieldFrame",
    "TrajectoryEnsemble",
    "velocity_field",
    "velocity_values",
    "advance_ensemble",
    "sample_ensemble",
    "guided_run",
    "verify_equivariance",
    "EquivarianceReport",
    "ConditionalWaveFunction",
    "conditional_wavefunction",
    "DensityMatrix1D",
    "reduced_density_matrix",
    "reduced_vs_conditional_identity",
    "IdentityReport",
]

NODE_EPS_FACTOR = 1e-12
VELOCITY_CLAMP = 10.0


@dataclass
class VelocityFieldFrame:
    grid: Grid1D
    time: float
    values: np.ndarray = field(repr=False)


def velocity_values(values: np.ndarray, grid: Grid1D, units: UnitsContext) -> np.ndarray:
    """Guidance velocity on the grid; acts on the last axis (batch-safe)."""
    dpsi = spectral_derivative(values, grid)
    dens = np.abs(values) ** 2
    eps = NODE_EPS_FACTOR * np.max(dens, axis=-1, keepdims=True)
    v = (units.hbar / units.mass) * np.imag(np.conj(values) * dpsi) / (dens + eps)
    vmax = VELOCITY_CLAMP * (units.hbar / units.mass) * grid.k_nyquist
    return np.clip(v, -vmax, vmax)


def velocity_field(psi: ComplexField1D, units: UnitsContext = NATURAL, time: float = 0.0) -> VelocityFieldFrame:
    return VelocityFieldFrame(psi.grid, time, velocity_values(psi.values, psi.grid, units))


@dataclass
class TrajectoryEnsemble:
    """Positions of an equilibrium-sampled ensemble at a common time.

    seeds records the per-trajectory stream ids (master_seed XOR index);
    the guidance flow itself is deterministic.
    """

    positions: np.ndarray
    time: float
    seeds: np.ndarray | None = None


def sample_ensemble(
    psi: ComplexField1D, n: int, rng: np.random.Generator, master_seed: int = 0
) -> TrajectoryEnsemble:
    """Draw n initial positions from |psi|^2."""
    pos = sample_from_density(psi.density(), rng, n)
    seeds = np.uint64(master_seed) ^ np.arange(n, dtype=np.uint64)
    return TrajectoryEnsemble(pos, 0.0, seeds)


def _check_interior(positions: np.ndarray, grid: Grid1D, time: float) -> None:
    lo = grid.x_min + 2 * grid.dx
    hi = grid.x_max - 3 * grid.dx
    bad = np.where((positions < lo) | (positions > hi))[0]
    if bad.size:
        raise DomainEscapeError(
            f"trajectory {int(bad[0])} left the grid interior at t={time:.6g} "
            f"(x={positions[bad[0]]:.6g})"
        )


def _rk4_pair(positions: np.ndarray, f0: VelocityFieldFrame, f1: VelocityFieldFrame) -> np.ndarray:
    """One RK4 step from f0.time to f1.time, linear in time between frames.

    Frames may hold one field (n,) queried at every position, or one field
    per trajectory (len(positions), n) queried row by row.
    """
    grid = f0.grid
    h = f1.time - f0.time
    x0, dx = grid.x_min, grid.dx
    interp = cubic_interp_rows if np.ndim(f0.values) == 2 else cubic_interp

    def vel(pos, w):
        a = interp(f0.values, x0, dx, pos, fill=np.nan)
        b = interp(f1.values, x0, dx, pos, fill=np.nan)
        return (1.0 - w) * a + w * b

    k1 = vel(positions, 0.0)
    k2 = vel(positions + 0.5 * h * k1, 0.5)
    k3 = vel(positions + 0.5 * h * k2, 0.5)
    k4 = vel(positions + h * k3, 1.0)
    out = positions + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if np.any(np.isnan(out)):
        bad = int(np.where(np.isnan(out))[0][0])
        raise DomainEscapeError(f"trajectory {bad} left the grid interior at t={f1.time:.6g}")
    return out


def advance_ensemble(ens: TrajectoryEnsemble, frames: list[VelocityFieldFrame]) -> TrajectoryEnsemble:
    """Transport an ensemble through a sequence of velocity frames."""
    if len(frames) < 2:
        raise ValueError("need at least two frames")
    pos = np.asarray(ens.positions, dtype=float).copy()
    _check_interior(pos, frames[0].grid, frames[0].time)
    for f0, f1 in zip(frames[:-1], frames[1:]):
        pos = _rk4_pair(pos, f0, f1)
        _check_interior(pos, f1.grid, f1.time)
    return TrajectoryEnsemble(pos, frames[-1].time, ens.seeds)


def guided_run(
    psi0: ComplexField1D,
    V: PotentialSpec,
    units: UnitsContext,
    positions: np.ndarray,
    dt: float,
    steps: int,
    record_every: int = 1,
    watchdog: bool = True,
):
    """Co-evolve field and trajectories; returns (times, paths, final field).

    paths has shape (n_records, n_traj); the field advances by Strang
    steps and trajectories by RK4 between consecutive velocity frames.
    """
    check_aliasing(psi0)
    stepper = StrangStepper(psi0.grid, V, units, dt)
    vals = psi0.values.copy()
    pos = np.asarray(positions, dtype=float).copy()
    frame = VelocityFieldFrame(psi0.grid, 0.0, velocity_values(vals, psi0.grid, units))
    times = [0.0]
    paths = [pos.copy()]
    for i in range(1, steps + 1):
        vals = stepper.step(vals)
        if watchdog and boundary_density(vals) >= BOUNDARY_DENSITY_LIMIT:
            raise DomainError(f"field reached the grid boundary at t={i * dt:.6g}")
        nxt = VelocityFieldFrame(psi0.grid, i * dt, velocity_values(vals, psi0.grid, units))
        pos = _rk4_pair(pos, frame, nxt)
        frame = nxt
        if i % record_every == 0 or i == steps:
            times.append(i * dt)
            paths.append(pos.copy())
    return np.array(times), np.array(paths), ComplexField1D(psi0.grid, vals)


@dataclass
class EquivarianceReport:
    n: int
    entries: list  # (time, ks, critical, passed)

    @property
    def passed(self) -> bool:
        return all(e[3] for e in self.entries)


def verify_equivariance(
    psi0: ComplexField1D,
    V: PotentialSpec,
    units: UnitsContext,
    n: int,
    checkpoints,
    dt: float,
    rng: np.random.Generator,
) -> EquivarianceReport:
    """Sample |psi_0|^2, transport, and KS-compare against |psi_t|^2.

    Checkpoints are snapped to whole propagator steps; the KS threshold
    is the 99% critical value 1.63/sqrt(n).
    """
    if n < 1000:
        raise ValueError("need n >= 1000 samples for a meaningful KS verdict")
    checkpoints = sorted(float(t) for t in checkpoints)
    steps_at = [int(round(t / dt)) for t in checkpoints]
    ens = sample_ensemble(psi0, n, rng)
    pos = ens.positions.copy()
    stepper = StrangStepper(psi0.grid, V, units, dt)
    vals = psi0.values.copy()
    frame = VelocityFieldFrame(psi0.grid, 0.0, velocity_values(vals, psi0.grid, units))
    crit = KS_C99 / np.sqrt(n)
    entries = []
    step = 0
    for target in steps_at:
        while step < target:
            vals = stepper.step(vals)
            step += 1
            nxt = VelocityFieldFrame(psi0.grid, step * dt, velocity_values(vals, psi0.grid, units))
            pos = _rk4_pair(pos, frame, nxt)
            frame = nxt
        dens = RealField1D(psi0.grid, np.abs(vals) ** 2)
        ks = ks_statistic(pos, dens)
        entries.append((step * dt, ks, crit, ks < crit))
    return EquivarianceReport(n, entries)


@dataclass
class ConditionalWaveFunction:
    """System wave function conditioned on an environment coordinate."""

    field: ComplexField1D
    y: float
    slice_norm: float


def conditional_wavefunction(joint: JointField2D, Y: float) -> ConditionalWaveFunction:
    """Slice the joint field at y=Y (cubic in y) and normalize."""
    gy = joint.grid_y
    raw = cubic_interp(joint.values, gy.x_min, gy.dx, float(Y))
    nrm = float(np.sqrt(np.sum(np.abs(raw) ** 2) * joint.grid_x.dx))
    if nrm <= 1e-14:
        raise NullSliceError(f"slice norm {nrm:.3e} at y={Y:.6g}; conditioning point on a node")
    return ConditionalWaveFunction(ComplexField1D(joint.grid_x, raw / nrm), float(Y), nrm)


@dataclass
class DensityMatrix1D:
    """Position-representation density matrix; trace convention sum(diag)*dx."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError("density matrix shape does not match grid")

    def trace(self) -> float:
        return float(np.real(np.trace(self.values)) * self.grid.dx)

    def validate(self, psd: bool | None = None) -> None:
        v = self.values
        if np.max(np.abs(v - v.conj().T)) > 1e-10:
            raise ValueError("density matrix is not Hermitian within 1e-10")
        if abs(self.trace() - 1.0) > 1e-10:
            raise ValueError("density matrix trace differs from 1 by more than 1e-10")
        if psd is None:
            psd = self.grid.n <= 256
        if psd:
            w = np.linalg.eigvalsh(0.5 * (v + v.conj().T) * self.grid.dx)
            if w.min() <= -1e-8:
                raise ValueError(f"density matrix has eigenvalue {w.min():.3e} < -1e-8")

    @classmethod
    def from_pure(cls, psi: ComplexField1D) -> "DensityMatrix1D":
        return cls(psi.grid, np.outer(psi.values, np.conj(psi.values)))


def reduced_density_matrix(joint: JointField2D) -> DensityMatrix1D:
    """Trace out the environment: rho(x,x') = int dy psi(x,y) psi*(x',y)."""
    rho = joint.values @ joint.values.conj().T * joint.grid_y.dx
    return DensityMatrix1D(joint.grid_x, rho)


@dataclass
class IdentityReport:
    max_dev: float
    n_env_samples: int | None
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_dev < self.tolerance


def reduced_vs_conditional_identity(
    joint: JointField2D,
    n_env_samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> IdentityReport:
    """Check rho_S equals the conditional-projector average over Y.

    n_env_samples=None integrates over every grid y (quadrature); an
    integer runs the Monte Carlo route with Born-weighted Y draws.
    """
    rho_s = reduced_density_matrix(joint).values
    gx, gy = joint.grid_x, joint.grid_y
    if n_env_samples is None:
        acc = np.zeros_like(rho_s)
        dens_y = np.sum(np.abs(joint.values) ** 2, axis=0) * gx.dx  # p(y)
        for j in range(gy.n):
            p = dens_y[j]
            if p <= 0.0:
                continue
            col = joint.values[:, j]
            s2 = np.sum(np.abs(col) ** 2) * gx.dx
            psi_c = col / np.sqrt(s2)
            acc += (p * gy.dx) * np.outer(psi_c, np.conj(psi_c))
        tol = 1e-9
        dev = float(np.max(np.abs(acc - rho_s)))
        return IdentityReport(dev, None, tol)
    if rng is None:
        raise ValueError("Monte Carlo route needs an rng")
    ys = sample_from_density(joint.marginal_y(), rng, n_env_samples)
    cols = cubic_interp(joint.values, gy.x_min, gy.dx, ys)  # (nx, n_samples)
    norms = np.sqrt(np.sum(np.abs(cols) ** 2, axis=0) * gx.dx)
    cols = cols / norms
    acc = np.einsum("is,js->ij", cols, np.conj(cols)) / n_env_samples
    dev = float(np.max(np.abs(acc - rho_s)))
    tol = 5.0 / np.sqrt(n_env_samples)
    return IdentityReport(dev, n_env_samples, tol)
