"""Center-of-mass bookkeeping and collision amplification for rigid N-particle
system states.

Relative coordinates are frozen spectators here: a collision on any single
constituent k multiplies the center-of-mass conditional state by the same
Gaussian hit it would give a lone particle, so the center of mass feels the
summed rate N * lambda.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bath import BathParticleSpec, InteractionWindow, collision_multiplier
from .errors import ResourceLimitError
from .grids import ComplexField1D, Grid1D
from .grw import PoissonClock
from .interp import cubic_interp
from .stats import fit_line

__all__ = [
    "ManyBodyConfig",
    "com_split",
    "reconstruct",
    "GaussianProductState",
    "SeparableComState",
    "TabulatedComState",
    "ComConditionalState",
    "com_conditional",
    "CollisionOutcome",
    "collision_on_particle_k",
    "exponent_identity_residual",
    "AmplificationReport",
    "measure_amplification",
]


@dataclass(frozen=True)
class ManyBodyConfig:
    """Actual particle positions (the configuration, not the state)."""

    positions: tuple

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(float(p) for p in self.positions))
        if len(self.positions) < 1:
            raise ValueError("need at least one particle")

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def x_cm(self) -> float:
        return float(np.mean(self.positions))

    @property
    def relatives(self) -> np.ndarray:
        """R_k = X_k - X_cm for k = 1..N-1."""
        return np.asarray(self.positions[:-1]) - self.x_cm


def com_split(config: ManyBodyConfig) -> tuple[float, np.ndarray]:
    return config.x_cm, config.relatives


def reconstruct(x_cm: float, relatives: np.ndarray) -> np.ndarray:
    """Invert com_split: X_k = x_cm + R_k, last particle balances the sum."""
    relatives = np.asarray(relatives, dtype=float)
    return np.concatenate([x_cm + relatives, [x_cm - np.sum(relatives)]])


def _particle_offsets(relatives: np.ndarray, n: int) -> np.ndarray:
    """x_k - x_cm for every particle, given the N-1 independent relatives."""
    relatives = np.asarray(relatives, dtype=float)
    if len(relatives) != n - 1:
        raise ValueError(f"expected {n - 1} relative coordinates, got {len(relatives)}")
    if n == 1:
        return np.zeros(1)
    return np.concatenate([relatives, [-np.sum(relatives)]])


@dataclass(frozen=True)
class _HitRecord:
    particle: int
    y_t: float
    g: float
    sigma: float
    center: float


@dataclass(frozen=True)
class GaussianProductState:
    """Product of per-particle Gaussian packets, plus accumulated hits."""

    centers: tuple
    sigmas: tuple
    momenta: tuple
    hbar: float = 1.0
    hits: tuple = ()

    def __post_init__(self):
        if not (len(self.centers) == len(self.sigmas) == len(self.momenta)):
            raise ValueError("centers, sigmas, momenta must have equal length")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError("sigmas must be positive")

    @property
    def n(self) -> int:
        return len(self.centers)

    def conditional_com(self, relatives: np.ndarray, grid: Grid1D) -> ComplexField1D:
        off = _particle_offsets(relatives, self.n)
        x = grid.x()
        vals = np.ones(grid.n, dtype=np.complex128)
        for k in range(self.n):
            xk = x + off[k]
            vals = vals * np.exp(
                -((xk - self.centers[k]) ** 2) / (4.0 * self.sigmas[k] ** 2)
                + 1j * self.momenta[k] * xk / self.hbar
            )
        out = ComplexField1D(grid, vals).normalized()
        for h in self.hits:
            xk = x + off[h.particle]
            out = ComplexField1D(
                grid, out.values * collision_multiplier(xk, h.y_t, h.g, h.sigma, h.center)
            ).normalized()
        return out


@dataclass(frozen=True)
class SeparableComState:
    """State already factorized as phi(x_cm) * chi(relatives)."""

    com_field: ComplexField1D

    @property
    def n(self) -> int:
        return 0  # unconstrained; conditioning ignores relatives entirely

    def conditional_com(self, relatives: np.ndarray, grid: Grid1D | None = None) -> ComplexField1D:
        return self.com_field.normalized()


@dataclass(frozen=True)
class TabulatedComState:
    """Explicit samples over (x_cm, r_1[, r_2]); N up to 3."""

    grid_cm: Grid1D
    rel_grids: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.rel_grids) > 2:
            raise ResourceLimitError("tabulated states support at most N=3 (two relative axes)")
        expected = (self.grid_cm.n,) + tuple(g.n for g in self.rel_grids)
        if np.asarray(self.values).shape != expected:
            raise ValueError("values shape does not match grids")

    @property
    def n(self) -> int:
        return 1 + len(self.rel_grids)

    def conditional_com(self, relatives: np.ndarray, grid: Grid1D | None = None) -> ComplexField1D:
        relatives = np.asarray(relatives, dtype=float)
        if len(relatives) != len(self.rel_grids):
            raise ValueError("wrong number of relative coordinates")
        vals = np.asarray(self.values, dtype=np.complex128)
        for r, g in zip(relatives[::-1], self.rel_grids[::-1]):
            vals = cubic_interp(vals, g.x_min, g.dx, float(r))
        return ComplexField1D(self.grid_cm, vals).normalized()


@dataclass(frozen=True)
class ComConditionalState:
    field: ComplexField1D
    relatives: tuple


def com_conditional(state, relatives, grid: Grid1D | None = None) -> ComConditionalState:
    """Center-of-mass wave function conditioned on the relative coordinates."""
    rel = np.atleast_1d(np.asarray(relatives, dtype=float))
    fieldv = state.conditional_com(rel, grid)
    return ComConditionalState(fieldv, tuple(rel.tolist()))


def exponent_identity_residual(
    X0: np.ndarray, Y0: float, g: float, x_cm: float, r: np.ndarray, k: int
) -> float:
    """Max |(Y_k(t) - g x_k) - ([Y0 + g(Xcm0 + Rk0 - r_k)] - g x_cm)|.

    X0 are the actual initial positions; (x_cm, r) is any evaluation point
    of the conditional parametrization, x_k = x_cm + r_k.
    """
    cfg = ManyBodyConfig(tuple(X0))
    off = _particle_offsets(np.asarray(r, dtype=float), cfg.n)
    off0 = _particle_offsets(cfg.relatives, cfg.n)
    x_k = x_cm + off[k]
    y_k_t = Y0 + cfg.positions[k] * g
    lhs = y_k_t - g * x_k
    rhs = (Y0 + g * (cfg.x_cm + off0[k] - off[k])) - g * x_cm
    return float(np.max(np.abs(lhs - rhs)))


@dataclass
class CollisionOutcome:
    state: GaussianProductState
    conditional: ComConditionalState
    com_multiplier_residual: float


def collision_on_particle_k(
    state: GaussianProductState,
    config: ManyBodyConfig,
    k: int,
    spec: BathParticleSpec,
    Y0: float,
    w: InteractionWindow,
    t: float,
    grid: Grid1D,
) -> CollisionOutcome:
    """Hit constituent k; the conditional center-of-mass state picks up the
    same Gaussian multiplier centered through Y_cm(t) = Y0 + g X_cm0.

    Y0 is the bath particle's offset from its packet center.  The returned
    residual is the sup-norm gap between the conditional of the updated
    state and the closed-form multiplier route; both are also checked here.
    """
    if not isinstance(state, GaussianProductState):
        raise ValueError("collisions are implemented for Gaussian product states")
    if not (0 <= k < state.n) or state.n != config.n:
        raise ValueError("particle index out of range or config mismatch")
    g = float(w.g(t))
    y_k_t = spec.center + Y0 + config.positions[k] * g
    new_state = replace(state, hits=state.hits + (_HitRecord(k, y_k_t, g, spec.sigma, spec.center),))
    cond_new = com_conditional(new_state, config.relatives, grid)
    # closed-form route: multiplier on the pre-collision conditional state
    cond_old = com_conditional(state, config.relatives, grid)
    y_cm_t = spec.center + Y0 + config.x_cm * g
    mult = collision_multiplier(grid.x(), y_cm_t, g, spec.sigma, spec.center)
    ref = ComplexField1D(grid, cond_old.field.values * mult).normalized()
    residual = float(np.max(np.abs(cond_new.field.values - ref.values)))
    if residual > 1e-8:
        raise ValueError(f"center-of-mass multiplier identity violated: residual {residual:.3e}")
    return CollisionOutcome(new_state, cond_new, residual)


@dataclass
class AmplificationReport:
    lam: float
    rows: list  # (N, fitted_rate, stderr)
    slope: float
    slope_stderr: float


def measure_amplification(
    n_values,
    lam: float,
    runs: int,
    T: float,
    rng: np.random.Generator,
) -> AmplificationReport:
    """Fit the observed center-of-mass hit rate against particle count.

    Each run draws a Poisson stream at total rate N*lambda with uniformly
    chosen target particles; every collision localizes the center of mass,
    so the fitted slope of rate vs N estimates lambda.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if runs < 100:
        raise ValueError("need at least 100 runs per N")
    rows = []
    for n in n_values:
        if n < 1:
            raise ValueError("N must be at least 1")
        counts = np.empty(runs)
        for i in range(runs):
            times = PoissonClock(n * lam, rng).sample_times(T)
            targets = rng.integers(0, n, size=len(times))  # which constituent got hit
            counts[i] = len(targets)
        rate = counts.mean() / T
        stderr = counts.std(ddof=1) / math.sqrt(runs) / T
        rows.append((int(n), float(rate), float(stderr)))
    ns = np.array([r[0] for r in rows], dtype=float)
    rates = np.array([r[1] for r in rows])
    slope, _, slope_err = fit_line(ns, rates)
    return AmplificationReport(lam, rows, slope, slope_err)
