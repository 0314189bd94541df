"""One-dimensional collision model: von-Neumann coupling to Gaussian bath
packets, its exact shear solution, and the induced localization law.

A collision with window weight g_t multiplies the conditional system state
by exp(-((Y_t - a) - g_t x)^2 / (4 sigma^2)); at g=1 this is a Gaussian hit
of width r_C = sqrt(2) sigma centered at Z = X0 + Y0, with the packet
center a dropping out exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.constants as const

from .bohm import ConditionalWaveFunction, VelocityFieldFrame, _rk4_pair, velocity_values
from .errors import DomainError, ResourceLimitError
from .grids import NATURAL, ComplexField1D, Grid1D, JointField2D, PotentialSpec, UnitsContext
from .grw import MAX_EXPECTED_EVENTS, PoissonClock, collapse_center_pdf, default_jump_dt
from .interp import cubic_interp_fractional
from .propagation import StrangStepper, check_aliasing, sample_from_density
from .stats import KS_C99, ks_statistic

__all__ = [
    "InteractionWindow",
    "BathParticleSpec",
    "CollisionRecord",
    "bath_packet",
    "collision_multiplier",
    "shear_evolution",
    "collision_trajectories",
    "conditional_pair",
    "localization_center_statistics",
    "ZStatsReport",
    "multi_collision_run",
    "multi_collision_ensemble",
    "MultiCollisionResult",
    "GasEnvironment",
    "EnvironmentReport",
    "environment_estimates",
    "nitrogen_atmosphere",
]


@dataclass(frozen=True)
class InteractionWindow:
    """Coupling switched on over [t_start, t_end) with unit time integral."""

    t_start: float
    t_end: float

    def __post_init__(self):
        if not (self.t_end > self.t_start):
            raise ValueError("t_end must exceed t_start")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def f(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.t_start) & (t < self.t_end)
        return np.where(inside, 1.0 / self.duration, 0.0)

    def g(self, t):
        """Integrated window: 0 before, ramps linearly to 1, then stays 1."""
        t = np.asarray(t, dtype=float)
        return np.clip((t - self.t_start) / self.duration, 0.0, 1.0)


@dataclass(frozen=True)
class BathParticleSpec:
    """Gaussian bath packet: width sigma, packet center, collision rate."""

    sigma: float
    center: float = 0.0
    rate: float = 0.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")

    @property
    def r_c_equivalent(self) -> float:
        return math.sqrt(2.0) * self.sigma

    @classmethod
    def for_grid(cls, grid: Grid1D, rate: float = 0.0, center: float = 0.0) -> "BathParticleSpec":
        """Natural-units default width: 5% of the domain."""
        return cls(0.05 * grid.length, center, rate)


@dataclass(frozen=True)
class CollisionRecord:
    time: float
    y0: float  # bath offset from its packet center
    center: float  # induced localization center Z
    target: int = 0  # particle index hit (many-body runs)


def bath_packet(grid_y: Grid1D, spec: BathParticleSpec) -> ComplexField1D:
    y = grid_y.x()
    vals = np.exp(-((y - spec.center) ** 2) / (4.0 * spec.sigma**2))
    return ComplexField1D(grid_y, vals).normalized()


def collision_multiplier(x: np.ndarray, y_t: float, g: float, sigma: float, center: float = 0.0) -> np.ndarray:
    """Conditional-state multiplier for a bath particle found at y_t."""
    return np.exp(-(((y_t - center) - g * x) ** 2) / (4.0 * sigma**2))


def shear_evolution(joint0: JointField2D, w: InteractionWindow, t: float) -> JointField2D:
    """Exact coupled evolution: psi(x, y, t) = psi(x, y - x g_t, t_start).

    Free motion inside the window is zero by construction, so the map is a
    pure shear along y, interpolated cubically.
    """
    g = float(w.g(t))
    gy = joint0.grid_y
    edge = np.max(np.abs(joint0.values[:, :2]) ** 2), np.max(np.abs(joint0.values[:, -2:]) ** 2)
    if max(edge) >= 1e-10:
        raise DomainError("bath packet touches the y-boundary before shearing")
    x = joint0.grid_x.x()
    y = gy.x()
    frac = (y[None, :] - g * x[:, None] - gy.x_min) / gy.dx
    out = cubic_interp_fractional(joint0.values, frac)
    sheared = JointField2D(joint0.grid_x, gy, out)
    if abs(sheared.norm() - joint0.norm()) > 1e-8:
        raise DomainError(
            f"shear moved {abs(sheared.norm() - joint0.norm()):.3e} of the norm off-grid; widen the y-domain"
        )
    return sheared


def collision_trajectories(X0: float, Y0: float, w: InteractionWindow, t):
    """Configuration-space paths during a collision: X frozen, Y dragged."""
    g = w.g(t)
    return X0 * np.ones_like(g), Y0 + X0 * g


def conditional_pair(
    psi_s: ComplexField1D,
    spec: BathParticleSpec,
    grid_y: Grid1D,
    X0: float,
    Y0: float,
    w: InteractionWindow,
    t: float,
) -> tuple[ConditionalWaveFunction, ComplexField1D]:
    """Closed-form conditional states along the actual trajectories.

    Y0 is the bath particle's absolute initial position (its offset from
    the packet center is Y0 - spec.center).
    """
    g = float(w.g(t))
    _, y_t = collision_trajectories(X0, Y0, w, t)
    y_t = float(y_t)
    x = psi_s.grid.x()
    sys_vals = psi_s.values * collision_multiplier(x, y_t, g, spec.sigma, spec.center)
    nrm = float(np.sqrt(np.sum(np.abs(sys_vals) ** 2) * psi_s.grid.dx))
    if nrm <= 1e-14:
        raise DomainError("conditional system state vanished; trajectory outside support")
    cond = ConditionalWaveFunction(ComplexField1D(psi_s.grid, sys_vals / nrm), y_t, nrm)
    y = grid_y.x()
    bath_vals = np.exp(-((y - X0 * g - spec.center) ** 2) / (4.0 * spec.sigma**2))
    bath = ComplexField1D(grid_y, bath_vals).normalized()
    return cond, bath


@dataclass
class ZStatsReport:
    n: int
    ks: float
    critical: float
    r_c_equivalent: float
    samples: np.ndarray = field(repr=False, default=None)

    @property
    def passed(self) -> bool:
        return self.ks < self.critical


def localization_center_statistics(
    psi_s: ComplexField1D, sigma: float, n: int, rng: np.random.Generator
) -> ZStatsReport:
    """Empirical law of Z = X0 + Y0 against the Gaussian-hit center pdf
    with r_C = sqrt(2) sigma (99% KS)."""
    if n < 1000:
        raise ValueError("need n >= 1000 samples for a meaningful KS verdict")
    x0 = sample_from_density(psi_s.density(), rng, n)
    y0 = rng.normal(0.0, sigma, n)
    z = x0 + y0
    r_c = math.sqrt(2.0) * sigma
    pdf = collapse_center_pdf(psi_s, r_c)
    ks = ks_statistic(z, pdf)
    return ZStatsReport(n, ks, KS_C99 / math.sqrt(n), r_c, z)


@dataclass
class MultiCollisionResult:
    times: np.ndarray
    positions: np.ndarray  # guided system trajectory X(t)
    field: ComplexField1D  # final conditional state
    records: list
    X0: float


def multi_collision_ensemble(
    psi0: ComplexField1D,
    spec: BathParticleSpec,
    T: float,
    rngs: list[np.random.Generator],
    units: UnitsContext = NATURAL,
    V: PotentialSpec | None = None,
    dt: float | None = None,
    X0: np.ndarray | None = None,
    record_every: int | None = None,
) -> list[MultiCollisionResult]:
    """Vectorized batch of instantaneous-collision runs.

    Each run guides one system trajectory through its conditional state;
    at Poisson times the particle's bath partner is met at offset
    Y0 ~ N(0, sigma^2) and the state is hit at Z = X(t) + Y0.  The bath
    particle is discarded afterwards (fresh partner each collision).
    """
    if spec.rate <= 0:
        raise ValueError("collision rate must be positive for a multi-collision run")
    if spec.rate * T > MAX_EXPECTED_EVENTS:
        raise ResourceLimitError(f"expected collision count {spec.rate * T:.3g} exceeds {MAX_EXPECTED_EVENTS:.0g}")
    check_aliasing(psi0)
    if V is None:
        V = PotentialSpec.free()
    if dt is None:
        dt = default_jump_dt(spec.rate, T)
    steps = max(1, int(round(T / dt)))
    grid = psi0.grid
    runs = len(rngs)
    stepper = StrangStepper(grid, V, units, dt)
    vals = np.tile(psi0.values, (runs, 1))
    if X0 is None:
        X = np.array([sample_from_density(psi0.density(), rngs[r], 1)[0] for r in range(runs)])
    else:
        X = np.asarray(X0, dtype=float).copy()
    schedules = []
    for r in range(runs):
        times = PoissonClock(spec.rate, rngs[r]).sample_times(T)
        schedules.append(np.clip(np.round(times / dt).astype(np.int64), 0, steps))
    by_boundary: dict[int, list[int]] = {}
    for r in range(runs):
        for idx in schedules[r]:
            by_boundary.setdefault(int(idx), []).append(r)
    x = grid.x()
    records: list[list[CollisionRecord]] = [[] for _ in range(runs)]
    if record_every is None:
        record_every = max(1, steps // 256)
    times_out = [0.0]
    paths = [X.copy()]

    def apply_hits(i: int) -> bool:
        hits = by_boundary.get(i)
        if not hits:
            return False
        for r in hits:
            y0 = rngs[r].normal(0.0, spec.sigma)
            z = X[r] + y0
            hit_vals = vals[r] * collision_multiplier(x, spec.center + y0 + X[r], 1.0, spec.sigma, spec.center)
            nrm = np.sqrt(np.sum(np.abs(hit_vals) ** 2) * grid.dx)
            vals[r] = hit_vals / nrm
            records[r].append(CollisionRecord(i * dt, y0, z))
        return True

    apply_hits(0)
    frame = VelocityFieldFrame(grid, 0.0, velocity_values(vals, grid, units))
    for i in range(steps):
        vals = stepper.step(vals)
        pre = VelocityFieldFrame(grid, (i + 1) * dt, velocity_values(vals, grid, units))
        X = _rk4_pair(X, frame, pre)
        if apply_hits(i + 1):
            frame = VelocityFieldFrame(grid, (i + 1) * dt, velocity_values(vals, grid, units))
        else:
            frame = pre
        if (i + 1) % record_every == 0 or i + 1 == steps:
            times_out.append((i + 1) * dt)
            paths.append(X.copy())
    times_arr = np.array(times_out)
    paths_arr = np.array(paths)  # (n_records, runs)
    return [
        MultiCollisionResult(times_arr, paths_arr[:, r], ComplexField1D(grid, vals[r]), records[r], float(paths_arr[0, r]))
        for r in range(runs)
    ]


def multi_collision_run(
    psi0: ComplexField1D,
    spec: BathParticleSpec,
    T: float,
    rng: np.random.Generator,
    units: UnitsContext = NATURAL,
    V: PotentialSpec | None = None,
    dt: float | None = None,
    X0: float | None = None,
    record_every: int | None = None,
) -> MultiCollisionResult:
    """Single realization of the instantaneous-collision stream."""
    x0 = None if X0 is None else np.array([X0], dtype=float)
    return multi_collision_ensemble(
        psi0, spec, T, [rng], units=units, V=V, dt=dt, X0=x0, record_every=record_every
    )[0]


@dataclass(frozen=True)
class GasEnvironment:
    """Ambient gas hitting a sphere of the given radius (SI units)."""

    gas_mass: float
    temperature: float
    pressure: float
    radius: float

    def __post_init__(self):
        if min(self.gas_mass, self.temperature, self.pressure, self.radius) <= 0:
            raise ValueError("all gas-environment inputs must be positive")


def nitrogen_atmosphere(radius: float = 1e-3, temperature: float = 298.0, pressure: float = 101325.0) -> GasEnvironment:
    return GasEnvironment(4.7e-26, temperature, pressure, radius)


@dataclass(frozen=True)
class EnvironmentReport:
    thermal_wavelength: float  # bath packet width sigma (m)
    number_density: float  # m^-3
    mean_speed: float  # m/s
    cross_section: float  # m^2
    collision_rate: float  # s^-1
    r_c_equivalent: float  # sqrt(2) sigma (m)
    lambda_equivalent: float  # s^-1

    def as_rows(self) -> list[tuple[str, float]]:
        return [
            ("thermal_wavelength_m", self.thermal_wavelength),
            ("number_density_m3", self.number_density),
            ("mean_speed_m_s", self.mean_speed),
            ("cross_section_m2", self.cross_section),
            ("collision_rate_s", self.collision_rate),
            ("r_c_equivalent_m", self.r_c_equivalent),
            ("lambda_equivalent_s", self.lambda_equivalent),
        ]


def environment_estimates(env: GasEnvironment) -> EnvironmentReport:
    """Thermal wavelength, collision rate, and equivalent hit parameters."""
    kbt = const.k * env.temperature
    lam_th = const.hbar / math.sqrt(2.0 * math.pi * env.gas_mass * kbt)
    n = env.pressure / kbt
    v_mean = math.sqrt(8.0 * kbt / (math.pi * env.gas_mass))
    sigma_cs = math.pi * env.radius**2
    eta = n * sigma_cs * v_mean
    return EnvironmentReport(lam_th, n, v_mean, sigma_cs, eta, math.sqrt(2.0) * lam_th, eta)
