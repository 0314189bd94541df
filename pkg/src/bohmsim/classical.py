"""Continuous-collapse (position-noise) limit: timescales, the asymptotic
Gaussian, and the stochastic mean dynamics.

Convention split, printed by the regime report: the collapse and
classicalization times use the position-diffusion rate rate/r_C^2
(units m^-2 s^-1), while the asymptotic width parameter and the noise
coefficients plug the total hit rate (s^-1) in directly.  The second
choice is dimensionally loose but is the one that reproduces the
macroscopic magnitudes this module is checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bohm import velocity_field
from .errors import GridResolutionError
from .grids import ComplexField1D, Grid1D, PotentialSpec, UnitsContext
from .interp import cubic_interp
from .propagation import momentum_spread, position_spread

__all__ = [
    "QmuplParams",
    "collapse_time",
    "classical_time",
    "GaussianMeanState",
    "asymptotic_state",
    "SdePath",
    "sde_evolve",
    "sde_ensemble",
    "bohmian_velocity_identity",
    "VelocityIdentityReport",
    "newton_check",
    "NewtonReport",
]


@dataclass(frozen=True)
class QmuplParams:
    """Total hit rate (s^-1), hit width, particle mass, hbar."""

    rate: float
    r_c: float
    mass: float
    hbar: float = 1.0

    def __post_init__(self):
        if min(self.rate, self.r_c, self.mass, self.hbar) <= 0:
            raise ValueError("all parameters must be positive")

    @property
    def lambda_qmupl(self) -> float:
        """Position-diffusion rate, m^-2 s^-1."""
        return self.rate / self.r_c**2


def collapse_time(l: float, params: QmuplParams) -> float:
    """Superposition suppression time for separation l: 3 / (2 l^2 lambda_q)."""
    if l <= 0:
        raise ValueError("separation must be positive")
    return 3.0 / (2.0 * l**2 * params.lambda_qmupl)


def classical_time(L: float, params: QmuplParams) -> float:
    """Horizon up to which collapse noise stays below resolution L."""
    if L <= 0:
        raise ValueError("resolution scale must be positive")
    return ((2.0 / 3.0) * (L / math.sqrt(params.lambda_qmupl)) * (params.mass / params.hbar)) ** (2.0 / 3.0)


@dataclass(frozen=True)
class GaussianMeanState:
    """Fixed-shape Gaussian tracking (x_bar, p_bar); phase A is inert."""

    x_bar: float
    p_bar: float
    mass: float
    hbar: float
    rate: float
    phase: float = 0.0

    @property
    def z(self) -> complex:
        return (1.0 + 1.0j) * math.sqrt(self.rate * self.mass / self.hbar)

    @property
    def omega(self) -> float:
        return 2.0 * math.sqrt(self.hbar * self.rate / self.mass)

    @property
    def delta_q(self) -> float:
        return math.sqrt(self.hbar / (self.mass * self.omega))

    @property
    def delta_p(self) -> float:
        return math.sqrt(self.hbar * self.mass * self.omega / 2.0)

    @property
    def v_bar(self) -> float:
        return self.p_bar / self.mass

    def uncertainty_product(self) -> float:
        return self.delta_q * self.delta_p  # = hbar / sqrt(2)

    def render(self, grid: Grid1D) -> ComplexField1D:
        if grid.dx > self.delta_q / 16.0 * (1.0 + 1e-9):
            raise GridResolutionError(
                f"grid spacing {grid.dx:.3e} cannot resolve delta_q={self.delta_q:.3e} with 16 points"
            )
        x = grid.x()
        vals = np.exp(
            -(self.z / 2.0) * (x - self.x_bar) ** 2
            + 1j * self.p_bar * x / self.hbar
            + 1j * self.phase
        )
        return ComplexField1D(grid, vals).normalized()


def asymptotic_state(
    params: QmuplParams, x_bar: float, p_bar: float, grid: Grid1D | None = None
) -> tuple[GaussianMeanState, ComplexField1D]:
    """Stationary-shape Gaussian of the noisy dynamics, rendered on a grid."""
    state = GaussianMeanState(x_bar, p_bar, params.mass, params.hbar, params.rate)
    if grid is None:
        span = 8.0 * state.delta_q
        grid = Grid1D(x_bar - span, x_bar + span, 256)
    return state, state.render(grid)


@dataclass
class SdePath:
    times: np.ndarray
    x: np.ndarray
    v: np.ndarray
    wiener: np.ndarray  # cumulative W(t), zero when fluctuations are off
    fluctuations: bool
    warnings: list = field(default_factory=list)


def _linearization_warning(V: PotentialSpec, x: float, dq: float) -> str | None:
    try:
        g1 = float(V.grad(x + 0.5 * dq))
        g0 = float(V.grad(x - 0.5 * dq))
    except ValueError:
        return None
    scale = max(abs(g0), abs(g1))
    if scale > 0 and abs(g1 - g0) > 0.01 * scale:
        return f"force varies by {abs(g1 - g0) / scale:.1%} across delta_q at x={x:.3g}"
    return None


def sde_evolve(
    state0: GaussianMeanState,
    V: PotentialSpec,
    params: QmuplParams,
    T: float,
    dt: float,
    rng: np.random.Generator | None = None,
    fluctuations: bool = True,
) -> SdePath:
    """Mean-position/velocity dynamics driven by one shared Wiener process.

    Euler-Maruyama when fluctuations are on:
        x += v dt + sqrt(hbar/M) dW
        v += -V'(x)/M dt + sqrt(rate) (hbar/M) dW
    with the SAME dW in both lines.  fluctuations=False upgrades to RK4 on
    the deterministic system (and then needs no rng).
    """
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    if dt > T / 1000.0 * (1.0 + 1e-12):
        raise ValueError("dt too coarse: need at least 1000 steps over [0, T]")
    steps = int(round(T / dt))
    m = params.mass
    times = dt * np.arange(steps + 1)
    xs = np.empty(steps + 1)
    vs = np.empty(steps + 1)
    ws = np.zeros(steps + 1)
    xs[0], vs[0] = state0.x_bar, state0.v_bar
    warnings = []
    msg = _linearization_warning(V, xs[0], state0.delta_q)
    if msg:
        warnings.append(msg)
    if not fluctuations:
        def acc(x):
            return -V.grad(x) / m

        x, v = xs[0], vs[0]
        for i in range(steps):
            k1x, k1v = v, acc(x)
            k2x, k2v = v + 0.5 * dt * k1v, acc(x + 0.5 * dt * k1x)
            k3x, k3v = v + 0.5 * dt * k2v, acc(x + 0.5 * dt * k2x)
            k4x, k4v = v + dt * k3v, acc(x + dt * k3x)
            x = x + (dt / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
            v = v + (dt / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
            xs[i + 1], vs[i + 1] = x, v
        return SdePath(times, xs, vs, ws, False, warnings)
    if rng is None:
        raise ValueError("fluctuations need an rng")
    cx = math.sqrt(params.hbar / m)
    cv = math.sqrt(params.rate) * (params.hbar / m)
    sq = math.sqrt(dt)
    x, v, w = xs[0], vs[0], 0.0
    for i in range(steps):
        dw = sq * rng.standard_normal()
        xn = x + v * dt + cx * dw
        vn = v - (V.grad(x) / m) * dt + cv * dw
        x, v, w = xn, vn, w + dw
        xs[i + 1], vs[i + 1], ws[i + 1] = x, v, w
    msg = _linearization_warning(V, xs[-1], state0.delta_q)
    if msg and msg not in warnings:
        warnings.append(msg)
    return SdePath(times, xs, vs, ws, True, warnings)


def sde_ensemble(
    state0: GaussianMeanState,
    V: PotentialSpec,
    params: QmuplParams,
    T: float,
    dt: float,
    rng: np.random.Generator,
    n_paths: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized fluctuating paths; returns final (x, v, W) arrays."""
    steps = int(round(T / dt))
    m = params.mass
    cx = math.sqrt(params.hbar / m)
    cv = math.sqrt(params.rate) * (params.hbar / m)
    sq = math.sqrt(dt)
    x = np.full(n_paths, state0.x_bar)
    v = np.full(n_paths, state0.v_bar)
    w = np.zeros(n_paths)
    for _ in range(steps):
        dw = sq * rng.standard_normal(n_paths)
        xn = x + v * dt + cx * dw
        v = v - (V.grad(x) / m) * dt + cv * dw
        x = xn
        w += dw
    return x, v, w


@dataclass
class VelocityIdentityReport:
    v_center: float
    v_bar: float
    center_dev: float
    max_offset_ratio: float  # max |delta(t)| / |delta(0)| over tracked offsets
    final_velocity_dev: float
    ordering_preserved: bool

    @property
    def passed(self) -> bool:
        return (
            self.center_dev < 1e-6
            and self.max_offset_ratio <= 1.0 + 1e-6
            and self.final_velocity_dev < 1e-3
            and self.ordering_preserved
        )


def bohmian_velocity_identity(
    params: QmuplParams,
    x_bar: float = 0.0,
    p_bar: float = 1.0,
    horizon_dynamical_times: float = 10.0,
) -> VelocityIdentityReport:
    """Guidance through the rendered asymptotic Gaussian family.

    The velocity field is computed by the trajectory module from the
    rendered state; because the family translates rigidly at v_bar, the
    frame at time t is the t=0 frame shifted by v_bar t.  Trajectories
    started anywhere within one spread must track x_bar(t) with bounded,
    non-crossing offsets and settle onto velocity v_bar.
    """
    state, psi = asymptotic_state(params, x_bar, p_bar)
    units = UnitsContext(params.hbar, params.mass, "natural")
    frame = velocity_field(psi, units)
    grid = psi.grid
    v_center = float(cubic_interp(frame.values, grid.x_min, grid.dx, x_bar))
    v_bar = state.v_bar
    dq = state.delta_q
    offsets = np.array([-dq, -0.5 * dq, 0.0, 0.5 * dq, dq])
    pos = x_bar + offsets.copy()
    # one dynamical time = relaxation time 2/omega of the tracking transient
    T = horizon_dynamical_times * 2.0 / state.omega
    steps = 2000
    h = T / steps
    max_ratio = 0.0

    def vel(p, t):
        return cubic_interp(frame.values, grid.x_min, grid.dx, p - v_bar * t, fill=np.nan)

    t = 0.0
    for _ in range(steps):
        k1 = vel(pos, t)
        k2 = vel(pos + 0.5 * h * k1, t + 0.5 * h)
        k3 = vel(pos + 0.5 * h * k2, t + 0.5 * h)
        k4 = vel(pos + h * k3, t + h)
        pos = pos + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        delta = pos - (x_bar + v_bar * t)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratios = np.abs(delta[offsets != 0]) / np.abs(offsets[offsets != 0])
        max_ratio = max(max_ratio, float(np.max(ratios)))
    final_v = vel(pos, t)
    return VelocityIdentityReport(
        v_center=v_center,
        v_bar=v_bar,
        center_dev=abs(v_center - v_bar),
        max_offset_ratio=max_ratio,
        final_velocity_dev=float(np.max(np.abs(final_v - v_bar))),
        ordering_preserved=bool(np.all(np.diff(pos) > 0)),
    )


@dataclass
class NewtonReport:
    max_residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.max_residual < self.threshold


def newton_check(
    V: PotentialSpec,
    params: QmuplParams,
    T: float,
    x0: float = 1.0,
    v0: float = 0.0,
    threshold: float = 1e-3,
) -> NewtonReport:
    """Fluctuation-free mean path obeys M xdd = -V'(x) (second differences)."""
    state = GaussianMeanState(x0, v0 * params.mass, params.mass, params.hbar, params.rate)
    dt = T / 4000.0
    path = sde_evolve(state, V, params, T, dt, fluctuations=False)
    stride = 20  # coarse sampling keeps the finite-difference error visible but small
    xs = path.x[::stride]
    h = dt * stride
    acc = (xs[2:] - 2.0 * xs[1:-1] + xs[:-2]) / h**2
    force = -V.grad(xs[1:-1]) / params.mass
    return NewtonReport(float(np.max(np.abs(acc - force))), threshold)
