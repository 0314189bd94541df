"""Desk-scale verification suite.

Every check runs in seconds on one core, draws from streams derived from
one seed, and reports a value against a threshold.  Thresholds can be
overridden per check (used by fault-injection tests); a failing check never
prevents the others from running.  The report contains no timestamps, so
two runs with the same seed produce byte-identical reports.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bath import (
    BathParticleSpec,
    GasEnvironment,
    InteractionWindow,
    bath_packet,
    conditional_pair,
    environment_estimates,
    localization_center_statistics,
    multi_collision_ensemble,
    shear_evolution,
)
from .bohm import (
    conditional_wavefunction,
    guided_run,
    reduced_vs_conditional_identity,
    verify_equivariance,
)
from .classical import (
    GaussianMeanState,
    QmuplParams,
    bohmian_velocity_identity,
    classical_time,
    collapse_time,
    newton_check,
    sde_ensemble,
    sde_evolve,
)
from .grids import NATURAL, ComplexField1D, Grid1D, JointField2D, PotentialSpec
from .grw import (
    GrwParams,
    collapse_center_pdf,
    evolve_grw,
    grw_ensemble,
    master_equation_evolve,
    sample_collapse_center,
)
from .bohm import DensityMatrix1D
from .manybody import (
    GaussianProductState,
    ManyBodyConfig,
    collision_on_particle_k,
    exponent_identity_residual,
    measure_amplification,
)
from .propagation import position_spread, split_step_propagate
from .rng import stream, substreams
from .stats import KS_C95, KS_C99, ks_statistic, ks_two_sample

__all__ = ["SuiteResult", "verify_all", "CHECK_NAMES"]

from .scenarios import CheckResult

_SQ2 = math.sqrt(2.0)


def _free_width(seed, thr):
    grid = Grid1D(-20.0, 20.0, 512)
    psi = ComplexField1D.gaussian(grid, 0.0, 1.0, 0.0, 1.0)
    out = split_step_propagate(psi, PotentialSpec.free(), NATURAL, 1e-3, 2000)
    t = 2.0
    exact = math.sqrt(1.0 + (t / 2.0) ** 2)
    dev = abs(position_spread(out) - exact)
    return dev, dev < thr, f"width={position_spread(out):.9g}"


def _norm_conservation(seed, thr):
    grid = Grid1D(-16.0, 16.0, 256)
    psi = ComplexField1D.gaussian(grid, 1.0, 0.8, 0.5, 1.0)
    out = split_step_propagate(psi, PotentialSpec.harmonic(1.0), NATURAL, 1e-3, 4000)
    drift = abs(out.norm() - 1.0)
    return drift, drift < thr, ""


def _time_reversal(seed, thr):
    grid = Grid1D(-16.0, 16.0, 256)
    psi = ComplexField1D.gaussian(grid, 0.5, 0.9, 1.0, 1.0)
    V = PotentialSpec.harmonic(1.0)
    fwd = split_step_propagate(psi, V, NATURAL, 1e-3, 1500)
    back = split_step_propagate(
        ComplexField1D(grid, np.conj(fwd.values)), V, NATURAL, 1e-3, 1500)
    dev = float(np.max(np.abs(np.conj(back.values) - psi.values)))
    return dev, dev < thr, ""


def _strang_order(seed, thr):
    grid = Grid1D(-16.0, 16.0, 256)
    psi = ComplexField1D.gaussian(grid, 0.0, 0.6, 0.0, 1.0)
    V = PotentialSpec.harmonic(1.0)
    t = 1.0
    s0 = 0.6
    exact = math.sqrt(s0**2 * math.cos(t) ** 2 + (1.0 / (2.0 * s0)) ** 2 * math.sin(t) ** 2)

    def err(dt):
        out = split_step_propagate(psi, V, NATURAL, dt, int(round(t / dt)))
        return abs(position_spread(out) - exact)

    ratio = err(2e-2) / err(1e-2)
    return ratio, abs(ratio - 4.0) < thr, "err(2dt)/err(dt)"


def _equivariance(seed, thr):
    grid = Grid1D(-24.0, 24.0, 512)
    psi = ComplexField1D.interference_pair(grid, 4.0, 1.0, 1.0)
    rep = verify_equivariance(psi, PotentialSpec.free(), NATURAL, 2000,
                              [0.5, 1.5], 1e-3, stream(seed, 101))
    worst = max(e[1] for e in rep.entries)
    return worst, worst < thr, f"critical={rep.entries[0][2]:.4g}"


def _conditional_identity(seed, thr):
    gx = Grid1D(-10.0, 10.0, 128)
    gy = Grid1D(-10.0, 10.0, 128)
    fa = ComplexField1D.gaussian(gx, -2.0, 0.7, 0.3, 1.0)
    fb = ComplexField1D.gaussian(gx, 2.0, 0.7, -0.1, 1.0)
    ha = ComplexField1D.gaussian(gy, -1.5, 0.9, 0.0, 1.0)
    hb = ComplexField1D.gaussian(gy, 1.5, 0.9, 0.0, 1.0)
    joint = JointField2D(gx, gy, np.outer(fa.values, ha.values)
                         + np.outer(fb.values, hb.values)).normalized()
    rep = reduced_vs_conditional_identity(joint)
    return rep.max_dev, rep.max_dev < thr, "exact quadrature"


def _grw_center_law(seed, thr):
    grid = Grid1D(-12.0, 12.0, 256)
    psi = ComplexField1D.interference_pair(grid, 3.0, 0.8, 0.0)
    r_c = 0.7
    rng = stream(seed, 111)
    zs = sample_collapse_center(psi, r_c, rng, 2000)
    ks = ks_statistic(zs, collapse_center_pdf(psi, r_c))
    crit = KS_C99 / math.sqrt(2000) * thr  # thr scales the 99% critical value
    return ks, ks < crit, f"critical={crit:.4g}"


def _grw_poisson_counts(seed, thr):
    grid = Grid1D(-8.0, 8.0, 32)
    psi = ComplexField1D.gaussian(grid, 0.0, 1.0, 0.0, 1.0)
    params = GrwParams(lambda_rate=5.0, r_c=1.0)
    rngs = substreams(seed, 500, 300)
    _, logs = grw_ensemble(psi, PotentialSpec.free(), params, 2.0, rngs, NATURAL, dt=1e-3)
    counts = np.array([len(ev) for ev in logs])
    expected = 10.0
    dev = abs(float(np.mean(counts)) - expected) / (math.sqrt(expected) / math.sqrt(300))
    return dev, dev < thr, f"mean={np.mean(counts):.3f} (sigma units)"


def _master_trace(seed, thr):
    grid = Grid1D(-8.0, 8.0, 64)
    psi = ComplexField1D.interference_pair(grid, 2.0, 0.6, 0.0)
    rho = master_equation_evolve(DensityMatrix1D.from_pure(psi), PotentialSpec.free(),
                                 GrwParams(lambda_rate=2.0, r_c=0.8), 0.5, NATURAL)
    dev = abs(rho.trace() - 1.0)
    return dev, dev < thr, ""


def _grw_vs_master(seed, thr):
    grid = Grid1D(-8.0, 8.0, 64)
    psi = ComplexField1D.interference_pair(grid, 2.0, 0.6, 0.0)
    params = GrwParams(lambda_rate=2.0, r_c=0.8)
    T = 1.0
    runs = 400
    vals, _ = grw_ensemble(psi, PotentialSpec.free(), params, T,
                           substreams(seed, 700, runs), NATURAL, dt=1e-3)
    avg = np.einsum("ri,rj->ij", vals, np.conj(vals)) / runs
    rho = master_equation_evolve(DensityMatrix1D.from_pure(psi), PotentialSpec.free(),
                                 params, T, NATURAL)
    dev = float(np.max(np.abs(avg - rho.values)))
    return dev, dev < thr, f"runs={runs} max entry deviation"


def _shear_closed_form(seed, thr):
    gx = Grid1D(-8.0, 8.0, 256)
    gy = Grid1D(-16.0, 16.0, 512)
    spec = BathParticleSpec(sigma=2.0)
    w = InteractionWindow(0.0, 1.0)
    psi_s = ComplexField1D.gaussian(gx, 0.0, 1.0, 0.0, 1.0)
    joint = JointField2D.from_product(psi_s, bath_packet(gy, spec))
    sheared = shear_evolution(joint, w, 1.0)
    x0, y0 = 0.3, 0.5
    grid_route = conditional_wavefunction(sheared, y0 + x0)
    closed, _ = conditional_pair(psi_s, spec, gy, x0, y0, w, 1.0)
    sup = float(np.max(np.abs(grid_route.field.values - closed.field.values)))
    return sup, sup < thr, ""


def _z_statistics(seed, thr):
    grid = Grid1D(-8.0, 8.0, 256)
    psi = ComplexField1D.interference_pair(grid, 2.0, 0.6, 0.0)
    rep = localization_center_statistics(psi, 0.5, 2000, stream(seed, 131))
    return rep.ks, rep.ks < rep.critical * thr, f"critical={rep.critical:.4g}"


def _bath_grw_final(seed, thr):
    grid = Grid1D(-16.0, 16.0, 256)
    psi = ComplexField1D.gaussian(grid, 0.0, 1.0, 0.0, 1.0)
    sigma, rate, T, runs = 0.5, 1.0, 2.0, 200
    spec = BathParticleSpec(sigma=sigma, rate=rate)
    bres = multi_collision_ensemble(psi, spec, T, substreams(seed, 900, runs),
                                    NATURAL, dt=1e-3)
    bath_final = np.array([res.positions[-1] for res in bres])
    params = GrwParams(lambda_rate=rate, r_c=_SQ2 * sigma)
    rngs = substreams(seed, 1900, runs)
    vals, _ = grw_ensemble(psi, PotentialSpec.free(), params, T, rngs, NATURAL, dt=1e-3)
    from .grids import RealField1D
    from .propagation import sample_from_density

    grw_final = np.empty(runs)
    for i in range(runs):
        d = np.abs(vals[i]) ** 2
        d /= np.trapezoid(d, dx=grid.dx)
        grw_final[i] = sample_from_density(RealField1D(grid, d), rngs[i], 1)[0]
    ks = ks_two_sample(bath_final, grw_final)
    crit = KS_C95 * math.sqrt(2.0 / runs) * thr
    return ks, ks < crit, f"critical={crit:.4g}"


def _amplification_slope(seed, thr):
    rep = measure_amplification((1, 2, 4, 8), 0.5, 200, 20.0, stream(seed, 141))
    dev = abs(rep.slope / 0.5 - 1.0)
    return dev, dev < thr, f"slope={rep.slope:.4g}"


def _estimate_windows(seed, thr):
    rep = environment_estimates(GasEnvironment(4.7e-26, 298.0, 101325.0, 1e-3))
    vals = dict(rep.as_rows())
    devs = [
        abs(vals["thermal_wavelength_m"] / 3.0e-12 - 1.0) / 0.02,
        abs(vals["number_density_m3"] / 2.46e25 - 1.0) / 0.01,
        abs(vals["mean_speed_m_s"] / 472.0 - 1.0) / 0.01,
        abs(vals["collision_rate_s"] / 3.6e22 - 1.0) / 0.03,
    ]
    worst = max(devs)
    return worst, worst < thr, "worst window fraction"


def _regime_windows(seed, thr):
    import scipy.constants as sc

    rep = environment_estimates(GasEnvironment(4.7e-26, 298.0, 101325.0, 1e-3))
    vals = dict(rep.as_rows())
    params = QmuplParams(rate=vals["lambda_equivalent_s"], r_c=vals["r_c_equivalent_m"],
                         mass=1e-3, hbar=sc.hbar)
    t_c = collapse_time(1e-3, params)
    t_cl_min = classical_time(1e-3, params) / 60.0
    mean = GaussianMeanState(0.0, 0.0, 1e-3, sc.hbar, params.rate)
    ok = (5e-40 <= t_c <= 1e-39) and (40.0 <= t_cl_min <= 50.0) \
        and (1e-14 / 3.0 <= mean.delta_q <= 3e-14)
    return t_cl_min, ok and thr > 0, f"t_c={t_c:.3g}s delta_q={mean.delta_q:.3g}m"


def _uncertainty_product(seed, thr):
    st = GaussianMeanState(0.0, 0.0, 1.0, 1.0, 3.7)
    dev = abs(st.uncertainty_product() * _SQ2 - 1.0)
    return dev, dev < thr, ""


def _exponent_identity(seed, thr):
    rng = stream(seed, 151)
    worst = 0.0
    for _ in range(200):
        x0 = rng.uniform(-3, 3, 4)
        y0 = rng.uniform(-3, 3)
        g = rng.uniform(0.1, 2.0)
        xcm = rng.uniform(-2, 2)
        r = x0[:-1] - np.mean(x0)
        k = int(rng.integers(0, 4))
        worst = max(worst, exponent_identity_residual(x0, y0, g, xcm, r, k))
    return worst, worst < thr, "200 random tuples"


def _com_multiplier(seed, thr):
    state = GaussianProductState(centers=(-1.0, 0.5, 1.5), sigmas=(0.7, 0.7, 0.7),
                                 momenta=(0.0, 0.0, 0.0))
    config = ManyBodyConfig(positions=(-1.2, 0.4, 1.6))
    out = collision_on_particle_k(state, config, 1, BathParticleSpec(sigma=0.5, center=3.0),
                                  0.2, InteractionWindow(0.0, 1.0), 1.0, Grid1D(-8.0, 8.0, 256))
    return out.com_multiplier_residual, out.com_multiplier_residual < thr, ""


def _newton(seed, thr):
    params = QmuplParams(rate=1.0, r_c=1.0, mass=1.0)
    rep = newton_check(PotentialSpec.harmonic(1.0), params, 2.0 * math.pi, threshold=thr)
    return rep.max_residual, rep.passed, "one harmonic period"


def _sde_shared_noise(seed, thr):
    params = QmuplParams(rate=2.5, r_c=1.0, mass=1.0)
    st = GaussianMeanState(0.0, 0.0, 1.0, 1.0, 2.5)
    path = sde_evolve(st, PotentialSpec.free(), params, 1.0, 1e-3, stream(seed, 161))
    cv = math.sqrt(2.5)
    dev = float(np.max(np.abs(path.v - path.v[0] - cv * path.wiener)))
    return dev, dev <= thr, "velocity noise reconstructed from W(t)"


def _velocity_identity(seed, thr):
    rep = bohmian_velocity_identity(QmuplParams(rate=1.0, r_c=1.0, mass=1.0))
    return rep.final_velocity_dev, rep.passed and rep.final_velocity_dev < thr, ""


def _fluctuation_rms(seed, thr):
    import scipy.constants as sc

    mass = 1e-3
    rate = 3.65e22
    params = QmuplParams(rate=rate, r_c=4.28e-12, mass=mass, hbar=sc.hbar)
    st = GaussianMeanState(0.0, 0.0, mass, sc.hbar, rate)
    T = 1.0
    x, v, _ = sde_ensemble(st, PotentialSpec.free(), params, T, 1e-3,
                           stream(seed, 171), 200)
    pred_x = math.sqrt(sc.hbar / mass) * math.sqrt(T)
    pred_v = math.sqrt(rate) * (sc.hbar / mass) * math.sqrt(T)
    ratio_x = float(np.sqrt(np.mean(x**2))) / pred_x
    ratio_v = float(np.sqrt(np.mean(v**2))) / pred_v
    worst = max(abs(math.log2(ratio_x)), abs(math.log2(ratio_v)))
    return worst, worst < thr, f"ratios x={ratio_x:.3f} v={ratio_v:.3f} (log2 units)"


def _no_crossing(seed, thr):
    grid = Grid1D(-20.0, 20.0, 512)
    psi = ComplexField1D.interference_pair(grid, 4.0, 1.0, 1.0)
    starts = np.linspace(-6.0, 6.0, 24)
    _, paths, _ = guided_run(psi, PotentialSpec.free(), NATURAL, starts, 1e-3, 2000,
                             record_every=100)
    swaps = int(np.sum(np.argsort(paths[0]) != np.argsort(paths[-1])))
    return float(swaps), swaps <= thr, "order permutation swaps"


def _determinism(seed, thr):
    grid = Grid1D(-8.0, 8.0, 64)
    psi = ComplexField1D.gaussian(grid, 0.0, 1.0, 0.0, 1.0)
    params = GrwParams(lambda_rate=3.0, r_c=0.8)
    f1, e1 = evolve_grw(psi, PotentialSpec.free(), params, 1.0, stream(seed, 181), NATURAL)
    f2, e2 = evolve_grw(psi, PotentialSpec.free(), params, 1.0, stream(seed, 181), NATURAL)
    same = np.array_equal(f1.values, f2.values) and len(e1) == len(e2)
    dev = float(np.max(np.abs(f1.values - f2.values))) if f1.values.shape == f2.values.shape else 1.0
    return dev, same and dev <= thr, f"events={len(e1)}"


# name -> (function, default threshold)
_REGISTRY = {
    "free_gaussian_width": (_free_width, 1e-6),
    "norm_conservation": (_norm_conservation, 1e-8),
    "time_reversal": (_time_reversal, 1e-9),
    "strang_order_two": (_strang_order, 1.0),
    "equivariance_ks": (_equivariance, KS_C99 / math.sqrt(2000)),
    "conditional_identity": (_conditional_identity, 1e-9),
    "grw_center_law_ks": (_grw_center_law, 1.0),
    "grw_poisson_counts": (_grw_poisson_counts, 4.0),
    "master_trace": (_master_trace, 1e-6),
    "grw_vs_master_entries": (_grw_vs_master, 0.08),
    "shear_closed_form": (_shear_closed_form, 1e-6),
    "z_statistics_ks": (_z_statistics, 1.0),
    "bath_grw_final_ks": (_bath_grw_final, 1.0),
    "amplification_slope": (_amplification_slope, 0.12),
    "estimate_windows": (_estimate_windows, 1.0),
    "regime_windows": (_regime_windows, 1.0),
    "uncertainty_product": (_uncertainty_product, 1e-10),
    "exponent_identity": (_exponent_identity, 1e-12),
    "com_multiplier_residual": (_com_multiplier, 1e-8),
    "newton_residual": (_newton, 1e-3),
    "sde_shared_noise": (_sde_shared_noise, 1e-12),
    "velocity_identity": (_velocity_identity, 1e-3),
    "fluctuation_rms": (_fluctuation_rms, 1.0),
    "no_crossing": (_no_crossing, 0.0),
    "determinism": (_determinism, 0.0),
}

CHECK_NAMES = tuple(_REGISTRY)


@dataclass
class SuiteResult:
    seed: int
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def report_text(self) -> str:
        lines = [f"verification suite seed={self.seed}"]
        lines.extend(c.line() for c in self.checks)
        n_pass = sum(c.passed for c in self.checks)
        lines.append(f"{n_pass}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


def verify_all(seed: int, overrides: dict | None = None, only=None) -> SuiteResult:
    """Run the registry (or a named subset) with optional threshold overrides."""
    overrides = overrides or {}
    unknown = set(overrides) - set(_REGISTRY)
    if unknown:
        raise ValueError(f"unknown check names: {sorted(unknown)}")
    names = CHECK_NAMES if only is None else tuple(only)
    unknown = set(names) - set(_REGISTRY)
    if unknown:
        raise ValueError(f"unknown check names: {sorted(unknown)}")
    checks = []
    for name in names:
        fn, default_thr = _REGISTRY[name]
        thr = overrides.get(name, default_thr)
        try:
            value, ok, detail = fn(seed, thr)
        except Exception as exc:  # isolated: one blown check cannot sink the suite
            checks.append(CheckResult(name, False, threshold=thr,
                                      detail=f"{type(exc).__name__}: {exc}"))
            continue
        checks.append(CheckResult(name, bool(ok), value=float(value),
                                  threshold=thr, detail=detail))
    return SuiteResult(seed, checks)
