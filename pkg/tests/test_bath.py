"""Collision model: shear solution, induced hits, and gas-scale estimates."""

import numpy as np
import pytest

from bohmsim.bath import (
    BathParticleSpec,
    InteractionWindow,
    bath_packet,
    collision_multiplier,
    collision_trajectories,
    conditional_pair,
    environment_estimates,
    localization_center_statistics,
    multi_collision_run,
    nitrogen_atmosphere,
    shear_evolution,
)
from bohmsim.bohm import conditional_wavefunction
from bohmsim.grids import ComplexField1D, Grid1D, JointField2D
from bohmsim.rng import stream

SEED = 16021765

# Millimeter sphere in room-temperature nitrogen at 1 atm, from
# kB = 1.380649e-23, hbar = 1.054571817e-34, m_N2 = 4.7e-26 kg:
#   sigma   = hbar / sqrt(2 pi m kB T)   = 3.02543e-12 m
#   n       = P / kB T                   = 2.46273e25 m^-3
#   v_mean  = sqrt(8 kB T / pi m)        = 472.140 m/s
#   sigma_g = pi R^2                     = 3.14159e-6 m^2
#   eta     = n sigma_g v_mean           = 3.65290e22 s^-1
EST_THERMAL_WAVELENGTH = 3.02543e-12
EST_NUMBER_DENSITY = 2.46273e25
EST_MEAN_SPEED = 472.140
EST_CROSS_SECTION = 3.14159e-6
EST_COLLISION_RATE = 3.65290e22


def test_window_ramp_and_plateau():
    w = InteractionWindow(1.0, 3.0)
    assert w.duration == 2.0
    assert w.g(0.5) == 0.0
    assert w.g(2.0) == pytest.approx(0.5)
    assert w.g(7.0) == 1.0
    ts = np.linspace(0.0, 4.0, 4001)
    assert np.trapezoid(w.f(ts), ts) == pytest.approx(1.0, abs=1e-3)


def test_collision_multiplier_center_cancellation():
    """Shifting packet center and bath position together changes nothing."""
    x = np.linspace(-6.0, 6.0, 301)
    rng = stream(SEED, 0)
    for _ in range(50):
        y_t, a, shift = rng.uniform(-3.0, 3.0, 3)
        base = collision_multiplier(x, y_t, 1.0, 0.7, a)
        moved = collision_multiplier(x, y_t + shift, 1.0, 0.7, a + shift)
        assert np.max(np.abs(base - moved)) < 1e-10


def test_collision_trajectories_freeze_system_drag_bath():
    w = InteractionWindow(0.0, 1.0)
    ts = np.array([0.0, 0.25, 1.0, 2.0])
    X, Y = collision_trajectories(0.3, 0.5, w, ts)
    assert np.all(X == 0.3)
    assert np.allclose(Y, 0.5 + 0.3 * np.array([0.0, 0.25, 1.0, 1.0]))


def test_shear_evolution_matches_analytic_map():
    """The sheared product state equals psi_S(x) phi(y - g x) pointwise."""
    gx = Grid1D(-8.0, 8.0, 256)
    gy = Grid1D(-16.0, 16.0, 512)
    psi_s = ComplexField1D.gaussian(gx, sigma=1.0, momentum=0.4)
    spec = BathParticleSpec(sigma=2.0)
    joint = JointField2D.from_product(psi_s, bath_packet(gy, spec))
    w = InteractionWindow(0.0, 1.0)
    out = shear_evolution(joint, w, 0.6)
    x = gx.x()[:, None]
    y = gy.x()[None, :]
    phi = np.exp(-((y - 0.6 * x) ** 2) / (4.0 * spec.sigma**2))
    want = psi_s.values[:, None] * phi
    want = want / np.sqrt(np.sum(np.abs(want) ** 2) * gx.dx * gy.dx)
    core = np.abs(want) > 1e-8
    assert np.max(np.abs(out.values - want)[core]) < 1e-6


def test_conditional_pair_matches_sheared_slice():
    """Closed-form conditional state agrees with slicing the sheared field."""
    gx = Grid1D(-8.0, 8.0, 256)
    gy = Grid1D(-16.0, 16.0, 512)
    psi_s = ComplexField1D.gaussian(gx, sigma=1.0)
    spec = BathParticleSpec(sigma=2.0)
    w = InteractionWindow(0.0, 1.0)
    X0, Y0, t = 0.3, 0.5, 1.0
    joint_t = shear_evolution(JointField2D.from_product(psi_s, bath_packet(gy, spec)), w, t)
    _, y_t = collision_trajectories(X0, Y0, w, t)
    sliced = conditional_wavefunction(joint_t, float(y_t))
    cond, _ = conditional_pair(psi_s, spec, gy, X0, Y0, w, t)
    dev = np.abs(sliced.field.values - cond.field.values)
    assert np.max(dev) < 1e-6


def test_conditional_pair_insensitive_to_packet_center():
    gx = Grid1D(-8.0, 8.0, 256)
    gy = Grid1D(-16.0, 16.0, 512)
    psi_s = ComplexField1D.gaussian(gx, sigma=1.0)
    w = InteractionWindow(0.0, 1.0)
    at_zero, _ = conditional_pair(psi_s, BathParticleSpec(2.0, center=0.0), gy, 0.3, 0.5, w, 1.0)
    shifted, _ = conditional_pair(psi_s, BathParticleSpec(2.0, center=3.0), gy, 0.3, 3.5, w, 1.0)
    assert np.max(np.abs(at_zero.field.values - shifted.field.values)) < 1e-10


def test_z_statistics_match_grw_center_law():
    grid = Grid1D(-8.0, 8.0, 256)
    psi = ComplexField1D.interference_pair(grid, separation=2.0, sigma=0.6, speed=0.0)
    report = localization_center_statistics(psi, 0.5, 4000, stream(SEED, 1))
    assert report.passed
    assert report.r_c_equivalent == pytest.approx(np.sqrt(2.0) * 0.5, rel=1e-12)
    assert report.n == 4000


def test_z_statistics_reject_small_samples():
    grid = Grid1D(-8.0, 8.0, 256)
    psi = ComplexField1D.gaussian(grid)
    with pytest.raises(ValueError):
        localization_center_statistics(psi, 0.5, 100, stream(SEED, 2))


def test_environment_estimates_millimeter_sphere():
    report = environment_estimates(nitrogen_atmosphere())
    assert report.thermal_wavelength == pytest.approx(EST_THERMAL_WAVELENGTH, rel=1e-5)
    assert report.number_density == pytest.approx(EST_NUMBER_DENSITY, rel=1e-5)
    assert report.mean_speed == pytest.approx(EST_MEAN_SPEED, rel=1e-5)
    assert report.cross_section == pytest.approx(EST_CROSS_SECTION, rel=1e-5)
    assert report.collision_rate == pytest.approx(EST_COLLISION_RATE, rel=1e-5)
    assert report.r_c_equivalent == pytest.approx(np.sqrt(2.0) * report.thermal_wavelength)
    assert report.lambda_equivalent == report.collision_rate


def test_environment_estimates_paper_scale_windows():
    report = environment_estimates(nitrogen_atmosphere())
    assert abs(report.thermal_wavelength - 3.0e-12) / 3.0e-12 < 0.02
    assert abs(report.number_density - 2.46e25) / 2.46e25 < 0.01
    assert abs(report.mean_speed - 472.0) / 472.0 < 0.01
    assert abs(report.collision_rate - 3.6e22) / 3.6e22 < 0.03


def test_multi_collision_run_deterministic_and_recorded():
    grid = Grid1D(-16.0, 16.0, 512)
    psi = ComplexField1D.gaussian(grid, sigma=1.0)
    spec = BathParticleSpec(sigma=0.5, rate=4.0)
    a = multi_collision_run(psi, spec, 2.0, stream(SEED, 3), X0=0.2)
    b = multi_collision_run(psi, spec, 2.0, stream(SEED, 3), X0=0.2)
    assert np.array_equal(a.field.values, b.field.values)
    assert a.records == b.records
    assert len(a.records) > 0
    assert abs(a.field.norm() - 1.0) < 1e-8
    for rec in a.records:
        idx = np.searchsorted(a.times, rec.time)
        idx = min(idx, len(a.positions) - 1)
        assert abs(rec.center - (a.positions[idx] + rec.y0)) < 0.5
