"""Noise-driven mean dynamics: timescales, spreads, and the Newton limit."""

import numpy as np
import pytest

from bohmsim.classical import (
    GaussianMeanState,
    QmuplParams,
    asymptotic_state,
    bohmian_velocity_identity,
    classical_time,
    collapse_time,
    newton_check,
    sde_ensemble,
    sde_evolve,
)
from bohmsim.errors import GridResolutionError
from bohmsim.grids import Grid1D, PotentialSpec
from bohmsim.propagation import position_spread
from bohmsim.rng import stream

SEED = 17290403
HBAR_SI = 1.054571817e-34

# Millimeter-sphere inputs: total hit rate from the gas estimate, hit width
# sqrt(2) times the thermal wavelength, mass 1 g.
SPHERE = QmuplParams(rate=3.65290e22, r_c=4.27861e-12, mass=1e-3, hbar=HBAR_SI)

# lambda_q = rate / r_c^2; t_collapse(1 mm) = 3 / (2 l^2 lambda_q);
# t_classical(1 mm) = ((2/3)(L/sqrt(lambda_q))(M/hbar))^(2/3).
LAMBDA_QMUPL = 1.99541e45
T_COLLAPSE_MM = 7.51724e-40
T_CLASSICAL_MM_MIN = 45.2612
# delta_q = sqrt(hbar / (M omega)), omega = 2 sqrt(hbar rate / M).
DELTA_Q_SPHERE = 2.91470e-14

NATURAL = QmuplParams(rate=1.0, r_c=1.0, mass=1.0)


def test_sphere_timescales_frozen_values():
    assert SPHERE.lambda_qmupl == pytest.approx(LAMBDA_QMUPL, rel=1e-4)
    assert collapse_time(1e-3, SPHERE) == pytest.approx(T_COLLAPSE_MM, rel=1e-4)
    assert classical_time(1e-3, SPHERE) / 60.0 == pytest.approx(T_CLASSICAL_MM_MIN, rel=1e-4)


def test_timescale_scaling_laws():
    rng = stream(SEED, 0)
    for _ in range(20):
        p = QmuplParams(
            rate=float(rng.uniform(1.0, 1e3)),
            r_c=float(rng.uniform(0.1, 10.0)),
            mass=float(rng.uniform(0.5, 50.0)),
        )
        l = float(rng.uniform(0.1, 5.0))
        assert collapse_time(2.0 * l, p) == pytest.approx(collapse_time(l, p) / 4.0, rel=1e-12)
        assert classical_time(8.0 * l, p) == pytest.approx(4.0 * classical_time(l, p), rel=1e-12)
        heavier = QmuplParams(p.rate, p.r_c, 8.0 * p.mass)
        assert classical_time(l, heavier) == pytest.approx(4.0 * classical_time(l, p), rel=1e-12)


def test_natural_unit_stationary_shape():
    state = GaussianMeanState(0.0, 1.0, 1.0, 1.0, 1.0)
    assert state.omega == pytest.approx(2.0, rel=1e-14)
    assert state.delta_q == pytest.approx(np.sqrt(0.5), rel=1e-14)
    assert state.delta_p == pytest.approx(1.0, rel=1e-14)
    assert state.z == pytest.approx(1.0 + 1.0j, rel=1e-14)


def test_uncertainty_product_is_hbar_over_sqrt2():
    nat = GaussianMeanState(0.0, 0.0, 1.0, 1.0, 1.0)
    assert abs(nat.uncertainty_product() - 1.0 / np.sqrt(2.0)) < 1e-10
    si = GaussianMeanState(0.0, 0.0, SPHERE.mass, SPHERE.hbar, SPHERE.rate)
    assert si.uncertainty_product() == pytest.approx(HBAR_SI / np.sqrt(2.0), rel=1e-12)
    assert si.delta_q == pytest.approx(DELTA_Q_SPHERE, rel=1e-4)


def test_rendered_state_has_designed_spread():
    state, psi = asymptotic_state(NATURAL, x_bar=0.3, p_bar=0.5)
    assert position_spread(psi) == pytest.approx(state.delta_q, rel=1e-6)


def test_render_rejects_coarse_grid():
    state = GaussianMeanState(0.0, 0.0, 1.0, 1.0, 1.0)
    with pytest.raises(GridResolutionError):
        state.render(Grid1D(-8.0, 8.0, 64))


def test_deterministic_harmonic_oscillation():
    """Fluctuation-free path is cos(t) for unit mass and spring."""
    T = 2.0 * np.pi
    path = sde_evolve(
        GaussianMeanState(1.0, 0.0, 1.0, 1.0, 1.0),
        PotentialSpec.harmonic(1.0),
        NATURAL,
        T,
        T / 4000.0,
        fluctuations=False,
    )
    assert np.max(np.abs(path.x - np.cos(path.times))) < 1e-8
    assert np.max(np.abs(path.v + np.sin(path.times))) < 1e-8


def test_newton_check_harmonic():
    report = newton_check(PotentialSpec.harmonic(1.0), NATURAL, 2.0 * np.pi)
    assert report.passed
    assert report.max_residual < 1e-3


def test_sde_guards():
    state = GaussianMeanState(0.0, 0.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        sde_evolve(state, PotentialSpec.free(), NATURAL, 1.0, 0.5)
    with pytest.raises(ValueError):
        sde_evolve(state, PotentialSpec.free(), NATURAL, 1.0, 1e-3, rng=None, fluctuations=True)


def test_sde_shares_one_wiener_increment():
    """Position and velocity kicks reconstruct the identical dW sequence."""
    params = QmuplParams(rate=4.0, r_c=1.0, mass=2.0)
    state = GaussianMeanState(0.0, 1.0, params.mass, params.hbar, params.rate)
    dt = 1e-3
    path = sde_evolve(state, PotentialSpec.harmonic(1.0), params, 1.0, dt, rng=stream(SEED, 1))
    cx = np.sqrt(params.hbar / params.mass)
    cv = np.sqrt(params.rate) * params.hbar / params.mass
    dw_from_x = (np.diff(path.x) - path.v[:-1] * dt) / cx
    grad = path.x[:-1]  # V'(x) = k x with k = 1
    dw_from_v = (np.diff(path.v) + grad / params.mass * dt) / cv
    assert np.max(np.abs(dw_from_x - dw_from_v)) < 1e-12
    assert np.max(np.abs(np.cumsum(dw_from_x) - path.wiener[1:])) < 1e-10


def test_sde_reproducible_per_stream():
    state = GaussianMeanState(0.0, 0.0, 1.0, 1.0, 1.0)
    a = sde_evolve(state, PotentialSpec.free(), NATURAL, 1.0, 1e-3, rng=stream(SEED, 2))
    b = sde_evolve(state, PotentialSpec.free(), NATURAL, 1.0, 1e-3, rng=stream(SEED, 2))
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.v, b.v)


def test_free_ensemble_matches_closed_form_variances():
    """Shared noise gives Var(x_T) = (cx^2 + cx cv T + cv^2 T^2/3) T.

    At cx = cv = T = 1 that is 7/3; Var(v_T) = cv^2 T = 1.
    """
    state = GaussianMeanState(0.0, 0.0, 1.0, 1.0, 1.0)
    x, v, w = sde_ensemble(state, PotentialSpec.free(), NATURAL, 1.0, 1e-3, stream(SEED, 3), 2000)
    assert np.std(x) == pytest.approx(np.sqrt(7.0 / 3.0), rel=0.1)
    assert np.std(v) == pytest.approx(1.0, rel=0.1)
    assert np.std(w) == pytest.approx(1.0, rel=0.1)


def test_linearization_warning_on_strongly_varying_force():
    state = GaussianMeanState(1.0, 0.0, 1.0, 1.0, 1.0)
    path = sde_evolve(state, PotentialSpec.harmonic(1.0), NATURAL, 1.0, 1e-3, fluctuations=False)
    assert any("force varies" in msg for msg in path.warnings)
    free = sde_evolve(state, PotentialSpec.free(), NATURAL, 1.0, 1e-3, fluctuations=False)
    assert free.warnings == []


def test_velocity_identity_tracks_mean_motion():
    report = bohmian_velocity_identity(NATURAL)
    assert report.passed
    assert report.center_dev < 1e-6
    assert report.final_velocity_dev < 1e-3
    assert report.ordering_preserved
