"""Localization hits, the center law, and the matching master equation."""

import numpy as np
import pytest

from bohmsim.bohm import DensityMatrix1D
from bohmsim.errors import CollapseToNullError
from bohmsim.grw import (
    GrwParams,
    PoissonClock,
    amplified_rate,
    apply_localization,
    collapse_center_pdf,
    evolve_grw,
    grw_ensemble,
    localization_profile,
    master_equation_evolve,
    sample_collapse_center,
)
from bohmsim.grids import NATURAL, ComplexField1D, Grid1D, PotentialSpec
from bohmsim.propagation import split_step_propagate
from bohmsim.rng import stream, substreams
from bohmsim.stats import KS_C99, ks_statistic

SEED = 19860711
GRID = Grid1D(-16.0, 16.0, 512)

# ||L(0) psi||: overlap of N(0, sigma^2) with N(0, r_C^2/2) at the
# origin, to the -1/4 power: (2 pi (sigma^2 + r_C^2/2))^(-1/4) for sigma=r_C=1.
PRE_NORM_CENTER_HIT = 0.5707319930889453
# center law for that packet: normal with std sqrt(sigma^2 + r_C^2/2).
CENTER_LAW_STD = 1.224744871391589


def test_localization_profile_shape():
    x = GRID.x()
    prof = localization_profile(x, 0.5, 2.0)
    assert np.max(prof) == pytest.approx((np.pi * 4.0) ** -0.25, rel=1e-12)
    sq = prof**2
    mean = np.trapezoid(x * sq, dx=GRID.dx) / np.trapezoid(sq, dx=GRID.dx)
    var = np.trapezoid((x - mean) ** 2 * sq, dx=GRID.dx) / np.trapezoid(sq, dx=GRID.dx)
    assert mean == pytest.approx(0.5, abs=1e-12)
    assert var == pytest.approx(2.0, rel=1e-10)  # squared profile has var r_C^2/2


def test_apply_localization_pre_norm_and_renormalization():
    psi = ComplexField1D.gaussian(GRID, sigma=1.0)
    out, pre = apply_localization(psi, 0.0, 1.0)
    assert pre == pytest.approx(PRE_NORM_CENTER_HIT, rel=1e-6)
    assert abs(out.norm() - 1.0) < 1e-12


def test_localization_far_from_support_raises():
    psi = ComplexField1D.gaussian(GRID, sigma=0.5)
    with pytest.raises(CollapseToNullError):
        apply_localization(psi, 14.0, 0.3)


def test_center_pdf_matches_direct_quadrature():
    """FFT convolution agrees with brute-force quadrature of ||L(z) psi||^2."""
    psi = ComplexField1D.interference_pair(GRID, separation=2.0, sigma=0.6, speed=0.0)
    pdf = collapse_center_pdf(psi, 0.8)
    x = GRID.x()
    dens = np.abs(psi.values) ** 2
    direct = np.array(
        [np.sum(dens * localization_profile(x, z, 0.8) ** 2) * GRID.dx for z in x]
    )
    assert pdf.integral() == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(pdf.values - direct)) < 1e-10


def test_center_samples_follow_closed_form_law():
    psi = ComplexField1D.gaussian(GRID, sigma=1.0)
    zs = sample_collapse_center(psi, 1.0, stream(SEED, 0), 20000)
    assert np.std(zs) == pytest.approx(CENTER_LAW_STD, rel=0.02)
    assert ks_statistic(zs, collapse_center_pdf(psi, 1.0)) < KS_C99 / np.sqrt(20000)


def test_poisson_clock_moments():
    clock = PoissonClock(5.0, stream(SEED, 1))
    counts = np.array([len(clock.sample_times(10.0)) for _ in range(500)])
    assert counts.mean() == pytest.approx(50.0, rel=0.03)
    assert counts.var() == pytest.approx(50.0, rel=0.2)


def test_amplified_rate_scales_with_particle_count():
    assert amplified_rate(GrwParams(0.5, 1.0, n_particles=8)) == 4.0


def test_no_events_reduces_to_unitary_evolution():
    """With a negligible rate the hybrid run is bit-equal to pure Strang."""
    psi = ComplexField1D.gaussian(GRID, sigma=1.0, momentum=0.3)
    params = GrwParams(1e-12, 1.0)
    out, events = evolve_grw(psi, PotentialSpec.free(), params, 1.0, stream(SEED, 2), dt=1e-3)
    assert events == []
    ref = split_step_propagate(psi, PotentialSpec.free(), NATURAL, 1e-3, 1000)
    assert np.array_equal(out.values, ref.values)


def test_evolve_grw_deterministic_per_stream():
    psi = ComplexField1D.gaussian(GRID, sigma=1.0)
    params = GrwParams(4.0, 1.0)
    a, ev_a = evolve_grw(psi, PotentialSpec.free(), params, 2.0, stream(SEED, 3))
    b, ev_b = evolve_grw(psi, PotentialSpec.free(), params, 2.0, stream(SEED, 3))
    assert np.array_equal(a.values, b.values)
    assert ev_a == ev_b
    assert len(ev_a) > 0
    r_sup = (np.pi * params.r_c**2) ** -0.25
    for ev in ev_a:
        assert 0.0 < ev.pre_norm <= r_sup + 1e-12


def test_batch_of_one_matches_single_run():
    psi = ComplexField1D.gaussian(GRID, sigma=1.0)
    params = GrwParams(3.0, 1.0)
    single, ev = evolve_grw(psi, PotentialSpec.free(), params, 1.0, stream(SEED, 4))
    batch, logs = grw_ensemble(psi, PotentialSpec.free(), params, 1.0, [stream(SEED, 4)])
    assert np.array_equal(batch[0], single.values)
    assert logs[0] == ev


def test_master_offdiagonal_decay_closed_form():
    """Without kinetics the master equation is entrywise exponential decay."""
    grid = Grid1D(-8.0, 8.0, 128)
    psi = ComplexField1D.interference_pair(grid, separation=2.0, sigma=0.6, speed=0.0)
    rho0 = DensityMatrix1D.from_pure(psi)
    params = GrwParams(1.0, 0.8)
    T = 1.5
    out = master_equation_evolve(rho0, PotentialSpec.free(), params, T, dt=0.01, kinetic=False)
    x = grid.x()
    dx2 = (x[:, None] - x[None, :]) ** 2
    factor = np.exp(-params.lambda_rate * T * (1.0 - np.exp(-dx2 / (4.0 * params.r_c**2))))
    assert np.max(np.abs(out.values - rho0.values * factor)) < 1e-6


def test_unraveling_average_approaches_master_equation():
    grid = Grid1D(-8.0, 8.0, 64)
    psi = ComplexField1D.interference_pair(grid, separation=1.5, sigma=0.5, speed=0.0)
    params = GrwParams(1.0, 0.8)
    T = 1.0
    vals, _ = grw_ensemble(
        psi, PotentialSpec.free(), params, T, substreams(SEED, 100, 200), dt=1e-2
    )
    avg = np.einsum("ri,rj->ij", vals, np.conj(vals)) / len(vals)
    rho = master_equation_evolve(
        DensityMatrix1D.from_pure(psi), PotentialSpec.free(), params, T
    )
    assert np.max(np.abs(avg - rho.values)) < 0.1
