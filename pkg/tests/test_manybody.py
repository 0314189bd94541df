"""Center-of-mass factorization and single-hit amplification."""

import numpy as np
import pytest

from bohmsim.bath import BathParticleSpec, InteractionWindow, conditional_pair
from bohmsim.grids import Grid1D
from bohmsim.manybody import (
    GaussianProductState,
    ManyBodyConfig,
    SeparableComState,
    TabulatedComState,
    collision_on_particle_k,
    com_conditional,
    com_split,
    exponent_identity_residual,
    measure_amplification,
    reconstruct,
)
from bohmsim.rng import stream

SEED = 60229
GRID = Grid1D(-8.0, 8.0, 256)
WINDOW = InteractionWindow(0.0, 1.0)


def test_com_split_and_reconstruct_roundtrip():
    cfg = ManyBodyConfig((0.5, -1.0, 2.5, 0.0))
    x_cm, rel = com_split(cfg)
    assert x_cm == pytest.approx(0.5)
    assert len(rel) == 3
    back = reconstruct(x_cm, rel)
    assert np.allclose(back, cfg.positions, atol=1e-14)


def test_reconstruct_balances_last_particle():
    xs = reconstruct(1.0, np.array([0.25, -0.75]))
    assert np.mean(xs) == pytest.approx(1.0, abs=1e-14)


def test_gaussian_product_conditional_is_gaussian_in_com():
    """For equal packets at the actual relatives, the conditional center of
    mass is a Gaussian of width sigma/sqrt(N)."""
    cfg = ManyBodyConfig((0.4, -0.4, 0.0))
    state = GaussianProductState(cfg.positions, (1.0,) * 3, (0.0,) * 3)
    cond = com_conditional(state, cfg.relatives, GRID)
    dens = cond.field.density()
    x = GRID.x()
    m1 = np.trapezoid(x * dens.values, dx=GRID.dx)
    m2 = np.trapezoid(x**2 * dens.values, dx=GRID.dx)
    assert m1 == pytest.approx(0.0, abs=1e-10)
    assert np.sqrt(m2 - m1**2) == pytest.approx(1.0 / np.sqrt(3.0), rel=1e-6)


def test_separable_state_ignores_relatives():
    from bohmsim.grids import ComplexField1D

    phi = ComplexField1D.gaussian(GRID, sigma=0.7)
    state = SeparableComState(phi)
    a = com_conditional(state, [0.3], GRID)
    b = com_conditional(state, [-2.0, 1.1], GRID)
    assert np.array_equal(a.field.values, b.field.values)


def test_tabulated_state_matches_product_route():
    """An N=2 table built from a product state reproduces its conditionals."""
    rel_grid = Grid1D(-4.0, 4.0, 128)
    centers, sigmas = (0.5, -0.5), (1.0, 0.8)
    state = GaussianProductState(centers, sigmas, (0.0, 0.0))
    x_cm = GRID.x()[:, None]
    r1 = rel_grid.x()[None, :]
    # particle coordinates for N=2: x1 = x_cm + r1, x2 = x_cm - r1
    vals = np.exp(
        -((x_cm + r1 - centers[0]) ** 2) / (4 * sigmas[0] ** 2)
        - ((x_cm - r1 - centers[1]) ** 2) / (4 * sigmas[1] ** 2)
    )
    tab = TabulatedComState(GRID, (rel_grid,), vals)
    for r in (0.5, 1.0, -0.3):
        a = tab.conditional_com(np.array([r]), GRID)
        b = state.conditional_com(np.array([r]), GRID)
        assert np.max(np.abs(a.values - b.values)) < 1e-6


def test_tabulated_state_rejects_more_than_two_relative_axes():
    from bohmsim.errors import ResourceLimitError

    g = Grid1D(-2.0, 2.0, 16)
    with pytest.raises(ResourceLimitError):
        TabulatedComState(g, (g, g, g), np.zeros((16, 16, 16, 16)))


def test_exponent_identity_randomized():
    """The per-particle hit exponent equals the center-of-mass exponent."""
    rng = stream(SEED, 0)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 6))
        X0 = rng.uniform(-3.0, 3.0, n)
        Y0 = float(rng.uniform(-2.0, 2.0))
        g = float(rng.uniform(0.0, 1.0))
        x_cm = float(rng.uniform(-2.0, 2.0))
        r = rng.uniform(-1.5, 1.5, n - 1)
        k = int(rng.integers(0, n))
        worst = max(worst, exponent_identity_residual(X0, Y0, g, x_cm, r, k))
    assert worst < 1e-12


def test_collision_on_any_particle_multiplies_com_state():
    cfg = ManyBodyConfig((0.6, -0.2, -0.4))
    state = GaussianProductState(cfg.positions, (0.9,) * 3, (0.0,) * 3)
    spec = BathParticleSpec(sigma=0.7)
    for k in range(3):
        out = collision_on_particle_k(state, cfg, k, spec, Y0=0.3, w=WINDOW, t=1.0, grid=GRID)
        assert out.com_multiplier_residual < 1e-8


def test_single_particle_hit_matches_two_body_route():
    """N=1 collision reduces to the plain system-bath conditional state."""
    cfg = ManyBodyConfig((0.3,))
    state = GaussianProductState((0.3,), (1.0,), (0.0,))
    spec = BathParticleSpec(sigma=2.0)
    gy = Grid1D(-16.0, 16.0, 512)
    out = collision_on_particle_k(state, cfg, 0, spec, Y0=0.2, w=WINDOW, t=1.0, grid=GRID)
    from bohmsim.grids import ComplexField1D

    psi_s = ComplexField1D.gaussian(GRID, center=0.3, sigma=1.0)
    cond, _ = conditional_pair(psi_s, spec, gy, 0.3, 0.2, WINDOW, 1.0)
    assert np.max(np.abs(out.conditional.field.values - cond.field.values)) < 1e-9


def test_amplification_slope_estimates_single_rate():
    report = measure_amplification((1, 2, 4, 8), 0.5, 400, 20.0, stream(SEED, 1))
    assert report.slope == pytest.approx(0.5, abs=0.05)
    assert len(report.rows) == 4
    for n, rate, stderr in report.rows:
        assert rate == pytest.approx(0.5 * n, rel=0.1)
        assert stderr > 0
