"""Grid, units, potential, and field container behavior."""

import math

import numpy as np
import pytest

from bohmsim.grids import (
    NATURAL,
    ComplexField1D,
    Grid1D,
    JointField2D,
    PotentialSpec,
    RealField1D,
    UnitsContext,
    read_field_csv,
    write_field_csv,
)


def test_grid_basic_geometry():
    g = Grid1D(-8.0, 8.0, 64)
    assert g.dx == pytest.approx(0.25)
    x = g.x()
    assert x[0] == -8.0
    assert x[-1] == pytest.approx(8.0 - g.dx)  # periodic convention: right edge excluded
    assert g.k_nyquist == pytest.approx(math.pi / g.dx)


def test_grid_rejects_bad_sizes():
    with pytest.raises(ValueError):
        Grid1D(-1.0, 1.0, 100)  # not a power of two
    with pytest.raises(ValueError):
        Grid1D(-1.0, 1.0, 4)
    with pytest.raises(ValueError):
        Grid1D(2.0, -2.0, 64)


def test_wavenumbers_match_fft_layout():
    g = Grid1D(-4.0, 4.0, 32)
    k = g.k()
    assert k[0] == 0.0
    assert np.max(k) < g.k_nyquist + 1e-12
    assert k[1] == pytest.approx(2.0 * math.pi / 8.0)


def test_units_contexts():
    assert NATURAL.hbar == 1.0 and NATURAL.mass == 1.0
    si = UnitsContext.si(4.7e-26)
    assert si.hbar == pytest.approx(1.054571817e-34, rel=1e-9)
    assert si.mode == "si"


def test_gaussian_field_is_normalized_with_requested_spread():
    g = Grid1D(-16.0, 16.0, 512)
    f = ComplexField1D.gaussian(g, 1.0, 0.7, 0.3, 1.0)
    assert f.norm() == pytest.approx(1.0, abs=1e-12)
    dens = f.density().values
    x = g.x()
    mean = np.trapezoid(x * dens, dx=g.dx)
    var = np.trapezoid((x - mean) ** 2 * dens, dx=g.dx)
    assert mean == pytest.approx(1.0, abs=1e-9)
    assert math.sqrt(var) == pytest.approx(0.7, rel=1e-9)


def test_interference_pair_symmetric_and_normalized():
    g = Grid1D(-32.0, 32.0, 1024)
    f = ComplexField1D.interference_pair(g, 4.0, 1.0, 1.0)
    assert f.norm() == pytest.approx(1.0, abs=1e-12)
    dens = f.density().values
    mirrored = np.roll(dens[::-1], 1)  # x -> -x on the periodic grid
    assert np.max(np.abs(dens - mirrored)) < 1e-12


def test_potential_values_and_gradients():
    g = Grid1D(-4.0, 4.0, 64)
    x = g.x()
    harm = PotentialSpec.harmonic(2.0)
    assert np.allclose(harm.values(g), x**2)
    assert np.allclose(harm.grad(x), 2.0 * x)
    lin = PotentialSpec.linear(0.5)
    assert np.allclose(lin.grad(x), 0.5)
    free = PotentialSpec.free()
    assert np.allclose(free.values(g), 0.0)


def test_tabulated_potential_matches_samples():
    g = Grid1D(-4.0, 4.0, 64)
    vals = np.cos(g.x())
    tab = PotentialSpec.tabulated(vals)
    assert np.allclose(tab.values(g), vals)


def test_joint_field_product_and_marginal():
    gx = Grid1D(-8.0, 8.0, 128)
    gy = Grid1D(-8.0, 8.0, 64)
    fx = ComplexField1D.gaussian(gx, 0.0, 1.0, 0.0, 1.0)
    fy = ComplexField1D.gaussian(gy, 1.0, 0.5, 0.0, 1.0)
    joint = JointField2D.from_product(fx, fy)
    assert joint.values.shape == (128, 64)
    assert joint.norm() == pytest.approx(1.0, abs=1e-10)
    marg = joint.marginal_y()
    assert np.allclose(marg.values, fy.density().values, atol=1e-12)


def test_real_field_integral():
    g = Grid1D(-8.0, 8.0, 256)
    f = RealField1D(g, np.exp(-g.x() ** 2))
    assert f.integral() == pytest.approx(math.sqrt(math.pi), rel=1e-10)


def test_field_csv_roundtrip(tmp_path):
    g = Grid1D(-2.0, 2.0, 32)
    f = ComplexField1D.gaussian(g, 0.1, 0.5, 2.0, 1.0)
    path = tmp_path / "field.csv"
    write_field_csv(f, path)
    header = path.read_text().splitlines()[0]
    assert header == "x,re,im,density"
    back = read_field_csv(path)
    assert np.allclose(back.values, f.values, atol=0, rtol=0)  # 17 digits round-trips exactly
