import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gamma

from hsground.closedform import (
    InvalidParameter,
    ScalarProfileParams,
    best_constant,
    hardy_constant,
)
from hsground.grid import (
    RadialField,
    StatePair,
    build_grid,
    dirichlet_energy,
    read_field,
    sample_profile,
    weighted_lp,
    write_field,
)


def omega(N):
    return 2 * math.pi ** (N / 2) / gamma(N / 2)


def test_build_grid_spacing():
    g = build_grid(3, 1e-6, 1e6, 4096)
    assert g.dy == pytest.approx(math.log(1e12) / 4095, rel=1e-14)
    assert g.r[0] == pytest.approx(1e-6, rel=1e-14) and g.r[-1] == pytest.approx(1e6, rel=1e-12)
    assert np.all(np.diff(g.r) > 0)
    np.testing.assert_allclose(np.diff(np.log(g.r)), g.dy, rtol=1e-9)


@pytest.mark.parametrize("args", [(3, 0.0, 1.0, 100), (3, -1.0, 1.0, 100), (3, 1.0, 0.5, 100),
                                  (3, 1e-3, 1e3, 8), (2, 1e-3, 1e3, 100)])
def test_build_grid_rejects(args):
    with pytest.raises(InvalidParameter):
        build_grid(*args)


def test_weights_positive(grid3):
    assert np.all(grid3.w > 0)
    assert grid3.omega == pytest.approx(4 * math.pi, rel=1e-15)


def test_exponential_quadrature(grid3):
    assert grid3.integrate(np.exp(-grid3.r)) == pytest.approx(8 * math.pi, rel=1e-6)


def test_zero_quadrature(grid3):
    assert grid3.integrate(np.zeros(grid3.n)) == 0.0


@pytest.mark.parametrize("a", [0, 1, 2])
def test_quadrature_refinement(a):
    N = 3
    exact = omega(N) * gamma(N + a)
    errs = []
    for n in (256, 512, 1024):
        g = build_grid(N, 1e-10, 1e4, n)
        errs.append(abs(g.integrate(g.r ** a * np.exp(-g.r)) - exact) / exact)
    floor = 1e-12
    for e0, e1 in zip(errs, errs[1:]):
        assert e1 <= floor or e0 / e1 >= 3


def test_dirichlet_refinement_gaussian():
    N = 3
    exact = omega(N) * 4 * gamma((N + 2) / 2) / (2 * 2 ** ((N + 2) / 2))
    errs = []
    for n in (64, 128, 256, 512):
        g = build_grid(N, 1e-8, 1e3, n)
        errs.append(abs(dirichlet_energy(RadialField(g, np.exp(-g.r ** 2))) - exact) / exact)
    assert errs[-1] < 1e-7
    for e0, e1 in zip(errs, errs[1:]):
        assert e1 <= 1e-11 or e0 / e1 >= 3


def test_constant_field_has_no_energy(grid3):
    assert dirichlet_energy(RadialField(grid3, np.ones(grid3.n))) == pytest.approx(0.0, abs=1e-8)


@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_homogeneity(c):
    g = build_grid(3, 1e-6, 1e6, 512)
    u = RadialField(g, np.exp(-g.r) * (1 + g.r) ** -1)
    assert weighted_lp(c * u, 3.0, 0.5) == pytest.approx(abs(c) * weighted_lp(u, 3.0, 0.5), rel=1e-13)
    assert dirichlet_energy(c * u) == pytest.approx(c * c * dirichlet_energy(u), rel=1e-13)


def test_zero_field_norm(grid3):
    assert weighted_lp(RadialField.zeros(grid3), 2.0, 1.0) == 0.0


def test_weighted_lp_rejects_small_exponent(grid3):
    with pytest.raises(InvalidParameter):
        weighted_lp(RadialField.zeros(grid3), 0.5, 0.0)


@pytest.mark.parametrize("N", [3, 4])
@pytest.mark.parametrize("lamf", [0.3, 0.7])
@pytest.mark.parametrize("s", [0.5, 1.0, 1.5])
def test_profile_norm_identity(N, lamf, s):
    lam = lamf * hardy_constant(N)
    g = build_grid(N)
    z = sample_profile(ScalarProfileParams(N, lam, s), g)
    p = 2 * (N - s) / (N - 2)
    target = best_constant(N, lam, s) ** ((N - s) / (2 - s))
    norm = dirichlet_energy(z) - lam * weighted_lp(z, 2.0, 2.0) ** 2
    assert norm == pytest.approx(target, rel=1e-8)
    assert weighted_lp(z, p, s) ** p == pytest.approx(target, rel=1e-8)


def test_non_integrable_tail_is_rejected(grid3):
    with pytest.raises(InvalidParameter):
        grid3.lp_weights(2.0, 2.0, (0.6, 0.9))


@given(st.integers(1, 4), st.lists(st.floats(-8, 8), min_size=3, max_size=3),
       st.lists(st.floats(0.3, 3), min_size=3, max_size=3))
def test_discrete_hardy_inequality(N_off, centers, widths):
    N = 2 + N_off
    g = build_grid(N, 1e-6, 1e6, 1024)
    # compactly supported bumps in ln r, well inside the window
    vals = sum(np.maximum(0.0, 1 - ((g.y - c) / w) ** 2) ** 4 for c, w in zip(centers, widths))
    u = RadialField(g, vals)
    assert hardy_constant(N) * weighted_lp(u, 2.0, 2.0) ** 2 <= dirichlet_energy(u) * (1 + 1e-2)


def test_profile_samples_positive_and_bounded():
    g = build_grid(4)
    z = sample_profile(ScalarProfileParams(4, 0.0, 1.0), g)
    assert np.all(z.values > 0)
    assert z.values[0] == pytest.approx(6.0 ** 1.0, rel=1e-9)


def test_profile_rescaling_on_mesh():
    g = build_grid(4, 1e-6, 1e6, 4097)
    N, mu = 4, 2.0
    u1 = sample_profile(ScalarProfileParams(N, 0.4, 1.0, 1.0), g)
    u2 = sample_profile(ScalarProfileParams(N, 0.4, 1.0, mu), g)
    shifted = np.interp(g.y - math.log(mu), g.y, np.log(u1.values))
    inside = (g.y - math.log(mu)) > g.y[0]
    np.testing.assert_allclose(u2.values[inside], mu ** (-(N - 2) / 2) * np.exp(shifted[inside]), rtol=1e-4)


def test_profile_dimension_mismatch(grid3):
    with pytest.raises(InvalidParameter):
        sample_profile(ScalarProfileParams(4, 0.5, 1.0), grid3)


def test_state_pair_grid_check(grid3, grid4):
    with pytest.raises(ValueError):
        StatePair(RadialField.zeros(grid3), RadialField.zeros(grid4))


def test_field_rejects_bad_values(grid3):
    with pytest.raises(ValueError):
        RadialField(grid3, np.ones(3))
    v = np.ones(grid3.n)
    v[4] = np.nan
    with pytest.raises(ValueError):
        RadialField(grid3, v)


def test_field_roundtrip(tmp_path):
    g = build_grid(3, 1e-3, 1e3, 32)
    u = RadialField(g, np.exp(-g.r) / 3)
    path = tmp_path / "u.dat"
    write_field(path, u)
    lines = path.read_text().splitlines()
    assert lines[0] == "# N=3 n=32"
    assert len(lines) == 33
    mant = lines[1].split()[0].split("e")[0]
    assert len(mant.replace("-", "").replace(".", "")) == 17
    N, r, vals = read_field(path)
    assert N == 3
    np.testing.assert_array_equal(r, g.r)
    np.testing.assert_array_equal(vals, u.values)
