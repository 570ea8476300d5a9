import numpy as np
import pytest
from hypothesis import given, strategies as st

from hsground.closedform import InvalidParameter, ProblemParams, ScalarProfileParams
from hsground.functional import (
    DegenerateState,
    OffManifold,
    constrained_energy_forms,
    energy,
    energy_truncated,
    gradient,
    holder_bound_check,
    lambda_norm_sq,
    nehari_curvature,
    nehari_project,
    nehari_residual,
    pairing,
    solve_scaling,
)
from hsground.grid import RadialField, StatePair, dirichlet_energy, sample_profile
from hsground.solvers import semitrivial

BREAKDOWN_KEYS = {"dirichlet_u", "dirichlet_v", "hardy_u", "hardy_v", "crit_u", "crit_v",
                  "coupling", "total"}


def smooth_factor(rng, grid, amp=0.3, modes=5):
    s = (grid.y - grid.y[0]) / (grid.y[-1] - grid.y[0])
    c = rng.normal(size=modes) * amp / np.arange(1, modes + 1)
    return 1 + sum(ck * np.sin(np.pi * k * s) for k, ck in enumerate(c, start=1))


def random_state(rng, params, grid, positive=True):
    z1 = semitrivial("First", float(np.exp(rng.uniform(-1, 1))), params, grid).u
    z2 = semitrivial("Second", float(np.exp(rng.uniform(-1, 1))), params, grid).v
    fu, fv = smooth_factor(rng, grid), smooth_factor(rng, grid)
    if positive:
        fu, fv = np.abs(fu), np.abs(fv)
    a, b = rng.uniform(0.2, 1.5, size=2)
    return StatePair(z1.with_values(a * z1.values * fu), z2.with_values(b * z2.values * fv))


def test_lambda_norm_zero_lambda_is_dirichlet(grid3):
    z = sample_profile(ScalarProfileParams(3, 0.1, 0.5), grid3)
    assert lambda_norm_sq(z, 0.0) == dirichlet_energy(z)


def test_lambda_norm_rejects_out_of_range(grid3):
    with pytest.raises(InvalidParameter):
        lambda_norm_sq(RadialField.zeros(grid3), 0.25)


@given(st.integers(0, 10_000))
def test_lambda_norm_positive(seed):
    from hsground.grid import build_grid

    g = build_grid(4, 1e-6, 1e6, 512)
    rng = np.random.default_rng(seed)
    u = RadialField(g, np.abs(smooth_factor(rng, g)) * np.exp(-(g.y / 4) ** 2))
    assert lambda_norm_sq(u, 0.99) > 0


def test_breakdown_keys(params4, grid4):
    out = energy(semitrivial("First", 1.0, params4, grid4), params4).as_dict()
    assert set(out) == BREAKDOWN_KEYS


def test_semitrivial_energy_is_level(params4, grid4):
    for which, c in (("First", params4.c1), ("Second", params4.c2)):
        assert energy(semitrivial(which, 1.0, params4, grid4), params4).total == pytest.approx(c, rel=1e-9)


def test_zero_state_energy(params4, grid4):
    z = RadialField.zeros(grid4)
    assert energy(StatePair(z, z), params4).total == 0.0


def test_breakdown_total_formula(params4, grid4):
    rng = np.random.default_rng(3)
    P = params4
    b = energy(random_state(rng, P, grid4), P)
    total = (0.5 * (b.dirichlet_u + b.dirichlet_v) - 0.5 * P.lambda1 * b.hardy_u
             - 0.5 * P.lambda2 * b.hardy_v - b.crit_u / P.p1 - b.crit_v / P.p2 - P.nu * b.coupling)
    assert b.total == pytest.approx(total, rel=1e-14)
    assert b.coupling > 0


def test_decoupled_energy_is_sum(params4, grid4):
    P0 = params4.with_nu(0.0)
    rng = np.random.default_rng(4)
    s = random_state(rng, P0, grid4)
    zu, zv = RadialField.zeros(grid4), RadialField.zeros(grid4)
    both = energy(s, P0).total
    parts = energy(StatePair(s.u, zv), P0).total + energy(StatePair(zu, s.v), P0).total
    assert both == pytest.approx(parts, rel=1e-13)


def test_truncated_equals_full_on_nonnegative(params4, grid4):
    s = random_state(np.random.default_rng(5), params4, grid4)
    assert energy_truncated(s, params4) == energy(s, params4)


def test_truncated_on_sign_changes(params4, grid4):
    s = random_state(np.random.default_rng(6), params4, grid4)
    neg = StatePair(s.u * -1.0, s.v)
    t = energy_truncated(neg, params4)
    assert t.crit_u == 0.0 and t.coupling == 0.0
    mixed = StatePair(s.u.with_values(s.u.values * np.sign(np.sin(s.grid.y))), s.v)
    assert energy_truncated(mixed, params4).crit_u < energy(mixed, params4).crit_u


def fd_check(state, params, rng, truncated=False):
    g = gradient(state, params, truncated)
    grid = state.grid
    d = StatePair(state.u.with_values(state.u.values * smooth_factor(rng, grid)),
                  state.v.with_values(state.v.values * smooth_factor(rng, grid)))
    f = energy_truncated if truncated else energy
    eps = 1e-4
    plus = StatePair(state.u.with_values(state.u.values + eps * d.u.values),
                     state.v.with_values(state.v.values + eps * d.v.values))
    minus = StatePair(state.u.with_values(state.u.values - eps * d.u.values),
                      state.v.with_values(state.v.values - eps * d.v.values))
    fd = (f(plus, params).total - f(minus, params).total) / (2 * eps)
    return pairing(g, d), fd


@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(params4, grid4, seed):
    rng = np.random.default_rng(seed)
    an, fd = fd_check(random_state(rng, params4, grid4), params4, rng)
    assert an == pytest.approx(fd, rel=1e-6)


def test_gradient_matches_fd_truncated(params3, grid3):
    rng = np.random.default_rng(11)
    an, fd = fd_check(random_state(rng, params3, grid3), params3, rng, truncated=True)
    assert an == pytest.approx(fd, rel=1e-6)


def test_gradient_vanishes_at_semitrivial(params4, grid4):
    s = semitrivial("First", 1.0, params4, grid4)
    g = gradient(s, params4)
    rng = np.random.default_rng(0)
    for _ in range(3):
        d = StatePair(s.u.with_values(s.u.values * smooth_factor(rng, grid4)),
                      semitrivial("Second", 1.0, params4, grid4).v)
        assert abs(pairing(g, d)) < 1e-8 * params4.c1


def test_gradient_at_zero(params4, grid4):
    z = RadialField.zeros(grid4)
    g = gradient(StatePair(z, z), params4)
    assert not np.any(g.u.values) and not np.any(g.v.values)


def test_nehari_residual_examples(params4, grid4):
    P = params4.with_nu(0.0)
    s = semitrivial("First", 1.0, P, grid4)
    D = lambda_norm_sq(s.u, P.lambda1)
    assert abs(nehari_residual(s, P)) < 1e-10 * D
    expect = 4 * D - 2 ** P.p1 * D  # crit integral equals the norm for the extremal
    assert nehari_residual(s.scaled(2.0), P) == pytest.approx(expect, rel=1e-9)
    assert nehari_residual(s.scaled(1e-2), P) > 0


def test_nehari_residual_zero_state(params4, grid4):
    z = RadialField.zeros(grid4)
    with pytest.raises(DegenerateState):
        nehari_residual(StatePair(z, z), params4)


def test_projection_of_extremal(params4, grid4):
    s = semitrivial("First", 1.0, params4, grid4)
    assert nehari_project(s, params4).t == pytest.approx(1.0, abs=1e-10)
    P0 = params4.with_nu(0.0)
    assert nehari_project(s.scaled(0.37), P0).t == pytest.approx(1 / 0.37, rel=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_projection_residual_and_idempotence(params4, grid4, seed):
    rng = np.random.default_rng(100 + seed)
    s = random_state(rng, params4, grid4, positive=bool(seed % 2))
    s = s.scaled(float(np.exp(rng.uniform(-3, 3))))
    pr = nehari_project(s, params4)
    D = lambda_norm_sq(pr.projected.u, params4.lambda1) + lambda_norm_sq(pr.projected.v, params4.lambda2)
    assert abs(pr.residual) <= 1e-10 * D
    assert nehari_project(pr.projected, params4).t == pytest.approx(1.0, abs=1e-10)
    assert nehari_curvature(pr.projected, params4) < 0


def test_projection_degenerate(params4, grid4):
    s = semitrivial("First", 1.0, params4, grid4)
    with pytest.raises(DegenerateState):
        nehari_project(StatePair(s.u * -1.0, s.v), params4, truncated=True)


@given(st.floats(1e-3, 1e3), st.floats(0, 1e3), st.floats(0, 1e3), st.floats(0, 1e3))
def test_scaling_root(D, A, B, C):
    P = ProblemParams(4, 0.5, 0.5, 1.0, 1.0, 1.0, 1.4, 1.4, nu=2.0)
    if A + B + C < 1e-6:
        return
    t = solve_scaling(D, A, B, C, P)
    val = t ** (P.p1 - 2) * A + t ** (P.p2 - 2) * B + P.nu * 2.8 * t ** 0.8 * C
    assert val == pytest.approx(D, rel=1e-11)


def test_residual_sign_along_rays(params3, grid3):
    s = random_state(np.random.default_rng(9), params3, grid3)
    ts = np.geomspace(1e-3, 1e3, 61)
    signs = np.sign([nehari_residual(s.scaled(t), params3) for t in ts])
    assert signs[0] > 0 and signs[-1] < 0
    assert np.count_nonzero(np.diff(signs)) == 1


def test_constrained_forms_agree(params4, grid4):
    s = semitrivial("First", 1.0, params4, grid4)
    forms = constrained_energy_forms(s, params4)
    for f in forms:
        assert f == pytest.approx(params4.c1, rel=1e-9)
    rng = np.random.default_rng(21)
    pr = nehari_project(random_state(rng, params4, grid4), params4)
    f1, f2, f3 = constrained_energy_forms(pr.projected, params4)
    assert min(f1, f2, f3) > 0
    assert f2 == pytest.approx(f1, rel=1e-9) and f3 == pytest.approx(f1, rel=1e-9)


def test_constrained_forms_off_manifold(params4, grid4):
    s = semitrivial("First", 1.0, params4, grid4)
    with pytest.raises(OffManifold):
        constrained_energy_forms(s.scaled(1.5), params4)


def test_holder_bound(params4, grid4):
    s = random_state(np.random.default_rng(2), params4, grid4)
    rep = holder_bound_check(s, params4)
    assert rep["holds"] and 0 < rep["slack_ratio"] <= 1
    z = semitrivial("First", 1.0, params4, grid4)
    rep0 = holder_bound_check(z, params4)
    assert rep0["coupling"] == 0 and rep0["bound"] == 0


def test_holder_requires_subcritical(grid4):
    P = ProblemParams(4, 0.5, 0.5, 1.0, 1.0, 1.0, 1.5, 1.5)
    with pytest.raises(InvalidParameter):
        holder_bound_check(semitrivial("First", 1.0, P, grid4), P)
