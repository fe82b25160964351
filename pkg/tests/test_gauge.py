import numpy as np
import pytest

from singred.catalog import JACOBI_VALID, get_gauge_chart, get_subgroup
from singred.errors import InputError, InvarianceError
from singred.gauge import (
    GaugeField,
    GaugeState,
    bracket_terms,
    coordinate_field,
    free_sternberg_bracket,
    gauge_bracket,
    gauge_flow,
    jacobi_residual,
    leaf_consistency,
    minimal_coupling_form,
    momentum_of_state,
    near_centre_state,
    oscillator_field,
    poisson_tensor,
    random_gauge_field,
    random_state,
)
from singred.homogeneous import homogeneous_tensor
from singred.polynomial import Polynomial


def test_canonical_pair_is_one(rng):
    chart = get_gauge_chart("free_hopf")
    s = random_state(chart, rng)
    x1, p1 = coordinate_field(chart, "x", 0), coordinate_field(chart, "p", 0)
    assert gauge_bracket(x1, p1, s, chart) == 1.0
    assert gauge_bracket(p1, x1, s, chart) == -1.0


def test_abelian_momentum_bracket():
    chart = get_gauge_chart("abelian_plane")
    s = GaugeState(np.array([0.2, -0.4]), np.array([1.0, 2.0]), np.array([0.7]))
    p1, p2 = coordinate_field(chart, "p", 0), coordinate_field(chart, "p", 1)
    assert gauge_bracket(p1, p2, s, chart) == pytest.approx(0.7, abs=1e-14)


def test_hopf_momentum_bracket(rng):
    chart = get_gauge_chart("free_hopf")
    s = random_state(chart, rng)
    p1, p2 = coordinate_field(chart, "p", 0), coordinate_field(chart, "p", 1)
    # only the central slot carries curvature sin(theta)/2
    expected = s.mu[3] * 0.5 * np.sin(s.x[0])
    assert gauge_bracket(p1, p2, s, chart) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("name", ["free_hopf", "abelian_plane", "so3_z2", "flat"])
def test_zero_blocks(name, rng):
    chart = get_gauge_chart(name)
    P = poisson_tensor(chart, random_state(chart, rng))
    n = chart.n
    assert not P[:n, :n].any()
    assert not P[:n, 2 * n:].any() and not P[2 * n:, :n].any()
    assert not P[n:2 * n, 2 * n:].any() and not P[2 * n:, n:2 * n].any()
    assert np.array_equal(P, -P.T)


def test_fiber_block_is_lie_poisson(rng):
    chart = get_gauge_chart("flat")
    s = random_state(chart, rng)
    a, b = coordinate_field(chart, "mu", 0), coordinate_field(chart, "mu", 1)
    assert gauge_bracket(a, b, s, chart) == pytest.approx(-s.mu[2])


def test_leibniz(rng):
    chart = get_gauge_chart("free_hopf")
    s = random_state(chart, rng)
    f, g, h = (random_gauge_field(chart, rng) for _ in range(3))
    lhs = gauge_bracket(f * g, h, s, chart)
    z = s.z
    rhs = f(z) * gauge_bracket(g, h, s, chart) + g(z) * gauge_bracket(f, h, s, chart)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("name", JACOBI_VALID)
def test_jacobi_on_valid_charts(name, rng):
    chart = get_gauge_chart(name)
    s = random_state(chart, rng)
    assert jacobi_residual(chart, s, trials=8, rng=rng) < 1e-8


def test_jacobi_fails_for_negative_control(rng):
    chart = get_gauge_chart("negative_control")
    s = random_state(chart, rng)
    assert jacobi_residual(chart, s, trials=8, rng=rng) > 1e-3


def test_noncentral_coupling_breaks_jacobi(rng):
    # Bianchi holds, yet a coupling through a non-central direction is not Poisson
    chart = get_gauge_chart("so3_poly_noncentral")
    s = random_state(chart, rng)
    assert jacobi_residual(chart, s, trials=8, rng=rng) > 1e-3


def test_free_three_terms(rng):
    chart = get_gauge_chart("free_hopf")
    for _ in range(5):
        s = random_state(chart, rng)
        f, g = random_gauge_field(chart, rng), random_gauge_field(chart, rng)
        ref = free_sternberg_bracket(f, g, s, chart)
        got = bracket_terms(f, g, s, chart)
        for key in ("canonical", "coupling", "fiber"):
            assert got[key] == pytest.approx(ref[key], abs=1e-8)
        assert gauge_bracket(f, g, s, chart) == pytest.approx(sum(ref.values()), abs=1e-8)


@pytest.mark.parametrize("name,sub", [("homogeneous_t_star_s2", "so3_so2"),
                                      ("homogeneous_t_star_so3", "so3_e")])
def test_transitive_collapse(name, sub, rng):
    chart = get_gauge_chart(name)
    s = random_state(chart, rng)
    mu = momentum_of_state(chart, s)
    assert np.array_equal(poisson_tensor(chart, s), homogeneous_tensor(get_subgroup(sub), mu, chart.adapted))


def test_momentum_of_state_lies_in_annihilator(rng):
    chart = get_gauge_chart("so3_so2")
    s = random_state(chart, rng)
    mu = momentum_of_state(chart, s)
    assert abs(mu[2]) < 1e-15 and np.linalg.norm(mu) == pytest.approx(np.linalg.norm(s.mu))


def test_non_invariant_field_rejected(rng):
    chart = get_gauge_chart("so3_so2")
    s = random_state(chart, rng)
    bad = coordinate_field(chart, "mu", 0)
    with pytest.raises(InvarianceError):
        gauge_bracket(bad, bad, s, chart)


def test_state_outside_box_rejected():
    chart = get_gauge_chart("abelian_plane")
    s = GaugeState(np.array([5.0, 0.0]), np.zeros(2), np.ones(1))
    f = coordinate_field(chart, "x", 0)
    with pytest.raises(InputError):
        gauge_bracket(f, f, s, chart)


@pytest.mark.parametrize("name", ["free_hopf", "abelian_plane", "so3_so2", "so3_z2"])
def test_flow_conserves(name, rng):
    chart = get_gauge_chart(name)
    f = oscillator_field(chart, rng)
    tr = gauge_flow(f, near_centre_state(chart, rng), T=2.0, steps=2000, chart=chart)
    assert tr.failed_step is None
    assert tr.max_energy_drift < 1e-9
    assert tr.max_casimir_drift < 1e-9
    assert tr.class_constant


def test_flow_reports_box_exit():
    chart = get_gauge_chart("abelian_plane")
    N = chart.dim
    f = GaugeField(Polynomial.variable(N, 2), name="push")  # x1' = 1
    s = GaugeState(np.array([1.5, 0.0]), np.zeros(2), np.ones(1))
    tr = gauge_flow(f, s, T=2.0, steps=200, chart=chart)
    assert tr.failed_step is not None and "box" in tr.message


def test_minimal_coupling_matrix():
    chart = get_gauge_chart("abelian_plane")
    s = GaugeState(np.array([0.1, 0.2]), np.zeros(2), np.array([0.9]))
    W = minimal_coupling_form(chart, s).matrix
    assert W[0, 1] == pytest.approx(-0.9)
    assert W[0, 2] == 1.0 and W[2, 0] == -1.0


@pytest.mark.parametrize("name", ["free_hopf", "abelian_plane", "flat", "so3_so2", "so3_z2",
                                  "homogeneous_t_star_so3"])
def test_leaf_consistency(name, rng):
    chart = get_gauge_chart(name)
    for _ in range(4):
        s = random_state(chart, rng)
        f, g = random_gauge_field(chart, rng), random_gauge_field(chart, rng)
        res, br, om = leaf_consistency(chart, s, f, g)
        assert res < 1e-6 * max(1.0, abs(br))


def test_free_particle_on_flat_chart():
    chart = get_gauge_chart("flat")
    N, n = chart.dim, chart.n
    f = GaugeField(sum((0.5 * Polynomial.variable(N, n + i) ** 2 for i in range(n)), Polynomial(N)))
    s0 = GaugeState(np.array([-0.5, 0.1]), np.array([0.3, -0.2]), np.array([0.4, 0.5, -0.6]))
    tr = gauge_flow(f, s0, T=1.0, steps=10, chart=chart)
    assert np.allclose(tr.states[-1], np.concatenate([s0.x + s0.p, s0.p, s0.mu]), atol=1e-14)
