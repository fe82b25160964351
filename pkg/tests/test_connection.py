import numpy as np
import pytest

from singred.catalog import get_connection
from singred.connection import (
    ConnectionChart,
    LoopPath,
    ambrose_singer_check,
    bianchi_residual,
    curvature_commutator,
    curvature_commutator_table,
    curvature_rank,
    curvature_structure,
    holonomy,
    hopf_curvature_exact,
    lie_closure,
    random_loop,
    signed_solid_angle,
)
from singred.errors import InputError
from singred.lie import so3, u1
from singred.polynomial import Polynomial


@pytest.mark.parametrize("name", ["flat", "abelian_plane", "hopf", "so3_poly"])
def test_curvature_routes_agree(name):
    chart = get_connection(name)
    S, C = curvature_structure(chart), curvature_commutator_table(chart)
    for x in chart.grid(3):
        assert np.abs(S(x) - C(x)).max() < 1e-7


def test_abelian_plane_curvature_is_one():
    chart = get_connection("abelian_plane")
    assert curvature_structure(chart)([0.3, -0.7])[0, 0, 1] == pytest.approx(1.0)


def test_hopf_curvature_closed_form():
    chart = get_connection("hopf")
    for th in (0.4, 1.0, 2.5):
        assert curvature_structure(chart)([th, 0.1])[0, 0, 1] == pytest.approx(
            hopf_curvature_exact(th), abs=1e-14)


def test_nonabelian_term_sign():
    # constant A: curvature is c A_1 A_2 only; A_1 = e1, A_2 = e2 gives e3
    x = Polynomial.variable(2, 0)
    z = 0 * x
    chart = ConnectionChart.from_polynomials(so3(), [[z + 1, z, z], [z, z + 1, z]],
                                             [[-1, 1], [-1, 1]])
    assert np.allclose(curvature_structure(chart)([0, 0])[:, 0, 1], [0, 0, 1])
    assert np.allclose(curvature_commutator(chart, [0.0, 0.0], 0, 1), [0, 0, 1], atol=1e-8)


def test_commutator_route_is_in_algebra():
    chart = get_connection("so3_poly")
    _, res = curvature_commutator(chart, [0.1, 0.2, -0.3], 0, 2, return_residual=True)
    assert res < 1e-8


def test_bianchi_nonabelian():
    chart = get_connection("so3_poly")
    for x in chart.grid(3):
        assert bianchi_residual(chart, x) < 1e-6


def test_unit_square_stokes():
    chart = get_connection("abelian_plane")
    hol = holonomy(chart, LoopPath.square([0.0, 0.0], 1.0))
    assert hol.logarithm[0] == pytest.approx(-1.0, abs=1e-10)
    assert np.allclose(hol.element, u1().exponential([-1.0]), atol=1e-10)


def test_circle_stokes():
    chart = get_connection("abelian_plane")
    hol = holonomy(chart, LoopPath.circle([0.1, -0.2], 0.8, samples=512))
    # polyline area of the inscribed 512-gon
    area = 0.5 * 512 * 0.8 ** 2 * np.sin(2 * np.pi / 512)
    assert hol.logarithm[0] == pytest.approx(-area, abs=1e-10)


def test_hopf_triangle_solid_angle():
    chart = get_connection("hopf")
    v1 = [np.sin(0.6), 0.0, np.cos(0.6)]
    v2 = [np.sin(1.2) * np.cos(0.9), np.sin(1.2) * np.sin(0.9), np.cos(1.2)]
    v3 = [np.sin(1.5) * np.cos(-0.4), np.sin(1.5) * np.sin(-0.4), np.cos(1.5)]
    expected = -0.5 * signed_solid_angle(v1, v2, v3)
    errs = [holonomy(chart, LoopPath.spherical_triangle(v1, v2, v3, per_edge=k)).logarithm[0]
            - expected for k in (256, 512, 1024)]
    # chord error of the coordinate polyline is second order
    assert abs(errs[2]) < 5e-8
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_reverse_inverts(rng):
    chart = get_connection("so3_poly")
    loop = random_loop(chart, rng)
    g = holonomy(chart, loop).element
    gr = holonomy(chart, loop.reversed()).element
    assert np.allclose(g @ gr, np.eye(3), atol=1e-10)


def test_concatenation_composes_right_to_left(rng):
    chart = get_connection("so3_poly")
    a = LoopPath.square([0.0, 0.0, 0.0], 0.5, dims=(0, 1), n=3)
    b = LoopPath.square([0.0, 0.0, 0.0], 0.5, dims=(1, 2), n=3)
    ga, gb = holonomy(chart, a).element, holonomy(chart, b).element
    gab = holonomy(chart, a.concatenate(b)).element
    assert np.allclose(gab, gb @ ga, atol=1e-10)


def test_open_loop_rejected():
    chart = get_connection("abelian_plane")
    with pytest.raises(InputError):
        holonomy(chart, LoopPath(np.array([[0.0, 0.0], [1.0, 0.0]])))


def test_loop_leaving_box_rejected():
    chart = get_connection("abelian_plane")
    with pytest.raises(InputError):
        holonomy(chart, LoopPath.square([1.5, 1.5], 1.0))


def test_lie_closure_generates_so3():
    assert lie_closure(so3(), [[1.0, 0, 0], [0, 1.0, 0]]).shape[0] == 3
    assert lie_closure(so3(), [[1.0, 0, 0]]).shape[0] == 1


@pytest.mark.parametrize("name", ["abelian_plane", "hopf", "so3_poly"])
def test_ambrose_singer(name, rng):
    chart = get_connection(name)
    loops = [random_loop(chart, rng) for _ in range(4)]
    report = ambrose_singer_check(chart, loops, chart.grid(3))
    assert report.passed, report.to_record()["loops"]


def test_flat_curvature_rank_zero():
    chart = get_connection("flat")
    assert curvature_rank(chart, chart.grid(3)) == 0
    hol = holonomy(chart, LoopPath.square([-0.5, -0.5], 0.7))
    assert np.allclose(hol.element, np.eye(3))
