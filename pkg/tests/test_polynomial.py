import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from singred.polynomial import Polynomial

coords = arrays(np.float64, 3, elements=st.floats(-2, 2))


def sample_poly():
    x, y, z = (Polynomial.variable(3, i) for i in range(3))
    return 2 * x * x * y - 3 * z + 0.5 * x * y * z + 1.25


def reference(v):
    x, y, z = v
    return 2 * x * x * y - 3 * z + 0.5 * x * y * z + 1.25


@given(coords)
def test_evaluation_matches_closed_form(v):
    assert sample_poly()(v) == pytest.approx(reference(v), abs=1e-12)


@given(coords)
def test_gradient_against_central_differences(v):
    p = sample_poly()
    h = 1e-6
    fd = [(reference(v + h * e) - reference(v - h * e)) / (2 * h) for e in np.eye(3)]
    assert np.allclose(p.gradient(v), fd, atol=1e-6)


def test_batched_calls_match_pointwise(rng):
    p = sample_poly()
    pts = rng.normal(size=(7, 3))
    assert np.allclose(p(pts), [p(q) for q in pts])
    assert np.allclose(p.gradient(pts), [p.gradient(q) for q in pts])


def test_degree_and_derivative():
    p = sample_poly()
    assert p.degree == 3
    x = Polynomial.variable(3, 0)
    assert (x ** 3).derivative(0)(np.array([2.0, 0, 0])) == pytest.approx(12.0)


def test_table_round_trip():
    p = sample_poly()
    q = Polynomial.from_table(3, p.to_table())
    v = np.array([0.3, -1.1, 0.7])
    assert q(v) == pytest.approx(p(v), abs=1e-15)


@given(coords)
def test_linear_substitution(v):
    M = np.array([[1.0, 2.0, 0.0], [0.0, -1.0, 1.0], [3.0, 0.0, 1.0]])
    p = sample_poly()
    assert p.substitute_linear(M)(v) == pytest.approx(reference(M @ v), rel=1e-10, abs=1e-10)


def test_embed_places_variables():
    p = Polynomial.variable(2, 0) * Polynomial.variable(2, 1)
    q = p.embed(4, [1, 3])
    assert q(np.array([9.0, 2.0, 9.0, 5.0])) == pytest.approx(10.0)


def test_quadratic_constructor():
    Q = np.array([[2.0, 1.0], [1.0, 0.0]])
    v = np.array([0.4, -1.5])
    assert Polynomial.quadratic(Q)(v) == pytest.approx(v @ Q @ v)
