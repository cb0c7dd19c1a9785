import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracball.domain import (BallDomain, FracOrder, ScalarField, VectorField, check_radial_invariance,
                             constant_field, distance_to_boundary, negative_part, positive_part,
                             random_rotation)


def test_distance_examples():
    dom = BallDomain(3, 1.0)
    assert distance_to_boundary(np.zeros(3), dom) == 1.0
    assert distance_to_boundary(np.array([1.0, 0, 0]), dom) == 0.0
    assert distance_to_boundary(np.array([0.5, 0, 0]), dom) == 0.5


def test_distance_rejects_outside():
    with pytest.raises(ValueError):
        distance_to_boundary(np.array([1.1, 0, 0]), BallDomain(3, 1.0))


@pytest.mark.parametrize("n,r", [(0, 1.0), (3, 0.0), (3, -1.0), (2.5, 1.0)])
def test_ball_rejects_bad_parameters(n, r):
    with pytest.raises(ValueError):
        BallDomain(n, r)


def test_frac_order_exponents():
    s = FracOrder(0.75)
    assert s.two_s == 1.5
    assert s.riesz_exponent(3) == pytest.approx(1.5)
    assert s.critical_exponent(3) == pytest.approx(2.0)
    assert s.dual_exponent == pytest.approx(4.0)
    s.require_drift_range()
    with pytest.raises(ValueError):
        FracOrder(0.4).require_drift_range()
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            FracOrder(bad)


def test_radial_field_derivatives():
    u = ScalarField.radial_field(lambda r: r * r, 3, d1=lambda r: 2 * r, d2=lambda r: 2 + 0 * r)
    X = np.array([[0.0, 0, 0], [0.3, -0.2, 0.5]])
    assert np.allclose(u.laplacian(X), 6.0)
    assert np.allclose(u.gradient(X), 2 * X)


def test_radial_invariance_detects_non_radial():
    rng = np.random.default_rng(0)
    good = ScalarField.radial_field(lambda r: np.exp(-r), 3)
    assert check_radial_invariance(good, rng) < 1e-12
    bad = ScalarField(func=lambda x: x[..., 0], n=3, radial=True, profile=lambda r: r)
    assert check_radial_invariance(bad, rng) > 0.1


def test_random_rotation_orthogonal():
    Q = random_rotation(4, np.random.default_rng(3))
    assert np.allclose(Q @ Q.T, np.eye(4))
    assert abs(np.linalg.det(Q)) == pytest.approx(1.0)


def test_dimension_check_on_call():
    with pytest.raises(ValueError):
        constant_field(1.0, 3)(np.zeros((2, 2)))


def test_vector_field_magnitude():
    b = VectorField(func=lambda x: 2 * x, n=3)
    assert b.magnitude()(np.array([[3.0, 4.0, 0.0]]))[0] == pytest.approx(10.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(-3, 3))
def test_positive_minus_negative_part(p, k):
    c = ScalarField(func=lambda x: x[..., 0] * k + np.sin(x[..., 1]), n=3)
    x = np.array([p])
    cp, cm = positive_part(c)(x), negative_part(c)(x)
    assert np.all(cp >= 0) and np.all(cm >= 0)
    assert np.allclose(cp - cm, c(x))
    assert np.all(cp * cm == 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(-2, 2), st.floats(-2, 2))
def test_scaled_and_combined(lam, a, b):
    u = ScalarField.radial_field(lambda r: 1 + r * r, 3, d1=lambda r: 2 * r, d2=lambda r: 2 + 0 * r)
    v = constant_field(2.0, 3)
    X = np.random.default_rng(0).uniform(-0.5, 0.5, (5, 3))
    assert np.allclose(u.scaled(lam)(X), lam * u(X))
    assert np.allclose(u.scaled(lam).laplacian(X), 6 * lam)
    w = u.combine(a, v, b)
    assert np.allclose(w(X), a * u(X) + 2 * b)
