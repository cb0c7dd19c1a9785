import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from fracball.domain import BallDomain, ScalarField, constant_field
from fracball.operator import (PVSpec, bump_constant, classical_laplacian, mollify,
                               pv_fractional_laplacian, spherical_mean, standard_bump,
                               truncate_min)
from fracball.quadrature import QuadSpec, integrate_ball, sphere_rule

N = 3


def torsion(s, n=N):
    """gamma (1 - |x|^2)_+^s has (-Delta)^s equal to 1 in the ball."""
    g = gamma(n / 2) / (4 ** s * gamma(1 + s) * gamma(n / 2 + s))
    return ScalarField.radial_field(lambda r: g * np.maximum(1 - r ** 2, 0) ** s, n,
                                    support="ball", support_radius=1.0, decay=math.inf)


def bubble(s, n=N):
    return ScalarField.radial_field(lambda r: (1 + r ** 2) ** (-(n - 2 * s) / 2), n, decay=n - 2 * s)


def bubble_frac(s, x, n=N):
    K = 4 ** s * gamma(n / 2 + s) / gamma(n / 2 - s)
    return K * (1 + np.sum(np.asarray(x) ** 2, -1)) ** (-(n + 2 * s) / 2)


@pytest.mark.parametrize("s", [0.4, 0.75])
@pytest.mark.parametrize("a", [0.0, 0.3, 0.9])
def test_torsion_function(s, a):
    r = pv_fractional_laplacian(torsion(s), np.array([a, 0, 0]), s, full_output=True)
    assert abs(r.value - 1.0) <= 1e-6


@pytest.mark.parametrize("s", [0.25, 0.4, 0.75])
@pytest.mark.parametrize("a", [0.0, 0.5, 2.0])
def test_bubble(s, a):
    x = np.array([0.0, a, 0.0])
    assert pv_fractional_laplacian(bubble(s), x, s) == pytest.approx(bubble_frac(s, x), rel=1e-6)


def test_constant_gives_zero():
    for s in (0.3, 0.75):
        assert abs(pv_fractional_laplacian(constant_field(2.0, 3), np.array([0.2, 0, 0]), s)) <= 1e-7


def test_non_radial_path_on_translated_bubble():
    s = 0.75
    c = np.array([0.3, -0.2, 0.1])
    b = bubble(s)
    moved = ScalarField(func=lambda x: b(x - c), n=3, decay=b.decay)
    x = np.array([0.2, 0.1, 0.0])
    val = pv_fractional_laplacian(moved, x, s, q=QuadSpec(tol=1e-7))
    assert val == pytest.approx(bubble_frac(s, x - c), rel=1e-5)


def test_rejects_growth_outside_weighted_class():
    u = ScalarField.radial_field(lambda r: 1 + r ** 2, 3, decay=-2.0)
    with pytest.raises(ValueError):
        pv_fractional_laplacian(u, np.zeros(3), 0.75)


def test_split_radius_independence():
    s, u = 0.6, bubble(0.6)
    x = np.array([0.4, 0.0, 0.0])
    a = pv_fractional_laplacian(u, x, s, PVSpec(delta=0.1), full_output=True)
    b = pv_fractional_laplacian(u, x, s, PVSpec(delta=0.05), full_output=True)
    assert abs(a.value - b.value) <= a.err_estimate + b.err_estimate + 1e-9


@settings(max_examples=10, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.0, 0.8))
def test_linearity(alpha, beta, a):
    s = 0.75
    u, v = torsion(s), bubble(s)
    x = np.array([a, 0.0, 0.0])
    w = u.combine(alpha, v, beta)
    lhs = pv_fractional_laplacian(w, x, s)
    rhs = alpha * pv_fractional_laplacian(u, x, s) + beta * pv_fractional_laplacian(v, x, s)
    assert lhs == pytest.approx(rhs, abs=1e-6 * (1 + abs(alpha) + abs(beta)))


def test_spherical_integral_matches_polar_quadrature():
    prof = lambda r: np.exp(-r) * np.cos(r)
    a = 0.7
    for rho in (0.2, 0.7, 1.5):
        ref = 2 * np.pi * quad(lambda m: prof(np.sqrt(a * a + rho * rho + 2 * a * rho * m)), -1, 1,
                               epsabs=1e-14, epsrel=1e-14, limit=200)[0]
        assert spherical_mean(prof, a, rho, 3) == pytest.approx(ref, rel=1e-12)
    dirs, w = sphere_rule(3, 64)
    x = np.array([a, 0.0, 0.0])
    direct = np.dot(w, prof(np.linalg.norm(x + 0.2 * dirs, axis=1)))
    assert spherical_mean(prof, a, 0.2, 3) == pytest.approx(direct, rel=1e-12)


def test_classical_laplacian_examples():
    u = ScalarField.radial_field(lambda r: r * r, 3, d1=lambda r: 2 * r, d2=lambda r: 2 + 0 * r)
    x = np.array([[0.3, 0.2, -0.1]])
    assert classical_laplacian(u, x)[0] == pytest.approx(6.0)
    assert classical_laplacian(u, x, method="fd")[0] == pytest.approx(6.0, abs=1e-5)
    lin = ScalarField(func=lambda x: x[..., 0], n=3)
    assert abs(classical_laplacian(lin, x)[0]) <= 1e-6


def test_bump_has_unit_mass():
    for n in (2, 3):
        eta = standard_bump(n, 0.2)
        assert integrate_ball(eta, BallDomain(n, 0.2), QuadSpec(tol=1e-12)).value == pytest.approx(1.0, abs=1e-10)
    assert bump_constant(3) > 0


def test_mollify_constant_and_linear():
    X = np.array([[0.0, 0.0, 0.0], [0.3, 0.2, 0.1]])
    assert np.allclose(mollify(constant_field(1.0, 3), 0.05)(X), 1.0, atol=1e-10)
    lin = ScalarField(func=lambda x: 2 * x[..., 0] - x[..., 2] + 1, n=3)
    assert np.allclose(mollify(lin, 0.05)(X), lin(X), atol=1e-10)


def test_mollify_quadratic_second_moment():
    # eta * |x|^2 = |x|^2 + int |y|^2 eta_eps(y) dy
    eps = 0.1
    u = ScalarField.radial_field(lambda r: r * r, 3)
    eta = standard_bump(3, eps)
    m2 = integrate_ball(ScalarField(func=lambda y: eta(y) * np.sum(y * y, -1), n=3),
                        BallDomain(3, eps), QuadSpec(tol=1e-14)).value
    X = np.array([[0.0, 0, 0], [0.5, 0, 0]])
    assert np.allclose(mollify(u, eps)(X), np.sum(X * X, -1) + m2, rtol=1e-9)


def test_mollify_shrinks_domain():
    u = ScalarField(func=lambda x: x[..., 0], n=3, domain_radius=1.0)
    w = mollify(u, 0.1)
    assert w.domain_radius == pytest.approx(0.9)
    with pytest.raises(ValueError):
        w(np.array([[0.95, 0, 0]]))


def test_mollifier_convergence_in_l1():
    u = ScalarField.radial_field(lambda r: np.abs(r - 0.5), 3, kinks=(0.5,))
    dom = BallDomain(3, 0.9)
    errs = []
    for eps in (0.1, 0.05, 0.025):
        w = mollify(u, eps)
        diff = ScalarField.radial_field(lambda r, w=w: np.abs(w.profile(r) - u.profile(r)), 3, kinks=(0.5,))
        errs.append(integrate_ball(diff, dom, QuadSpec(tol=1e-9)).value)
    assert errs[0] > errs[1] > errs[2]


def test_truncate_min_examples():
    X = np.random.default_rng(0).uniform(-0.5, 0.5, (20, 3))
    pos = ScalarField.radial_field(lambda r: 1 + r * r, 3)
    assert np.all(truncate_min(pos)(X) == 0)
    neg = ScalarField.radial_field(lambda r: -1 - r * r, 3)
    assert np.allclose(truncate_min(neg)(X), neg(X))
    lin = ScalarField(func=lambda x: x[..., 0], n=3)
    assert np.allclose(truncate_min(lin)(X), np.minimum(X[:, 0], 0))


def test_truncate_min_records_zero_sphere():
    u = ScalarField.radial_field(lambda r: r * r - 0.36, 3)
    v = truncate_min(u)
    assert any(abs(k - 0.6) < 1e-8 for k in v.kinks)
