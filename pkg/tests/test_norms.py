import math

import mpmath
import numpy as np
import pytest

from fracball.domain import BallDomain, FracOrder, ScalarField, VectorField, constant_field
from fracball.mplab import CounterexampleParams, counterexample_c
from fracball.norms import drift_distance_norm, lp_norm, sobolev_w1p_norm, tail_weighted_norm
from fracball.quadrature import QuadSpec, QuadratureError

UNIT3 = BallDomain(3, 1.0)


def test_lp_constant():
    r = lp_norm(constant_field(1.0, 3), UNIT3, 2.0)
    assert r.value == pytest.approx(math.sqrt(4 * math.pi / 3), abs=1e-10)
    assert r.value == pytest.approx(2.0466, abs=1e-4)


def test_lp_radial_linear():
    f = ScalarField.radial_field(lambda r: r, 3)
    assert lp_norm(f, UNIT3, 1.0).value == pytest.approx(math.pi, abs=1e-10)


def test_lp_non_radial_matches_closed_form():
    # int_B x1^2 = 4 pi / 15
    f = ScalarField(func=lambda x: x[..., 0], n=3)
    assert lp_norm(f, UNIT3, 2.0).value == pytest.approx(math.sqrt(4 * math.pi / 15), rel=1e-10)


def test_lp_counterexample_coefficient_decreases():
    q = QuadSpec(tol=1e-12, rtol=1e-9)
    a = lp_norm(counterexample_c(CounterexampleParams(3, 1.0, 0.1)), UNIT3, 1.5, q)
    b = lp_norm(counterexample_c(CounterexampleParams(3, 1.0, 0.01)), UNIT3, 1.5, q)
    assert b.err_estimate <= 1e-6 * b.value
    assert b.value < a.value


def test_lp_counterexample_against_mpmath():
    # with w = -ln(eps rho) the rho powers cancel:
    # ||c||_{3/2}^{3/2} = 4 pi int_{-ln eps}^inf ((a(a+1)/w + a)/w)^{3/2} dw   (n = 3)
    eps, a = 0.1, 1.0
    mpmath.mp.dps = 30
    w0 = -mpmath.log(eps)
    I = mpmath.quad(lambda w: ((a * (a + 1) / w + a) / w) ** 1.5, [w0, 10, 100, mpmath.inf])
    ref = float((4 * mpmath.pi * I) ** (mpmath.mpf(2) / 3))
    val = lp_norm(counterexample_c(CounterexampleParams(3, a, eps)), UNIT3, 1.5,
                  QuadSpec(tol=1e-12, rtol=1e-10)).value
    assert val == pytest.approx(ref, rel=1e-9)


def test_lp_divergent_integral_is_reported():
    f = ScalarField.radial_field(lambda r: r ** -1.5, 3)
    with pytest.raises(QuadratureError):
        lp_norm(f, UNIT3, 2.0, QuadSpec(tol=1e-8, max_subdiv=200))


def test_lp_rejects_small_p():
    with pytest.raises(ValueError):
        lp_norm(constant_field(1.0, 3), UNIT3, 0.5)


def test_tail_norm_examples():
    zero = ScalarField(func=lambda x: 0 * x[..., 0], n=3, radial=True, profile=lambda r: 0 * r)
    assert tail_weighted_norm(zero, 0.5).value == 0.0
    one = constant_field(1.0, 1)
    assert tail_weighted_norm(one, FracOrder(0.5)).value == pytest.approx(math.pi, abs=1e-9)
    ball = ScalarField.radial_field(lambda r: 1.0 + 0 * r, 3, support="ball", support_radius=1.0)
    ref = float(4 * mpmath.pi * mpmath.quad(lambda r: r ** 2 / (1 + r ** 4.5), [0, 1]))
    assert tail_weighted_norm(ball, 0.75).value == pytest.approx(ref, abs=1e-9)


def test_tail_norm_non_radial():
    f = ScalarField(func=lambda x: 1.0 + 0 * x[..., 0], n=3)
    ref = float(4 * mpmath.pi * mpmath.quad(lambda r: r ** 2 / (1 + r ** 4.5), [0, 1, mpmath.inf]))
    assert tail_weighted_norm(f, 0.75, QuadSpec(tol=1e-8)).value == pytest.approx(ref, rel=1e-7)


def test_tail_norm_rejects_growth():
    f = ScalarField.radial_field(lambda r: 1 + r * r, 3, decay=-2.0)
    with pytest.raises(ValueError):
        tail_weighted_norm(f, 0.75)


def test_w1p_examples():
    zero = VectorField(func=lambda x: 0 * x, n=3, jacobian=lambda x: np.zeros(x.shape + (3,)))
    assert sobolev_w1p_norm(zero, UNIT3, 2.0).value == 0.0
    lin = VectorField(func=lambda x: x, n=3,
                      jacobian=lambda x: np.broadcast_to(np.eye(3), x.shape + (3,)))
    expect = math.sqrt(4 * math.pi / 5 + 4 * math.pi)
    assert sobolev_w1p_norm(lin, UNIT3, 2.0).value == pytest.approx(expect, rel=1e-10)
    # same field through the finite-difference path
    lin_fd = VectorField(func=lambda x: x, n=3)
    assert sobolev_w1p_norm(lin_fd, UNIT3, 2.0, QuadSpec(tol=1e-8)).value == pytest.approx(expect, rel=1e-7)


def test_w1p_rejects_discontinuous_field():
    jump = VectorField(func=lambda x: np.stack([np.sign(x[..., 0]), 0 * x[..., 0], 0 * x[..., 0]], -1), n=3)
    with pytest.raises(QuadratureError):
        sobolev_w1p_norm(jump, UNIT3, 2.0, QuadSpec(tol=1e-6))


def test_drift_distance_norm():
    b = VectorField(func=lambda x: x * (1 - np.linalg.norm(x, axis=-1))[..., None], n=3)
    r = drift_distance_norm(b, UNIT3, 2.0, QuadSpec(tol=1e-9))
    assert r.value == pytest.approx(math.sqrt(4 * math.pi / 5), rel=1e-8)
