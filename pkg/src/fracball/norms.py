"""L^p, weighted-tail and W^{1,p} norms on balls."""
from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .domain import BallDomain, FracOrder, ScalarField, VectorField
from .quadrature import (QuadResult, QuadSpec, QuadratureError, integrate_ball,
                         integrate_exterior, integrate_interval, sphere_area)

__all__ = ["lp_norm", "tail_weighted_norm", "sobolev_w1p_norm", "drift_distance_norm",
           "power_field"]


def power_field(f: ScalarField, p: float) -> ScalarField:
    """|f|^p with the metadata the integrators look at."""
    prof = None if f.profile is None else (lambda r: np.abs(f.profile(r)) ** p)
    logp = None if f.log_profile is None else (lambda t: p * f.log_profile(t))
    return ScalarField(
        func=lambda x: np.abs(f.func(x)) ** p, n=f.n, radial=f.radial, profile=prof,
        support=f.support, support_radius=f.support_radius, decay=p * f.decay,
        log_profile=logp, kinks=f.kinks, name=f"|{f.name}|^{p:g}",
    )


def _root(res: QuadResult, p: float, what: str) -> QuadResult:
    I = max(res.value, 0.0)
    val = I ** (1.0 / p)
    if I > 0:
        err = val / (p * I) * res.err_estimate
    else:
        err = res.err_estimate ** (1.0 / p)
    out = QuadResult(val, err, res.evaluations, res.converged)
    return out.require(what)


def _integral_tolerance(f, dom, p, q, integrate):
    # translate an absolute/relative target on ||f||_p into one on int |f|^p
    coarse = integrate(power_field(f, p), dom, q.replace(tol=1e-6, rtol=1e-4))
    I = max(abs(coarse.value), 1e-300)
    norm = I ** (1.0 / p)
    target = max(q.tol, q.rtol * norm)
    return q.replace(tol=max(target * p * I / max(norm, 1e-300), 1e-15 * I), rtol=q.rtol * p * 0.5)


def lp_norm(f: ScalarField, dom: BallDomain, p: float, q: Optional[QuadSpec] = None) -> QuadResult:
    """(int_{B_r} |f|^p)^(1/p) with a propagated error estimate.

    Raises :class:`QuadratureError` carrying the partial result when the
    adaptive refinement does not reach the target.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    q = q or QuadSpec()
    if f.log_profile is not None and f.radial:
        q = q.replace(log_substitution=True)
    qi = _integral_tolerance(f, dom, p, q, integrate_ball)
    res = integrate_ball(power_field(f, p), dom, qi)
    return _root(res, p, f"L^{p:g} norm of {f.name}")


def tail_weighted_norm(f: ScalarField, s: FracOrder | float, q: Optional[QuadSpec] = None) -> QuadResult:
    """int_{R^n} |f(x)| / (1 + |x|^{n+2s}) dx."""
    s = s.s if isinstance(s, FracOrder) else float(s)
    q = q or QuadSpec()
    n = f.n
    if not f.decay > -2.0 * s:
        raise ValueError(f"{f.name}: decay {f.decay} does not give a finite weighted tail integral")
    w = n + 2.0 * s
    if f.radial:
        area = sphere_area(n)
        cuts = [0.0] + sorted(k for k in f.kinks if k > 0)
        if f.support == "ball":
            cuts = [c for c in cuts if c < f.support_radius] + [f.support_radius]
        else:
            cuts.append(math.inf)
        k = len(cuts) - 1
        parts = [integrate_interval(
            lambda t: area * np.abs(f.profile(t)) * t ** (n - 1) / (1.0 + t ** w),
            cuts[i], cuts[i + 1], q.replace(tol=q.tol / k)) for i in range(k)]
        val = sum(r.value for r in parts)
        err = sum(r.err_estimate for r in parts)
        res = QuadResult(val, err, sum(r.evaluations for r in parts),
                         all(r.converged for r in parts))
        return res.require(f"weighted tail norm of {f.name}")
    g = ScalarField(func=lambda x: np.abs(f.func(x)) / (1.0 + np.linalg.norm(x, axis=-1) ** w),
                    n=n, support=f.support, support_radius=f.support_radius,
                    decay=f.decay + w, name=f.name)
    unit = BallDomain(n, 1.0)
    a = integrate_ball(g, unit, q.replace(tol=q.tol / 2))
    b = integrate_exterior(g, unit, q.replace(tol=q.tol / 2))
    res = QuadResult(a.value + b.value, a.err_estimate + b.err_estimate,
                     a.evaluations + b.evaluations, a.converged and b.converged)
    return res.require(f"weighted tail norm of {f.name}")


def _fd_jacobian(b: VectorField, x: np.ndarray, h: float) -> np.ndarray:
    n = b.n
    J = np.empty(x.shape[:-1] + (n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[..., :, j] = (b(x + e) - b(x - e)) / (2.0 * h)
    return J


def sobolev_w1p_norm(b: VectorField, dom: BallDomain, p: float,
                     q: Optional[QuadSpec] = None) -> QuadResult:
    """(||b||_p^p + ||grad b||_p^p)^(1/p), Frobenius norm on the Jacobian.

    Without a closed-form Jacobian, central differences with step
    ``tol**(1/3) * r`` are used, and the result is rejected when halving the
    step moves the gradient integral by more than its own size times 1e-3.
    """
    q = q or QuadSpec()
    n = b.n
    mag = ScalarField(func=lambda x: np.linalg.norm(b(x), axis=-1), n=n, name=f"|{b.name}|")
    if b.jacobian is not None:
        jac = b.jacobian
    else:
        h = q.tol ** (1.0 / 3.0) * dom.r
        jac = lambda x: _fd_jacobian(b, x, h)
        jac2 = lambda x: _fd_jacobian(b, x, h / 2)
    gmag = ScalarField(func=lambda x: np.linalg.norm(jac(x), axis=(-2, -1)), n=n,
                       name=f"|D{b.name}|")
    if b.jacobian is None:
        # cheap step-dependence screen before the full-accuracy integrals
        gmag2 = ScalarField(func=lambda x: np.linalg.norm(jac2(x), axis=(-2, -1)), n=n)
        qc = q.replace(tol=max(q.tol, 1e-5), rtol=1e-5, max_subdiv=min(q.max_subdiv, 200))
        B1 = integrate_ball(power_field(gmag, p), dom, qc)
        B2 = integrate_ball(power_field(gmag2, p), dom, qc)
        if abs(B2.value - B1.value) > 1e-3 * max(abs(B1.value), 1e-12):
            raise QuadratureError(
                f"{b.name}: finite-difference gradient is step dependent (field not smooth?)",
                QuadResult(B1.value, abs(B2.value - B1.value), B1.evaluations + B2.evaluations,
                           False))
    A = integrate_ball(power_field(mag, p), dom, q)
    B = integrate_ball(power_field(gmag, p), dom, q)
    tot = QuadResult(A.value + B.value, A.err_estimate + B.err_estimate,
                     A.evaluations + B.evaluations, A.converged and B.converged)
    return _root(tot, p, f"W^1,{p:g} norm of {b.name}")


def drift_distance_norm(b: VectorField, dom: BallDomain, p: float,
                        q: Optional[QuadSpec] = None) -> QuadResult:
    """|| |b| / d ||_{L^p(B_r)} with d the distance to the boundary."""
    q = q or QuadSpec()

    def func(x):
        d = dom.r - np.linalg.norm(x, axis=-1)
        return np.linalg.norm(b(x), axis=-1) / np.where(d > 0, d, np.nan)

    f = ScalarField(func=func, n=b.n, name=f"|{b.name}|/d")
    res = integrate_ball(power_field(f, p), dom, q.replace(endpoint_sing=(0.0, 0.0)))
    return _root(res, p, f"L^{p:g} norm of {f.name}")
