"""Pointwise (-Delta)^s, the classical Laplacian, mollification and truncation.

The principal value is never formed directly.  With
S(rho) = int_S (u(x) - u(x + rho w)) dw  (antipodally symmetrized),

    (-Delta)^s u(x) = C_op int_0^inf rho^{-1-2s} S(rho) d rho,

which is absolutely convergent since S(rho) = O(rho^2).  For radial fields
the spherical mean is a one-dimensional integral over the distance
sigma = |x + rho w| from the origin, so kinks of the profile land on fixed
breakpoints.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import optimize

from .domain import FracOrder, ScalarField, VectorField
from .kernels import kernel_constants
from .quadrature import (QuadResult, QuadSpec, QuadratureError, _gl01, axisym_rule,
                         integrate_interval, reference_rule, sphere_area, sphere_rule)

__all__ = [
    "PVSpec",
    "pv_fractional_laplacian",
    "spherical_mean",
    "classical_laplacian",
    "standard_bump",
    "bump_constant",
    "mollify",
    "truncate_min",
    "weak_truncation_gap",
    "WeakFormReport",
]


@dataclass(frozen=True)
class PVSpec:
    """Split radii for the principal-value integral.

    ``delta=None`` means 0.1 times the distance from x to the nearest
    non-smooth sphere of the field (or to the unit sphere when there is
    none); ``fd_step=None`` means 0.02 * delta.  Below ``fd_step`` the
    symmetrized difference is replaced by an even quartic Taylor model.
    """

    delta: Optional[float] = None
    far_cutoff: float = 10.0
    fd_step: Optional[float] = None

    def __post_init__(self):
        if self.delta is not None and not 0 < self.delta < self.far_cutoff:
            raise ValueError("need 0 < delta < far_cutoff")
        if self.fd_step is not None and not self.fd_step > 0:
            raise ValueError("fd_step must be positive")


def _s(s):
    return s.s if isinstance(s, FracOrder) else float(s)


def _singular_spheres(u: ScalarField) -> list[float]:
    ks = [float(k) for k in u.kinks if k > 0]
    if u.support == "ball" and math.isfinite(u.support_radius):
        ks.append(float(u.support_radius))
    return sorted(set(ks))


# ---------------------------------------------------------------------------
# spherical means of radial profiles
# ---------------------------------------------------------------------------

_KINK_BETA = 0.5


def spherical_mean(profile, a, rho, n: int, kinks=(), m: int = 20) -> np.ndarray:
    """int_{S^{n-1}} profile(|x + rho w|) dw for |x| = a; a and rho broadcast.

    The integral runs over sigma in [|a - rho|, a + rho] with weight
    sigma_{n-2} (1 - mu^2)^{(n-3)/2} sigma / (a rho); it is split at the
    kinks and every panel is graded toward both of its ends.
    """
    a, rho = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(rho, dtype=float))
    shape = a.shape
    a, rho = a.ravel(), rho.ravel()
    if n == 1:
        return (profile(np.abs(a + rho)) + profile(np.abs(a - rho))).reshape(shape)
    out = np.empty(a.shape)
    centre = (a == 0.0) | (rho == 0.0)
    if np.any(centre):
        out[centre] = sphere_area(n) * profile(a[centre] + rho[centre])
    sel = ~centre
    if np.any(sel):
        out[sel] = _mean_sigma_form(profile, a[sel], rho[sel], n, kinks, m)
    return out.reshape(shape)


def _mean_sigma_form(profile, a, rho, n, kinks, m):
    lo = np.abs(a - rho)
    hi = a + rho
    ks = np.asarray(sorted(kinks), dtype=float)
    # breakpoints per point, padded to a fixed count (empty panels weigh 0)
    if ks.size:
        B = np.concatenate([lo[:, None], np.clip(ks[None, :], lo[:, None], hi[:, None]),
                            hi[:, None]], axis=1)
        B.sort(axis=1)
    else:
        B = np.stack([lo, hi], axis=1)
    xi, om = reference_rule(m, _KINK_BETA, _KINK_BETA)
    W = (B[:, 1:] - B[:, :-1])[:, :, None]
    sig = B[:, :-1, None] + W * xi
    w = W * om
    vals = profile(sig.ravel()).reshape(sig.shape) * sig
    if n != 3:
        lo3, hi3 = lo[:, None, None], hi[:, None, None]
        # 1 - mu^2 in factored form
        num = (sig - lo3) * (sig + lo3) * (hi3 - sig) * (hi3 + sig)
        mu2c = np.maximum(num, 0.0) / (2.0 * a * rho)[:, None, None] ** 2
        vals = vals * mu2c ** ((n - 3) / 2.0)
    tot = np.sum(vals * w, axis=(1, 2))
    return sphere_area(n - 1) * tot / (a * rho)


# ---------------------------------------------------------------------------
# principal value
# ---------------------------------------------------------------------------

def _resolve_pv(u: ScalarField, x: np.ndarray, pv: Optional[PVSpec]):
    pv = pv or PVSpec()
    a = float(np.linalg.norm(x))
    spheres = _singular_spheres(u)
    dist = min([abs(k - a) for k in spheres], default=math.inf)
    if dist <= 1e-12 * max(1.0, a):
        raise ValueError(f"{u.name}: x lies on a non-smooth sphere |x| = {a}; "
                         "the operator needs u to be C^2 near x")
    delta = pv.delta
    if delta is None:
        delta = 0.1 * (dist if math.isfinite(dist) else 1.0)
        delta = min(delta, 0.5 * pv.far_cutoff)
    fd = pv.fd_step if pv.fd_step is not None else 0.02 * delta
    fd = min(fd, 0.5 * delta)
    return pv, a, spheres, delta, fd


def _radial_S(u: ScalarField, a: float, spheres, m: int):
    n = u.n
    prof = u.profile
    ua = float(prof(np.array([a]))[0])
    area = 2.0 if n == 1 else sphere_area(n)

    def S(rho):
        return area * ua - spherical_mean(prof, a, rho, n, spheres, m)

    return S, ua, area


def _generic_S(u: ScalarField, x: np.ndarray, q: QuadSpec):
    n = u.n
    if n == 1:
        dirs, w = np.array([[1.0]]), np.array([2.0])
    else:
        dirs, w = sphere_rule(n, q.sphere_order, seed=q.mc_seed)
    ux = float(u(x[None, :])[0])
    area = float(np.sum(w))

    def S(rho):
        rho = np.atleast_1d(rho)
        plus = u(x + rho[:, None, None] * dirs[None])
        minus = u(x - rho[:, None, None] * dirs[None])
        return (ux - 0.5 * (plus + minus)) @ w

    return S, ux, area


def pv_fractional_laplacian(u: ScalarField, x, s, pv: Optional[PVSpec] = None,
                            q: Optional[QuadSpec] = None, *, consts=None,
                            full_output: bool = False):
    """(-Delta)^s u(x) by the symmetrized-difference integral.

    Radial fields use the one-dimensional spherical mean; all others use an
    antipodal sphere rule.  Pieces: an even Taylor model on
    [0, fd_step], adaptive quadrature up to ``far_cutoff`` with breakpoints
    where the sphere of radius rho around x touches a non-smooth sphere of
    the field, and an exact or mapped tail.
    """
    s = _s(s)
    q = q or QuadSpec(tol=1e-7)
    x = np.asarray(x, dtype=float).reshape(-1)
    n = u.n
    if x.size != n:
        raise ValueError("dimension mismatch")
    if not u.decay > -2.0 * s:
        raise ValueError(f"{u.name}: growth |x|^{-u.decay} is outside the weighted class L_2s")
    k = consts or kernel_constants(n, s)
    pv, a, spheres, delta, fd = _resolve_pv(u, x, pv)
    if u.radial:
        S, ux, area = _radial_S(u, a, spheres, q.inner_order)
    else:
        S, ux, area = _generic_S(u, x, q)
        spheres = _singular_spheres(u) if u.support == "ball" else []

    def g(rho):
        return rho ** (-1.0 - 2.0 * s) * S(rho)

    # Taylor model on [0, fd]: S(rho) ~ A rho^2 + B rho^4 through fd/2 and fd
    S1, S2 = S(np.array([0.5 * fd, fd]))
    B4 = (S2 - 4.0 * S1) / (fd ** 4 * (1.0 - 0.25))
    A2 = (S2 - B4 * fd ** 4) / fd ** 2
    near = A2 * fd ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s) + B4 * fd ** (4.0 - 2.0 * s) / (4.0 - 2.0 * s)

    ball = u.support == "ball" and math.isfinite(u.support_radius)
    R = pv.far_cutoff
    if spheres:
        R = max(R, a + max(spheres) + delta)
    if ball:
        R = min(R, a + u.support_radius)
    cuts = {fd, delta, R}
    for r_k in spheres:
        cuts.update((abs(r_k - a), r_k + a))
    cuts = sorted(c for c in cuts if fd <= c <= R)
    pieces = len(cuts) - 1
    tail_exact = area * ux * R ** (-2.0 * s) / (2.0 * s)
    b0 = 0.0
    if not ball:
        b0 = max(0.0, -u.decay / (2.0 * s)) if math.isfinite(u.decay) else 0.0
        if b0 >= 1.0:
            raise ValueError("tail not integrable")

    def mapped(tau):
        rho = R * tau ** (-1.0 / (2.0 * s))
        return area * ux - S(rho)

    def run(qi):
        out = []
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi - lo <= 1e-15 * hi:
                continue
            sing = (-_KINK_BETA if lo != fd and lo != delta else 0.0,
                    -_KINK_BETA if hi != delta and hi != R else 0.0)
            out.append(integrate_interval(g, lo, hi, qi.replace(
                endpoint_sing=sing if any(sing) else None)))
        # tail beyond R
        if ball:
            out.append(QuadResult(tail_exact, 0.0, 0, True))
        else:
            inner = integrate_interval(mapped, 0.0, 1.0, qi.replace(
                endpoint_sing=(b0, 0.0) if b0 > 0 else None))
            fac = R ** (-2.0 * s) / (2.0 * s)
            out.append(QuadResult(tail_exact - fac * inner.value, fac * inner.err_estimate,
                                  inner.evaluations, inner.converged))
        return out

    share = max(1, pieces + 1)
    tol = q.tol
    if q.rtol > 0:
        # a relative target refers to the cancellation scale of the whole
        # value (sum of piece magnitudes), not to each piece
        coarse = run(q.replace(tol=max(q.tol, 1e-6), rtol=1e-4, endpoint_sing=None))
        tol = max(q.tol, q.rtol * (abs(near) + sum(abs(r.value) for r in coarse)))
    results = run(q.replace(tol=tol / share, rtol=0.0, endpoint_sing=None))
    total = near + sum(r.value for r in results)
    err = sum(r.err_estimate for r in results)
    nev = sum(r.evaluations for r in results)
    ok = all(r.converged for r in results)
    res = QuadResult(k.C_op * total, k.C_op * err, nev, ok)
    if not ok:
        raise QuadratureError(f"(-Delta)^s {u.name} at |x|={a:.6g}", res)
    if full_output:
        return res
    return res.value


# ---------------------------------------------------------------------------
# classical Laplacian
# ---------------------------------------------------------------------------

def classical_laplacian(u: ScalarField, x, *, method: str = "auto",
                        fd_step: Optional[float] = None, order: int = 2):
    """Delta u(x): closed form when attached, else central differences.

    ``order`` 2 uses the 3-point stencil, 4 the 5-point stencil, per axis.
    The default step is 1e-4 (order 2) or 1e-3 (order 4) times max(|x|, 1e-2).
    """
    x = np.asarray(x, dtype=float)
    if method not in ("auto", "closed", "fd"):
        raise ValueError(f"unknown method {method!r}")
    if method != "fd" and u.laplacian is not None:
        return u.laplacian(x)
    if method == "closed":
        raise ValueError(f"{u.name} has no closed-form Laplacian")
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    scale = np.maximum(np.linalg.norm(x, axis=-1), 1e-2)
    h = fd_step if fd_step is not None else (1e-4 if order == 2 else 1e-3) * scale
    h = np.asarray(h, dtype=float)[..., None]
    u0 = u(x)
    out = np.zeros(np.shape(u0))
    for i in range(u.n):
        e = np.zeros(u.n)
        e[i] = 1.0
        if order == 2:
            out = out + (u(x + h * e) - 2.0 * u0 + u(x - h * e)) / h[..., 0] ** 2
        else:
            out = out + (-u(x + 2 * h * e) + 16.0 * u(x + h * e) - 30.0 * u0
                         + 16.0 * u(x - h * e) - u(x - 2 * h * e)) / (12.0 * h[..., 0] ** 2)
    return out


# ---------------------------------------------------------------------------
# mollification
# ---------------------------------------------------------------------------

def _bump_raw(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        v = np.exp(-1.0 / np.where(inside, 1.0 - t * t, 1.0))
    return np.where(inside, v, 0.0)


@lru_cache(maxsize=None)
def bump_constant(n: int) -> float:
    """C with int_{B_1} C exp(-1/(1-|x|^2)) dx = 1."""
    res = integrate_interval(lambda t: sphere_area(n) * t ** (n - 1) * _bump_raw(t), 0.0, 1.0,
                             QuadSpec(tol=1e-15, rtol=1e-14))
    return 1.0 / res.require("bump mass").value


def standard_bump(n: int, eps: float = 1.0, center=None, height: Optional[float] = None) -> ScalarField:
    """eta_eps(x) = eps^-n eta(x / eps), smooth, supported in B_eps, unit mass.

    ``height`` replaces the normalization with a fixed peak value (for test
    functions rather than mollifiers).
    """
    C = bump_constant(n) * eps ** (-n) if height is None else height * math.e
    if center is None:
        prof = lambda r: C * _bump_raw(np.asarray(r) / eps)
        return ScalarField.radial_field(prof, n, support="ball", support_radius=eps,
                                        decay=math.inf, name=f"eta_{eps:g}")
    c = np.asarray(center, dtype=float)
    return ScalarField(func=lambda x: C * _bump_raw(np.linalg.norm(x - c, axis=-1) / eps),
                       n=n, support="ball", support_radius=float(np.linalg.norm(c)) + eps,
                       decay=math.inf, name=f"eta_{eps:g}@{tuple(np.round(c, 3))}",
                       meta={"center": c, "radius": eps, "scale": C})


def mollify(u: ScalarField, eps: float, q: Optional[QuadSpec] = None) -> ScalarField:
    """eta_eps * u as a new field.

    Radial fields: w(a) = int_0^eps rho^{n-1} eta_eps(rho) M_u(a, rho) d rho
    with M_u the spherical mean, on a fixed Gauss rule (eta is flat at eps).
    Other fields use a tensor sphere x radius rule.  When ``u`` is only
    defined on B_R, the result is defined on B_{R-eps}.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    q = q or QuadSpec()
    n = u.n
    dom = None
    if u.domain_radius is not None:
        dom = u.domain_radius - eps
        if dom <= 0:
            raise ValueError("eps exceeds the domain radius")
    xi, om = _gl01(max(q.order, 24))
    rho = eps * xi
    eta = bump_constant(n) * eps ** (-n) * _bump_raw(xi)
    radw = om * eps * rho ** (n - 1) * eta
    # normalize the discrete mass so constants are reproduced exactly
    radw = radw / (sphere_area(n) * radw.sum()) if n > 1 else radw / (2.0 * radw.sum())

    def _check(x):
        if dom is not None and np.any(np.linalg.norm(x, axis=-1) > dom * (1 + 1e-12)):
            raise ValueError(f"mollified field evaluated within {eps} of the domain boundary")

    if u.radial:
        spheres = _singular_spheres(u)
        prof = u.profile

        def wprof(a):
            a = np.asarray(a, dtype=float)
            M = spherical_mean(prof, a[..., None], rho, n, spheres, q.inner_order)
            return M @ radw

        def func(x):
            _check(x)
            return wprof(np.linalg.norm(x, axis=-1))

        sup = "ball" if u.support == "ball" else u.support
        return ScalarField(func=func, n=n, radial=True, profile=wprof, support=sup,
                           support_radius=u.support_radius + eps if sup == "ball" else math.inf,
                           decay=u.decay, domain_radius=dom, name=f"{u.name}*eta_{eps:g}")
    dirs, w = sphere_rule(n, q.sphere_order, seed=q.mc_seed)

    def func(x):
        x = np.asarray(x, dtype=float)
        _check(x)
        pts = x[..., None, None, :] - rho[:, None, None] * dirs[None, :, :]
        vals = u(pts)
        return (vals @ w) @ radw

    return ScalarField(func=func, n=n, support=u.support,
                       support_radius=u.support_radius + eps if u.support == "ball" else math.inf,
                       decay=u.decay, domain_radius=dom, name=f"{u.name}*eta_{eps:g}")


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------

def _sign_changes(profile, R: float, samples: int = 4001) -> list[float]:
    t = np.linspace(0.0, R, samples)
    v = profile(t)
    roots = []
    for i in np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0):
        roots.append(optimize.brentq(lambda r: float(profile(np.array([r]))[0]), t[i], t[i + 1],
                                     xtol=1e-15, rtol=4 * np.finfo(float).eps))
    roots += [float(t[i]) for i in np.flatnonzero(v == 0) if 0 < i < samples - 1]
    return sorted(roots)


def truncate_min(u: ScalarField) -> ScalarField:
    """v = min(u, 0).

    For radial fields the sign changes of the profile (searched up to the
    support radius, the domain radius or 10) become kinks of v.
    """
    op = lambda val: np.minimum(val, 0.0)
    prof = None if u.profile is None else (lambda r: op(u.profile(r)))
    kinks = tuple(u.kinks)
    if u.radial:
        R = min(u.support_radius, u.domain_radius or math.inf, 10.0)
        kinks = tuple(sorted(set(kinks) | set(_sign_changes(u.profile, R))))
    grad = None
    if u.gradient is not None:
        grad = lambda x: np.where((u(x) < 0)[..., None], u.gradient(x), 0.0)
    return ScalarField(func=lambda x: op(u(x)), n=u.n, radial=u.radial, profile=prof,
                       support=u.support, support_radius=u.support_radius, decay=u.decay,
                       gradient=grad, kinks=kinks, domain_radius=u.domain_radius,
                       name=f"min({u.name},0)")


# ---------------------------------------------------------------------------
# weak form of the truncation inequality
# ---------------------------------------------------------------------------

@dataclass
class WeakFormReport:
    lhs: float
    rhs: float
    gap: float
    err_budget: float
    terms: dict

    @property
    def holds(self) -> bool:
        return self.gap >= -self.err_budget


def _centred_ball_integral(f, c: np.ndarray, radius: float, q: QuadSpec, order: int):
    """int_{B_radius(c)} f(x) dx in polar coordinates about c (n = 3 or 2)."""
    n = c.size
    axis = c if np.linalg.norm(c) > 0 else None
    dirs, w = sphere_rule(n, order, axis=axis, seed=q.mc_seed)

    def g(t):
        pts = c + t[:, None, None] * dirs[None]
        return (f(pts) @ w) * t ** (n - 1)

    return integrate_interval(g, 0.0, radius, q)


def weak_truncation_gap(u: ScalarField, b: VectorField, c: ScalarField, phis, s,
                        frac_u, q: Optional[QuadSpec] = None,
                        pv_q: Optional[QuadSpec] = None) -> list[WeakFormReport]:
    """Both sides of the weak truncation inequality for each test function.

    lhs = int v ((-Delta)^s phi - div(b phi) + c phi),  v = min(u, 0)
    rhs = int_{u<0} ((-Delta)^s u + b.grad u + c u) phi

    ``u`` must be radial and ``phis`` translated radial bumps (from
    :func:`standard_bump` with a centre); ``frac_u`` evaluates
    (-Delta)^s u pointwise.  The first lhs term uses
    int v (-Delta)^s phi = int_0^inf t^{n-1} (-Delta)^s phi(t) M_v(|c|, t) dt.
    The error budget adds the adaptive estimates, the worst relative error
    of the pointwise (-Delta)^s phi values times int |integrand|, and the
    change of every three-dimensional integral between two angular orders.
    """
    s = _s(s)
    q = q or QuadSpec(tol=1e-8)
    pv_q = pv_q or QuadSpec(tol=1e-8, rtol=1e-7)
    if not u.radial:
        raise ValueError("weak_truncation_gap needs a radial u")
    v = truncate_min(u)
    n = u.n
    reports = []
    memos = {}
    for phi in phis:
        cen = np.asarray(phi.meta["center"], dtype=float)
        rad = float(phi.meta["radius"])
        height = float(phi.meta["scale"])
        base = standard_bump(n, rad, height=height / math.e)
        dist = float(np.linalg.norm(cen))
        # translated bumps of one size share (-Delta)^s of the centred bump
        memo = memos.setdefault((rad, height), {})

        def Pphi(t):
            out = np.empty(t.shape)
            for i, ti in enumerate(t):
                key = float(ti)
                if key not in memo:
                    xv = np.zeros(n)
                    xv[0] = key
                    if abs(key - rad) < 1e-12:
                        xv[0] = key * (1 + 1e-10)
                    r = pv_fractional_laplacian(base, xv, s, q=pv_q, full_output=True)
                    memo[key] = (r.value, r.err_estimate)
                out[i] = memo[key][0]
            return out

        def t1(t):
            t = np.atleast_1d(t)
            return t ** (n - 1) * Pphi(t) * spherical_mean(v.profile, dist, t, n, v.kinks, 24)

        cuts = sorted({rad} | {abs(k - dist) for k in v.kinks} | {k + dist for k in v.kinks})
        cuts = [0.0] + [x for x in cuts if x > 0] + [math.inf]
        parts = [integrate_interval(t1, lo, hi, q) for lo, hi in zip(cuts[:-1], cuts[1:])]
        T1 = sum(p.value for p in parts)
        E1 = sum(p.err_estimate for p in parts)
        # the pointwise PV errors enter through int |integrand| (nodes are memoized)
        rel = max(e / max(abs(val), 1e-300) for val, e in memo.values())
        mass = sum(integrate_interval(lambda t: np.abs(t1(t)), lo, hi, q.replace(tol=1e-6)).value
                   for lo, hi in zip(cuts[:-1], cuts[1:]))
        E1 += rel * mass

        def grad_phi(x):
            d = x - cen
            r = np.linalg.norm(d, axis=-1) / rad
            inside = r < 1
            rr = np.where(inside, r, 0.0)
            # d/dx exp(-1/(1-r^2)) = -2 r / (1-r^2)^2 * exp(..) * d/(|d| rad)
            fac = np.where(inside, -2.0 / (1 - rr ** 2) ** 2 * _bump_raw(rr) / rad ** 2, 0.0)
            return height * fac[..., None] * d

        def div_b(x):
            if b.divergence is not None:
                return b.divergence(x)
            return np.trace(b.jacobian(x), axis1=-2, axis2=-1)

        vv = lambda x: v(x)
        neg = lambda x: (u(x) < 0).astype(float)
        integrands = {
            "drift_lhs": lambda x: -vv(x) * (phi(x) * div_b(x) + np.sum(b(x) * grad_phi(x), -1)),
            "zero_lhs": lambda x: vv(x) * c(x) * phi(x),
            "frac_rhs": lambda x: neg(x) * frac_u(x) * phi(x),
            "drift_rhs": lambda x: neg(x) * np.sum(b(x) * u.gradient(x), -1) * phi(x),
            "zero_rhs": lambda x: neg(x) * c(x) * u(x) * phi(x),
        }
        terms = {"frac_lhs": T1}
        budget = E1
        for name, f in integrands.items():
            r1 = _centred_ball_integral(f, cen, rad, q, q.sphere_order)
            r2 = _centred_ball_integral(f, cen, rad, q, 2 * q.sphere_order)
            terms[name] = r2.value
            budget += r1.err_estimate + r2.err_estimate + abs(r2.value - r1.value)
        lhs = terms["frac_lhs"] + terms["drift_lhs"] + terms["zero_lhs"]
        rhs = terms["frac_rhs"] + terms["drift_rhs"] + terms["zero_rhs"]
        reports.append(WeakFormReport(lhs, rhs, lhs - rhs, budget, terms))
    return reports
