"""Representation-formula solvers on a ball.

Solutions are returned as lazy fields: every evaluation runs the quadrature
for the requested points and radial solutions memoize values per radius.
Inner rules are fixed (not adaptive) so that the computed solution depends
smoothly on the evaluation point; difference quotients of it, as taken by
the principal-value operator, then stay meaningful.
"""
from __future__ import annotations

import math
import threading
from typing import Callable, Optional

import numpy as np
from scipy import special

from .domain import BallDomain, ScalarField
from .kernels import incomplete_integral, kernel_constants
from .quadrature import (QuadResult, QuadSpec, QuadratureError, axisym_rule, integrate_exterior,
                         integrate_interval, reference_rule, sphere_area, sphere_rule)

__all__ = [
    "solve_dirichlet_fractional",
    "solve_forced_fractional",
    "solve_dirichlet_classical",
    "solve_radial_poisson",
    "tabulated",
    "torsion_constant",
]


class _RadialMemo:
    """Thread-safe per-radius cache in front of a vectorized profile."""

    def __init__(self, compute: Callable[[np.ndarray], np.ndarray]):
        self._compute = compute
        self._cache: dict[float, float] = {}
        self._lock = threading.Lock()

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        flat = rho.ravel()
        with self._lock:
            known = {k: self._cache[k] for k in set(flat.tolist()) if k in self._cache}
        todo = np.array(sorted(set(flat.tolist()) - known.keys()))
        if todo.size:
            vals = self._compute(todo)
            new = dict(zip(todo.tolist(), np.asarray(vals, dtype=float).tolist()))
            with self._lock:
                self._cache.update(new)
            known.update(new)
        out = np.fromiter((known[v] for v in flat.tolist()), dtype=float, count=flat.size)
        return out.reshape(rho.shape)

    def __len__(self):
        return len(self._cache)


def _composite(breaks, m, beta0=0.0, beta1=0.0, levels0=0, levels1=0):
    """Gauss rule on consecutive panels; the grading hints apply to the outer ends."""
    nodes, weights = [], []
    k = len(breaks) - 1
    for i in range(k):
        a, b = breaks[i], breaks[i + 1]
        xi, om = reference_rule(m, beta0 if i == 0 else 0.5, beta1 if i == k - 1 else 0.5,
                                levels0 if i == 0 else 0, levels1 if i == k - 1 else 0)
        nodes.append(a + (b - a) * xi)
        weights.append((b - a) * om)
    return np.concatenate(nodes), np.concatenate(weights)


def _radius(x):
    return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)


# ---------------------------------------------------------------------------
# fractional Dirichlet problem
# ---------------------------------------------------------------------------

def solve_dirichlet_fractional(g: ScalarField, r: float, n: int, s: float,
                               q: Optional[QuadSpec] = None) -> ScalarField:
    """u = int_{B_r^c} P_r(x, y) g(y) dy inside the ball and u = g outside.

    Radial data reduce, through the sphere identity
    int_S |x - rho w|^{-n} dw = sigma_{n-1} rho^{2-n} / (rho^2 - |x|^2), to

      u(a) = sigma c_P (r^2-a^2)^s r^{2-2s}
             int_0^1 g(r/t) t^{2s-1} (1-t^2)^{-s} / (r^2 - a^2 t^2) dt.
    """
    if not g.decay > -2.0 * s:
        raise ValueError(f"{g.name}: exterior data must lie in the weighted class L_2s")
    q = q or QuadSpec()
    k = kernel_constants(n, s)
    area = sphere_area(n)
    outer = g.kinks
    if g.radial:
        kd = g.decay if math.isfinite(g.decay) else 1.0
        # t^{2s-1} g(r/t) ~ t^{-b0} at t -> 0; negative b0 still grades a non-smooth end
        b0 = 1.0 - 2.0 * s - kd
        if b0 >= 1.0:
            raise ValueError("exterior data decay too slowly")
        # nodes in tau = 1 - t so the (1 - t^2)^-s layer is resolved exactly
        cuts = [0.0] + sorted(1.0 - r / kk for kk in outer if kk > r) + [1.0]
        tau, w = _composite(cuts, q.inner_order, s, b0, 8, 0)
        t = 1.0 - tau
        gt = g.profile(r / t)
        base = w * gt * t ** (2.0 * s - 1.0) * (tau * (2.0 - tau)) ** (-s)

        def inside(a):
            a = np.asarray(a, dtype=float)[:, None]
            denom = (r * r - a * a) + a * a * tau * (2.0 - tau)
            return area * k.c_P * (r * r - a[:, 0] ** 2) ** s * r ** (2.0 - 2.0 * s) \
                * (base / denom).sum(1)

        memo = _RadialMemo(inside)

        def prof(rho):
            rho = np.asarray(rho, dtype=float)
            out = np.empty(rho.shape)
            m_in = rho < r
            out[m_in] = memo(rho[m_in])
            out[~m_in] = g.profile(rho[~m_in])
            return out

        return ScalarField.radial_field(
            prof, n, decay=g.decay, kinks=tuple(sorted(set(outer) | {r})),
            name=f"dirichlet[{g.name}]", meta={"kind": "dirichlet", "r": r, "s": s, "memo": memo})

    dom = BallDomain(n, r)
    qx = q.replace(endpoint_sing=(0.0, s), tol=max(q.tol, 1e-9))
    cache: dict[tuple, float] = {}
    lock = threading.Lock()

    def one(x):
        key = tuple(np.round(x, 15))
        with lock:
            if key in cache:
                return cache[key]
        ax = x @ x

        def f(y):
            ay = np.sum(y * y, axis=-1)
            P = k.c_P * ((r * r - ax) / (ay - r * r)) ** s * np.linalg.norm(x - y, axis=-1) ** (-float(n))
            return P * g(y)

        fld = ScalarField(func=f, n=n, decay=g.decay + n + 2 * s, kinks=outer, name="P*g")
        res = integrate_exterior(fld, dom, qx, axis=x if ax > 0 else None)
        res.require(f"Dirichlet solve at {x}")
        with lock:
            cache[key] = res.value
        return res.value

    def func(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, n)
        rr = _radius(flat)
        out = np.empty(flat.shape[0])
        m_in = rr < r
        if np.any(~m_in):
            out[~m_in] = g(flat[~m_in])
        for i in np.flatnonzero(m_in):
            out[i] = one(flat[i])
        return out.reshape(x.shape[:-1])

    return ScalarField(func=func, n=n, decay=g.decay, name=f"dirichlet[{g.name}]",
                       meta={"kind": "dirichlet", "r": r, "s": s})


# ---------------------------------------------------------------------------
# fractional forced problem
# ---------------------------------------------------------------------------

def torsion_constant(n: int, s: float, r: float = 1.0) -> float:
    """gamma with (-Delta)^s [gamma (r^2-|x|^2)_+^s] = 1 in B_r."""
    return math.gamma(n / 2) / (4 ** s * math.gamma(1 + s) * math.gamma(n / 2 + s))


def _forced_values(hfun, X: np.ndarray, r: float, n: int, s: float, dirs_fn, m: int):
    """u(x) = int_{B_r} h(y) G(x, y) dy in polar coordinates around each x.

    On every ray the distance rho runs over [0, rho_max]; the Gauss-Jacobi
    weight (rho_max - rho)^s rho^{2s-1} absorbs the boundary layer of G and
    the |x - y|^{2s-n} singularity (the latter times rho^{n-1}).
    """
    k = kernel_constants(n, s)
    xj, wj = special.roots_jacobi(m, s, 2.0 * s - 1.0)
    a_all = _radius(X)
    out = np.empty(X.shape[0])
    B = special.beta(s, n / 2.0 - s)
    for i, x in enumerate(X):
        a = a_all[i]
        dirs, wd = dirs_fn(x)
        mu = dirs @ (x / a) if a > 0 else np.zeros(dirs.shape[0])
        c0 = r * r - a * a
        root = np.sqrt(a * a * mu * mu + c0)
        # both forms of the positive root, each free of cancellation on its side
        rmax = np.where(mu > 0, c0 / (a * mu + root), root - a * mu)
        half = 0.5 * rmax[:, None]
        rho = half * (1.0 + xj[None, :])
        gap = half * (1.0 - xj[None, :])                      # rho_max - rho
        other = rho + rmax[:, None] + 2.0 * a * mu[:, None]   # rho - (other root)
        ry = gap * other                                      # r^2 - |y|^2
        R0 = c0 * ry / (r * r * rho * rho)
        I = B * special.betainc(s, n / 2.0 - s, R0 / (1.0 + R0))
        y = x[None, None, :] + rho[..., None] * dirs[:, None, :]
        hv = hfun(y)
        vals = k.kappa * hv * I / gap ** s
        jac = half[:, 0] ** (3.0 * s)
        out[i] = wd @ (jac * (vals @ wj))
    return out


def solve_forced_fractional(h: ScalarField, r: float, n: int, s: float,
                            q: Optional[QuadSpec] = None) -> ScalarField:
    """u = int_{B_r} h(y) G(x, y) dy inside the ball, 0 outside.

    Radial forcing uses an axisymmetric angular rule, other forcing a full
    sphere rule with its pole along x.  ``q.sphere_order`` and
    ``q.inner_order`` set the angular and radial orders.
    """
    if n <= 2 * s:
        raise ValueError("the Green function needs n > 2s")
    q = q or QuadSpec()
    m = q.inner_order
    if h.radial:
        mu, wmu = axisym_rule(n, q.sphere_order)
        e1 = np.zeros(n)
        e1[0] = 1.0
        if n == 1:
            dirs1 = np.array([[1.0], [-1.0]])
        else:
            sin_t = np.sqrt(np.maximum(1.0 - mu * mu, 0.0))
            dirs1 = np.zeros((mu.size, n))
            dirs1[:, 0] = mu
            dirs1[:, 1] = sin_t
        hp = h.profile

        def hfun(y):
            return hp(np.linalg.norm(y, axis=-1))

        def compute(a):
            X = np.zeros((a.size, n))
            X[:, 0] = a
            return _forced_values(hfun, X, r, n, s, lambda x: (dirs1, wmu), m)

        memo = _RadialMemo(compute)

        def prof(rho):
            rho = np.asarray(rho, dtype=float)
            out = np.zeros(rho.shape)
            m_in = rho < r
            out[m_in] = memo(rho[m_in])
            return out

        return ScalarField.radial_field(
            prof, n, support="ball", support_radius=r, decay=math.inf, kinks=(r,),
            name=f"forced[{h.name}]", meta={"kind": "forced", "r": r, "s": s, "memo": memo,
                                             "source": h, "q": q})

    cache: dict[tuple, float] = {}
    lock = threading.Lock()

    def dirs_fn(x):
        return sphere_rule(n, q.sphere_order, axis=x if np.linalg.norm(x) > 0 else None,
                           seed=q.mc_seed)

    def func(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, n)
        out = np.zeros(flat.shape[0])
        m_in = _radius(flat) < r
        todo = []
        for i in np.flatnonzero(m_in):
            key = tuple(flat[i].tolist())
            with lock:
                v = cache.get(key)
            if v is None:
                todo.append(i)
            else:
                out[i] = v
        if todo:
            vals = _forced_values(h, flat[todo], r, n, s, dirs_fn, m)
            out[todo] = vals
            with lock:
                for i, v in zip(todo, vals):
                    cache[tuple(flat[i].tolist())] = float(v)
        return out.reshape(x.shape[:-1])

    return ScalarField(func=func, n=n, support="ball", support_radius=r, decay=math.inf,
                       name=f"forced[{h.name}]", meta={"kind": "forced", "r": r, "s": s})


def tabulated(u: ScalarField, degree: int = 24, check: int = 15) -> ScalarField:
    """Chebyshev surrogate of a radial forced solution.

    Fits u(a) / (r^2 - a^2)^s as a polynomial in a^2 on [0, r^2]; the
    quotient is smooth for smooth forcing.  The largest deviation from the
    direct solver on ``check`` extra radii is kept in ``meta['table_error']``.
    """
    if u.meta.get("kind") != "forced" or not u.radial:
        raise ValueError("tabulated() expects a radial forced solution")
    r, s = u.meta["r"], u.meta["s"]
    memo = u.meta["memo"]
    z = np.polynomial.chebyshev.chebpts1(degree + 1)
    t = 0.5 * (z + 1.0) * r * r
    a = np.sqrt(t)
    vq = memo(a) / (r * r - t) ** s
    cheb = np.polynomial.Chebyshev.fit(t, vq, degree, domain=[0.0, r * r])
    ac = np.linspace(0.0, 0.999 * r, check)
    direct = memo(ac)
    approx = cheb(ac * ac) * (r * r - ac * ac) ** s
    err = float(np.max(np.abs(direct - approx)))

    def prof(rho):
        rho = np.asarray(rho, dtype=float)
        inside = rho < r
        rr = np.where(inside, rho, 0.0)
        return np.where(inside, cheb(rr * rr) * np.maximum(r * r - rr * rr, 0.0) ** s, 0.0)

    meta = dict(u.meta, table_error=err, chebyshev=cheb)
    return ScalarField.radial_field(prof, u.n, support="ball", support_radius=r,
                                    decay=math.inf, kinks=(r,), name=f"table[{u.name}]",
                                    meta=meta)


# ---------------------------------------------------------------------------
# classical problems
# ---------------------------------------------------------------------------

def solve_dirichlet_classical(g, r: float, n: int, q: Optional[QuadSpec] = None) -> ScalarField:
    """Harmonic extension of boundary data ``g`` (a callable on points of the sphere).

    u(x) = (r^2 - |x|^2) r^{n-2} / sigma_{n-1} int_S g(r w) |x - r w|^{-n} dw,
    with the angle to x integrated adaptively for n = 2, 3.
    """
    q = q or QuadSpec(tol=1e-10)
    area = sphere_area(n)

    def one(x):
        a = float(np.linalg.norm(x))
        pref = (r * r - a * a) * r ** (n - 2) / area
        if n == 1:
            ys = np.array([[r], [-r]])
            return pref * float(np.sum(g(ys) * np.abs(x - ys[:, 0]) ** -1.0))
        R = np.eye(n)
        if a > 0:
            from .quadrature import rotation_to
            R = rotation_to(x)
        if n == 2:
            # angle phi measured from x
            def f(phi):
                w = np.stack([np.cos(phi), np.sin(phi)], -1) @ R[:, [1, 0]].T
                y = r * w
                return g(y) * np.linalg.norm(x - y, axis=-1) ** -2.0
            res = integrate_interval(f, 0.0, 2 * np.pi, q)
        elif n == 3:
            M = 2 * q.sphere_order
            ph = 2 * np.pi * np.arange(M) / M

            def f(th):
                st, ct = np.sin(th)[:, None], np.cos(th)[:, None]
                w = np.stack([st * np.cos(ph), st * np.sin(ph), np.broadcast_to(ct, st.shape[:1] + ph.shape)], -1)
                y = r * (w @ R.T)
                vals = g(y) * np.linalg.norm(x - y, axis=-1) ** -3.0
                return vals.mean(-1) * 2 * np.pi * np.sin(th)
            res = integrate_interval(f, 0.0, np.pi, q)
        else:
            dirs, w = sphere_rule(n, q.sphere_order, axis=x if a > 0 else None, seed=q.mc_seed)
            y = r * dirs
            val = float((g(y) * np.linalg.norm(x - y, axis=-1) ** (-float(n))) @ w)
            return pref * val
        return pref * res.require(f"harmonic extension at {x}").value

    def func(x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, n)
        rr = _radius(flat)
        if np.any(rr > r * (1 + 1e-12)):
            raise ValueError("harmonic extension evaluated outside the ball")
        out = np.empty(flat.shape[0])
        for i, p in enumerate(flat):
            out[i] = float(g(p[None, :])[0]) if rr[i] >= r else one(p)
        return out.reshape(x.shape[:-1])

    return ScalarField(func=func, n=n, domain_radius=r, name="harmonic extension",
                       meta={"kind": "classical-dirichlet", "r": r})


def _radial_K(n, r):
    if n == 1:
        return lambda m: r - m
    if n == 2:
        return lambda m: np.log(r / m)
    return lambda m: (m ** (2.0 - n) - r ** (2.0 - n)) / (n - 2.0)


def solve_radial_poisson(c_plus: ScalarField, r: float, n: int,
                         q: Optional[QuadSpec] = None) -> ScalarField:
    """f with -Delta f = c_plus in B_r, f = 0 on the sphere (radial data).

    f(rho) = int_rho^r t^{1-n} int_0^t sigma^{n-1} c(sigma) d sigma dt
           = int_0^r c(sigma) sigma^{n-1} K(max(rho, sigma)) d sigma,
    K(m) = int_m^r t^{1-n} dt in closed form.  A divergent integral (too
    singular c at the origin) surfaces as a QuadratureError.
    """
    if not c_plus.radial:
        raise ValueError("solve_radial_poisson needs radial data")
    q = q or QuadSpec(tol=1e-12, rtol=1e-12)
    K = _radial_K(n, r)
    c = c_plus.profile
    kinks = [k for k in c_plus.kinks if 0 < k < r]

    def _int(fn, lo, hi):
        cuts = [lo] + [k for k in kinks if lo < k < hi] + [hi]
        parts = [integrate_interval(fn, a, b, q.replace(tol=q.tol / (len(cuts) - 1)))
                 for a, b in zip(cuts[:-1], cuts[1:]) if b > a]
        return QuadResult(sum(p.value for p in parts), sum(p.err_estimate for p in parts),
                          sum(p.evaluations for p in parts), all(p.converged for p in parts))

    def mass(t):
        return _int(lambda sg: c(sg) * sg ** (n - 1), 0.0, t)

    def one(rho):
        if rho >= r:
            return 0.0
        inner = QuadResult(0.0, 0.0, 0, True)
        if rho > 0:
            inner = mass(rho)
            inner = QuadResult(inner.value * float(K(rho)), inner.err_estimate * abs(float(K(rho))),
                               inner.evaluations, inner.converged)
        outer = _int(lambda sg: c(sg) * sg ** (n - 1) * K(sg), rho, r)
        tot = QuadResult(inner.value + outer.value, inner.err_estimate + outer.err_estimate,
                         inner.evaluations + outer.evaluations, inner.converged and outer.converged)
        tot.require(f"radial Poisson solve at rho={rho}")
        return tot.value

    memo = _RadialMemo(lambda rr: np.array([one(float(v)) for v in rr]))

    def prof(rho):
        return memo(np.abs(np.asarray(rho, dtype=float)))

    def d1(rho):
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        return np.array([-mass(float(t)).require("radial mass").value * float(t) ** (1 - n)
                         if t > 0 else 0.0 for t in rho.ravel()]).reshape(rho.shape)

    def lap(x):
        return -c_plus(x)

    f = ScalarField.radial_field(prof, n, d1=d1, support="ball", support_radius=r,
                                 decay=math.inf, kinks=(r,), laplacian=lap,
                                 name=f"poisson[{c_plus.name}]",
                                 meta={"kind": "radial-poisson", "r": r, "memo": memo})
    return f


def sup_norm_radial_poisson(f: ScalarField) -> float:
    """||f||_inf for a solution with nonnegative data (attained at the centre)."""
    return float(f.profile(np.array([0.0]))[0])
