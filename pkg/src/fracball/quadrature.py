"""Adaptive and fixed-rule quadrature for the singular integrals on balls.

Everything here works on vectorized integrands: a callable receiving a numpy
array of abscissae (or of points, shape ``(..., n)``) and returning values of
the same leading shape.

The adaptive engine is Gauss-Legendre panel halving: a panel's error estimate
is the difference between the m-point rule on the whole panel and the sum of
the m-point rules on its two halves.  The estimate is not a bound.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "QuadSpec",
    "QuadResult",
    "QuadratureError",
    "integrate_interval",
    "integrate_ball",
    "integrate_exterior",
    "reference_rule",
    "fixed_rule",
    "sphere_rule",
    "axisym_rule",
    "sphere_area",
    "ball_volume",
    "rotation_to",
]


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances and hints for one integration.

    ``tol`` is an absolute target and ``rtol`` a relative one; an integral is
    converged when its error estimate is below ``max(tol, rtol * |value|)``.
    ``endpoint_sing = (b0, b1)`` declares integrands behaving like
    ``(t - a)**-b0`` and ``(b - t)**-b1``; negative exponents declare bounded
    but non-smooth endpoints such as ``(b - t)**s``.
    """

    tol: float = 1e-10
    rtol: float = 0.0
    max_subdiv: int = 4000
    endpoint_sing: Optional[tuple[float, float]] = None
    log_substitution: bool = False
    mc_seed: int = 20240101
    mc_samples: int = 200_000
    order: int = 10
    sphere_order: int = 32
    inner_order: int = 20

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.rtol < 0:
            raise ValueError("rtol must be non-negative")
        if self.max_subdiv < 1:
            raise ValueError("max_subdiv must be >= 1")
        if self.endpoint_sing is not None:
            b0, b1 = self.endpoint_sing
            if b0 >= 1 or b1 >= 1:
                raise ValueError("endpoint singularity exponents must be < 1")
        if self.order < 2 or self.sphere_order < 2 or self.inner_order < 2:
            raise ValueError("rule orders must be >= 2")

    def replace(self, **kw) -> "QuadSpec":
        return dataclasses.replace(self, **kw)

    @property
    def betas(self) -> tuple[float, float]:
        return self.endpoint_sing if self.endpoint_sing is not None else (0.0, 0.0)


@dataclass(frozen=True)
class QuadResult:
    value: float
    err_estimate: float
    evaluations: int
    converged: bool

    def __float__(self):
        return float(self.value)

    def require(self, what: str = "integral") -> "QuadResult":
        if not self.converged:
            raise QuadratureError(f"{what} did not converge", self)
        return self


class QuadratureError(RuntimeError):
    """Raised when a caller needs a converged integral and did not get one.

    The partial result is kept on ``.result``.
    """

    def __init__(self, message: str, result: QuadResult):
        super().__init__(
            f"{message}: value={result.value!r}, err_estimate={result.err_estimate:.3e}, "
            f"evaluations={result.evaluations}"
        )
        self.result = result


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _gl01(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(m)
    return (x + 1.0) / 2.0, w / 2.0


def _grading_power(beta: float) -> int:
    # makes u**(k*(1-beta)-1) at least C^2 after t = a + L*u**k
    if beta == 0.0:
        return 1
    return max(2, math.ceil(3.0 / (1.0 - beta)))


@lru_cache(maxsize=256)
def reference_rule(m: int, beta0: float = 0.0, beta1: float = 0.0,
                   levels0: int = 0, levels1: int = 0,
                   ratio: float = 0.15) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [0, 1].

    ``levels0``/``levels1`` add geometrically graded panels (factor ``ratio``)
    toward 0 and 1; the innermost end panel gets the power substitution that
    absorbs a declared ``(t)**-beta0`` / ``(1-t)**-beta1`` behaviour.
    """
    x, w = _gl01(m)
    breaks = [0.0, 1.0]
    if levels0 or levels1:
        lo = [0.5 * ratio ** k for k in range(levels0, 0, -1)] if levels0 else []
        hi = [1.0 - 0.5 * ratio ** k for k in range(1, levels1 + 1)] if levels1 else []
        breaks = sorted(set([0.0] + lo + [0.5] + hi + [1.0]))
    elif beta0 and beta1:
        breaks = [0.0, 0.5, 1.0]
    nodes, weights = [], []
    last = len(breaks) - 2
    for i in range(last + 1):
        a, b = breaks[i], breaks[i + 1]
        L = b - a
        if i == 0 and beta0:
            k = _grading_power(beta0)
            nodes.append(a + L * x ** k)
            weights.append(L * k * x ** (k - 1) * w)
        elif i == last and beta1:
            k = _grading_power(beta1)
            nodes.append(b - L * x ** k)
            weights.append(L * k * x ** (k - 1) * w)
        else:
            nodes.append(a + L * x)
            weights.append(L * w)
    order = np.argsort(np.concatenate(nodes))
    return np.concatenate(nodes)[order], np.concatenate(weights)[order]


def fixed_rule(lo, hi, m: int, beta0: float = 0.0, beta1: float = 0.0,
               levels0: int = 0, levels1: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Map :func:`reference_rule` onto intervals ``[lo, hi]`` (arrays broadcast).

    Returns nodes and weights with shape ``lo.shape + (M,)``.
    """
    xi, om = reference_rule(m, float(beta0), float(beta1), levels0, levels1)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    return lo + (hi - lo) * xi, (hi - lo) * om


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n: int, r: float = 1.0) -> float:
    return sphere_area(n) * r ** n / n


def rotation_to(axis) -> np.ndarray:
    """Orthogonal matrix whose last column is ``axis / |axis|``."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    n = a.size
    order = np.argsort(np.abs(a))
    M = np.column_stack([a] + [np.eye(n)[:, i] for i in order[: n - 1]])
    Q, _ = np.linalg.qr(M)
    if Q[:, 0] @ a < 0:
        Q[:, 0] = -Q[:, 0]
    return np.roll(Q, -1, axis=1)


@lru_cache(maxsize=64)
def _sphere_rule_cached(n: int, order: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    area = sphere_area(n)
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if n == 2:
        M = 2 * order
        phi = 2.0 * np.pi * np.arange(M) / M
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1), np.full(M, 2.0 * np.pi / M)
    if n == 3:
        th, wt = _gl01(order)
        th = np.pi * th
        wt = np.pi * wt * np.sin(th)
        M = 2 * order
        phi = 2.0 * np.pi * np.arange(M) / M
        st, ct = np.sin(th)[:, None], np.cos(th)[:, None]
        dirs = np.stack([st * np.cos(phi), st * np.sin(phi), np.broadcast_to(ct, (order, M))], -1)
        w = (wt[:, None] * np.full(M, 2.0 * np.pi / M)).ravel()
        return dirs.reshape(-1, 3), w
    # n > 3: seeded random antipodal pairs
    rng = np.random.default_rng(seed)
    half = max(order * order, 64)
    d = rng.standard_normal((half, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    dirs = np.concatenate([d, -d])
    return dirs, np.full(2 * half, area / (2 * half))


def sphere_rule(n: int, order: int = 32, axis=None, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Antipodally symmetric rule on S^{n-1}; weights sum to the sphere area.

    For n = 3 the polar angle uses Gauss-Legendre (clustered at the poles) and
    ``axis`` moves the pole onto a direction where the integrand peaks.
    """
    dirs, w = _sphere_rule_cached(n, order, seed)
    if axis is not None and n >= 2 and np.linalg.norm(axis) > 0:
        dirs = dirs @ rotation_to(axis).T
    return dirs, w


@lru_cache(maxsize=64)
def axisym_rule(n: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes ``mu = cos(theta)`` and weights so that sum w F(mu) ~ int_S F(omega.e) d omega."""
    if n == 1:
        return np.array([1.0, -1.0]), np.array([1.0, 1.0])
    th, wt = _gl01(order)
    th = np.pi * th
    w = sphere_area(n - 1) * np.pi * wt * np.sin(th) ** (n - 2)
    return np.cos(th), w


# ---------------------------------------------------------------------------
# Adaptive engine
# ---------------------------------------------------------------------------

def _adaptive(g: Callable, lo: float, hi: float, m: int, tol: float, rtol: float,
              max_subdiv: int) -> QuadResult:
    x, w = _gl01(m)
    nev = 0

    def whole(L, H):
        nonlocal nev
        pts = L[:, None] + (H - L)[:, None] * x
        nev += pts.size
        vals = np.asarray(g(pts.ravel()), dtype=float).reshape(pts.shape)
        return (H - L) * (vals @ w)

    def halves(L, H):
        mid = 0.5 * (L + H)
        both = whole(np.concatenate([L, mid]), np.concatenate([mid, H]))
        k = L.size
        return both[:k], both[k:]

    L = np.array([lo], dtype=float)
    H = np.array([hi], dtype=float)
    W = whole(L, H)
    left, right = halves(L, H)
    nsplit = 0
    while True:
        val_p = left + right
        err_p = np.abs(W - val_p)
        value = float(np.sum(val_p))
        err = float(np.sum(err_p))
        if not (np.isfinite(value) and np.isfinite(err)):
            return QuadResult(value, math.inf, nev, False)
        target = max(tol, rtol * abs(value))
        if err <= target:
            return QuadResult(value, err, nev, True)
        if nsplit >= max_subdiv:
            return QuadResult(value, err, nev, False)
        width = H - L
        splittable = width > 64 * np.finfo(float).eps * np.maximum(np.abs(L), np.abs(H))
        share = target / max(L.size, 1)
        sel = (err_p > share) & splittable
        if not np.any(sel):
            cand = np.where(splittable, err_p, -1.0)
            j = int(np.argmax(cand))
            if cand[j] <= 0:
                return QuadResult(value, err, nev, False)
            sel = np.zeros_like(sel)
            sel[j] = True
        idx = np.flatnonzero(sel)
        if idx.size > max_subdiv - nsplit:
            idx = idx[np.argsort(err_p[idx])[::-1][: max_subdiv - nsplit]]
        keep = np.ones(L.size, dtype=bool)
        keep[idx] = False
        mid = 0.5 * (L[idx] + H[idx])
        cL = np.concatenate([L[idx], mid])
        cH = np.concatenate([mid, H[idx]])
        cW = np.concatenate([left[idx], right[idx]])
        cl, cr = halves(cL, cH)
        L = np.concatenate([L[keep], cL])
        H = np.concatenate([H[keep], cH])
        W = np.concatenate([W[keep], cW])
        left = np.concatenate([left[keep], cl])
        right = np.concatenate([right[keep], cr])
        nsplit += idx.size


def _pieces_finite(f, a, b, beta0, beta1):
    """Split [a, b] and apply power substitutions at declared singular ends."""
    out = []
    if beta0 and beta1:
        m = 0.5 * (a + b)
        out += _pieces_finite(f, a, m, beta0, 0.0)
        out += _pieces_finite(f, m, b, 0.0, beta1)
        return out
    L = b - a
    if beta0:
        k = _grading_power(beta0)
        out.append((_graded(f, a, L, k, beta0), 0.0, 1.0))
    elif beta1:
        k = _grading_power(beta1)
        out.append((_graded(f, b, -L, k, beta1), 0.0, 1.0))
    else:
        out.append((f, a, b))
    return out


def _graded(f, end, L, k, beta):
    """Integrand in u for t = end + L u**k.

    Offsets below ``1e-9 |end|`` cannot be represented accurately next to
    ``end``; there the declared power law is extrapolated from the smallest
    safe offset, f(t) ~ f(t_c) (delta / delta_c)**-beta.
    """
    floor = 1e-9 * abs(end)

    def g(u):
        delta = abs(L) * u ** k
        dc = np.maximum(delta, floor)
        t = end + math.copysign(1.0, L) * dc
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = np.where(delta < dc, (delta / dc) ** -beta, 1.0) if floor else 1.0
        return f(t) * corr * (abs(L) * k * u ** (k - 1))

    return g


def _pieces_infinite(f, a, beta0, h=1.0):
    # [a, a+h] plus [a+h, inf) through t = a + h / v**2
    out = _pieces_finite(f, a, a + h, beta0, 0.0)

    def g(v):
        return f(a + h / v ** 2) * (2.0 * h / v ** 3)

    out.append((g, 0.0, 1.0))
    return out


def _run_pieces(pieces, q: QuadSpec) -> QuadResult:
    total, err, nev, ok = 0.0, 0.0, 0, True
    k = len(pieces)
    for g, lo, hi in pieces:
        res = _adaptive(g, lo, hi, q.order, q.tol / k, q.rtol,
                        max(1, q.max_subdiv // k))
        total += res.value
        err += res.err_estimate
        nev += res.evaluations
        ok = ok and res.converged
    if ok:
        ok = err <= max(q.tol, q.rtol * abs(total)) * (1 + 1e-12)
    return QuadResult(total, err, nev, ok)


def integrate_interval(f: Callable, a: float, b: float, q: Optional[QuadSpec] = None, *,
                       logvar_integrand: Optional[Callable] = None) -> QuadResult:
    """Adaptive integral of a vectorized ``f`` over ``(a, b)``.

    ``b`` may be ``inf``.  With ``q.log_substitution`` the lower end is treated
    as logarithmically singular and ``t = a + (b - a) exp(-w)`` is applied;
    ``logvar_integrand(w)`` may supply ``f(t) * (t - a)`` directly in the new
    variable, which is required whenever ``f`` cannot be evaluated at
    ``t - a`` below the floating point range.
    """
    q = q or QuadSpec()
    if a == b:
        return QuadResult(0.0, 0.0, 0, True)
    if b < a:
        r = integrate_interval(f, b, a, q, logvar_integrand=logvar_integrand)
        return dataclasses.replace(r, value=-r.value)
    beta0, beta1 = q.betas
    if q.log_substitution:
        if not math.isfinite(b):
            raise ValueError("log substitution needs a finite interval")
        if logvar_integrand is None:
            span = b - a

            def logvar_integrand(w):
                d = span * np.exp(-w)
                return f(a + d) * d

        pieces = _pieces_infinite(logvar_integrand, 0.0, 0.0)
    elif math.isinf(b):
        pieces = _pieces_infinite(f, a, beta0, h=max(1.0, abs(a)))
    else:
        pieces = _pieces_finite(f, a, b, beta0, beta1)
    return _run_pieces(pieces, q)


def _sum_results(results: Sequence[QuadResult], q: QuadSpec) -> QuadResult:
    v = sum(r.value for r in results)
    e = sum(r.err_estimate for r in results)
    nev = sum(r.evaluations for r in results)
    ok = all(r.converged for r in results) and e <= max(q.tol, q.rtol * abs(v)) * (1 + 1e-12)
    return QuadResult(v, e, nev, ok)


def _breakpoints(lo: float, hi: float, kinks) -> list[float]:
    inner = sorted(k for k in kinks if lo < k < hi)
    return [lo] + inner + [hi]


def _as_callable(f):
    return f.__call__ if hasattr(f, "n") and hasattr(f, "func") else f


def integrate_ball(f, dom, q: Optional[QuadSpec] = None, *, axis=None) -> QuadResult:
    """Integral of a field over the ball ``dom`` (centred at the origin).

    Radial fields reduce to one radial integral times the sphere area.  Other
    fields use a tensor sphere x radius rule for n <= 3 and seeded Monte Carlo
    above that.
    """
    q = q or QuadSpec()
    n, R = dom.n, dom.r
    radial = getattr(f, "radial", False) and getattr(f, "profile", None) is not None
    if getattr(f, "support", "whole") == "ball":
        R = min(R, f.support_radius)
    if R <= 0:
        return QuadResult(0.0, 0.0, 0, True)
    area = sphere_area(n)
    if radial:
        prof = f.profile
        if q.log_substitution:
            logp = getattr(f, "log_profile", None)
            logvar = None
            if logp is not None:
                lr = math.log(R)

                def logvar(w):
                    return area * np.exp(logp(lr - w) + n * (lr - w))

            return integrate_interval(lambda t: area * prof(t) * t ** (n - 1), 0.0, R, q,
                                      logvar_integrand=logvar)
        cuts = _breakpoints(0.0, R, getattr(f, "kinks", ()))
        parts = []
        k = len(cuts) - 1
        for i in range(k):
            b0, b1 = q.betas
            qi = q.replace(tol=q.tol / k,
                           endpoint_sing=(b0 if i == 0 else 0.0, b1 if i == k - 1 else 0.0))
            parts.append(integrate_interval(lambda t: area * prof(t) * t ** (n - 1),
                                            cuts[i], cuts[i + 1], qi))
        return _sum_results(parts, q)
    func = _as_callable(f)
    if n > 3:
        rng = np.random.default_rng(q.mc_seed)
        N = q.mc_samples
        d = rng.standard_normal((N, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        rad = R * rng.random(N) ** (1.0 / n)
        vals = np.asarray(func(d * rad[:, None]), dtype=float)
        vol = ball_volume(n, R)
        v = vol * float(np.mean(vals))
        e = vol * float(np.std(vals, ddof=1)) / math.sqrt(N)
        return QuadResult(v, e, N, e <= max(q.tol, q.rtol * abs(v)))
    dirs, w = sphere_rule(n, q.sphere_order, axis=axis, seed=q.mc_seed)

    def g(t):
        pts = t[:, None, None] * dirs[None, :, :]
        vals = np.asarray(func(pts), dtype=float)
        return (vals @ w) * t ** (n - 1)

    cuts = _breakpoints(0.0, R, getattr(f, "kinks", ()))
    k = len(cuts) - 1
    return _sum_results([integrate_interval(g, cuts[i], cuts[i + 1], q.replace(tol=q.tol / k))
                         for i in range(k)], q)


def integrate_exterior(f, dom, q: Optional[QuadSpec] = None, *, axis=None) -> QuadResult:
    """Integral over the complement of the closed ball ``dom``.

    The radius is mapped through ``t = r/|y|`` onto (0, 1].  The behaviour at
    ``t -> 0`` follows from the field's declared decay; a boundary layer at
    ``|y| -> r+`` is declared through ``q.endpoint_sing[1]`` (a singularity at
    ``t = 1``).
    """
    q = q or QuadSpec()
    n, r = dom.n, dom.r
    support = getattr(f, "support", "whole")
    if support == "ball" and getattr(f, "support_radius", math.inf) <= r:
        return QuadResult(0.0, 0.0, 0, True)
    decay = getattr(f, "decay", None)
    if decay is not None and decay <= n:
        raise ValueError(f"field decay |y|^-{decay} is not integrable over the exterior in R^{n}")
    beta0 = 0.0
    if decay is not None and math.isfinite(decay):
        beta0 = max(0.0, n + 1.0 - decay)
        if beta0 >= 1.0:
            raise ValueError("field decay too slow for the exterior map")
    beta1 = q.betas[1]
    area = sphere_area(n)
    radial = getattr(f, "radial", False) and getattr(f, "profile", None) is not None
    if radial:
        prof = f.profile

        def g(t):
            return area * prof(r / t) * r ** n * t ** (-n - 1.0)
    else:
        func = _as_callable(f)
        dirs, w = sphere_rule(n, q.sphere_order, axis=axis, seed=q.mc_seed)

        def g(t):
            pts = (r / t)[:, None, None] * dirs[None, :, :]
            vals = np.asarray(func(pts), dtype=float)
            return (vals @ w) * r ** n * t ** (-n - 1.0)

    kinks = [r / k for k in getattr(f, "kinks", ()) if k > r]
    cuts = _breakpoints(0.0, 1.0, kinks)
    k = len(cuts) - 1
    parts = []
    for i in range(k):
        qi = q.replace(tol=q.tol / k,
                       endpoint_sing=(beta0 if i == 0 else 0.0, beta1 if i == k - 1 else 0.0))
        parts.append(integrate_interval(g, cuts[i], cuts[i + 1], qi))
    return _sum_results(parts, q)
