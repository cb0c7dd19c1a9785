"""Maximum-principle laboratory.

Builds (u, c) and (u, b) pairs that satisfy the differential inequalities
with equality, computes the hypothesis norms, and samples the conclusions.
Everything is evaluated on a sampling grid (dense radii plus random
interior points), never claimed "everywhere".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional, Sequence

import numpy as np

from .domain import (BallDomain, ScalarField, VectorField, constant_field, negative_part,
                     positive_part)
from .norms import drift_distance_norm, lp_norm, sobolev_w1p_norm
from .operator import classical_laplacian
from .quadrature import QuadResult, QuadSpec, QuadratureError, integrate_interval, sphere_area
from .solvers import solve_dirichlet_fractional, solve_forced_fractional, solve_radial_poisson

__all__ = [
    "CounterexampleParams",
    "MPVerdict",
    "ExperimentRecord",
    "counterexample_u",
    "counterexample_c",
    "critical_sweep",
    "sweep_assertions",
    "counterexample_residuals",
    "manufactured_zero_order",
    "manufactured_drift",
    "DriftAdmissibilityError",
    "sampling_grid",
    "check_weak_mp",
    "strong_mp_bound",
    "fractional_mp_check",
    "sobolev_constant",
    "recorded_thresholds",
    "Family",
    "falsification_corpus",
    "run_falsification",
]

CLOSED_TOL = 1e-9
QUAD_TOL = 1e-5


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------

@dataclass
class MPVerdict:
    hypothesis_norms: dict
    interior_min: float
    boundary_min: float
    residual_max: float
    conclusion_holds: bool
    quantitative_bound: Optional[float] = None
    status: str = "ok"
    hypothesis_ok: bool = True
    thresholds: dict = field(default_factory=dict)
    notes: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in list(d["hypothesis_norms"].items()):
            d["hypothesis_norms"][k] = _jsonable(v)
        for k in ("interior_min", "boundary_min", "residual_max", "quantitative_bound"):
            d[k] = _jsonable(d[k])
        return d


def _jsonable(v):
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass
class ExperimentRecord:
    params: dict
    norms: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    conclusions: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    failure: Optional[str] = None

    def flat(self) -> dict:
        out = {}
        for part in (self.params, self.norms, self.values, self.residuals, self.conclusions):
            out.update(part)
        out.update({f"err_{k}": v for k, v in self.errors.items()})
        return out


# ---------------------------------------------------------------------------
# counterexample family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleParams:
    n: int = 3
    alpha: float = 1.0
    eps: float = 0.1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"the counterexample needs n >= 3, got {self.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.eps < 1 / math.e:
            raise ValueError(f"eps must lie in (0, 1/e), got {self.eps}")


def _L(p, rho):
    with np.errstate(divide="ignore"):
        return -np.log(p.eps * rho)


def counterexample_u(p: CounterexampleParams) -> ScalarField:
    """u = (-ln(eps |x|))^-alpha, continuously extended by u(0) = 0."""
    a, n = p.alpha, p.n

    def prof(rho):
        rho = np.asarray(rho, dtype=float)
        L = _L(p, np.where(rho > 0, rho, 1.0))
        return np.where(rho > 0, L ** -a, 0.0)

    def d1(rho):
        L = _L(p, rho)
        return a * L ** (-a - 1) / rho

    def d2(rho):
        L = _L(p, rho)
        return a * L ** (-a - 1) / rho ** 2 * ((a + 1) / L - 1.0)

    def lap(x):
        rho = np.linalg.norm(x, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            L = _L(p, rho)
            return a * L ** (-a - 1) / rho ** 2 * ((a + 1) / L + n - 2)

    def logp(t):
        return -a * np.log(-math.log(p.eps) - t)

    return ScalarField.radial_field(prof, n, d1=d1, d2=d2, laplacian=lap, log_profile=logp,
                                    kinks=(0.0,), name=f"u_eps[{p.eps:g},{a:g}]",
                                    meta={"params": p})


def counterexample_c(p: CounterexampleParams) -> ScalarField:
    """c = (alpha(alpha+1)/L + alpha(n-2)) / (|x|^2 L), L = -ln(eps|x|); +inf at 0."""
    a, n = p.alpha, p.n

    def prof(rho):
        rho = np.asarray(rho, dtype=float)
        safe = np.where(rho > 0, rho, 1.0)
        L = _L(p, safe)
        return np.where(rho > 0, (a * (a + 1) / L + a * (n - 2)) / (safe ** 2 * L), np.inf)

    def logp(t):
        L = -math.log(p.eps) - t
        return np.log(a * (a + 1) / L + a * (n - 2)) - 2.0 * t - np.log(L)

    return ScalarField.radial_field(prof, n, log_profile=logp, kinks=(0.0,),
                                    name=f"c_eps[{p.eps:g},{a:g}]", meta={"params": p})


def _radii(count, lo=0.05, hi=0.95):
    return np.linspace(lo, hi, count)


def _on_axis(rho, n):
    X = np.zeros((np.size(rho), n))
    X[:, 0] = rho
    return X


def counterexample_residuals(p: CounterexampleParams, count: int = 50) -> dict:
    """max |-Delta u + c u| over radii in [0.05, 0.95], closed form and 4th-order FD."""
    u, c = counterexample_u(p), counterexample_c(p)
    # off-axis points so every coordinate stencil is exercised
    d = np.ones(p.n) / math.sqrt(p.n)
    X = _radii(count)[:, None] * d
    cu = c(X) * u(X)
    closed = np.abs(-classical_laplacian(u, X, method="closed") + cu)
    fd = np.abs(-classical_laplacian(u, X, method="fd", order=4) + cu)
    return {"residual_closed": float(closed.max()), "residual_fd": float(fd.max())}


def critical_sweep(n: int, alpha: float, eps_list: Sequence[float],
                   q: Optional[QuadSpec] = None, *, grid_points: int = 1000,
                   seed: int = 0) -> list[ExperimentRecord]:
    """Norm decay, origin value, boundary value and residual for each eps."""
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("empty eps list")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    params = [CounterexampleParams(n, alpha, e) for e in eps_list]
    q = q or QuadSpec(tol=1e-12, rtol=1e-9)
    dom = BallDomain(n, 1.0)
    rows = []
    for p in params:
        rec = ExperimentRecord(params={"n": n, "alpha": alpha, "eps": p.eps})
        try:
            res = lp_norm(counterexample_c(p), dom, n / 2.0, q)
            rec.norms["norm_c_Lnhalf"] = res.value
            rec.errors["norm_c_Lnhalf"] = res.err_estimate
        except QuadratureError as exc:
            rec.failure = str(exc)
            rec.norms["norm_c_Lnhalf"] = exc.result.value
            rec.errors["norm_c_Lnhalf"] = exc.result.err_estimate
        u = counterexample_u(p)
        X, B = sampling_grid(n, 1.0, grid_points, seed)
        uo = float(u(np.zeros((1, n)))[0])
        rec.values["u_at_origin"] = uo
        rec.values["boundary_min"] = float(np.min(u(B)))
        rec.values["interior_min"] = float(np.min(u(X)))
        rec.values["boundary_exact"] = (-math.log(p.eps)) ** (-alpha)
        r = counterexample_residuals(p)
        rec.residuals["residual_max"] = r["residual_closed"]
        rec.residuals["residual_fd"] = r["residual_fd"]
        rec.conclusions["weak_mp_holds"] = rec.values["interior_min"] >= -CLOSED_TOL
        rec.conclusions["strong_mp_fails"] = uo == 0.0 and rec.values["boundary_min"] > 0
        rows.append(rec)
    return rows


def sweep_assertions(rows: list[ExperimentRecord], rel_err: float = 1e-6,
                     ratio_limit: float = 0.5) -> dict:
    """Pass/fail of each invariant of a critical sweep, with the offending row."""
    norms = [r.norms["norm_c_Lnhalf"] for r in rows]
    out = {}
    dec = [i for i in range(1, len(norms)) if not norms[i] < norms[i - 1]]
    out["norm_strictly_decreasing"] = {"pass": not dec, "rows": dec}
    bad = [i for i, r in enumerate(rows)
           if r.failure or r.errors["norm_c_Lnhalf"] > rel_err * abs(r.norms["norm_c_Lnhalf"])]
    out["norm_relative_error"] = {"pass": not bad, "rows": bad}
    ratio = norms[-1] / norms[0]
    out["final_over_first_below_half"] = {"pass": len(norms) > 1 and ratio < ratio_limit,
                                          "ratio": ratio}
    bad = [i for i, r in enumerate(rows) if r.values["u_at_origin"] != 0.0]
    out["u_at_origin_zero"] = {"pass": not bad, "rows": bad}
    bad = [i for i, r in enumerate(rows)
           if not (r.values["boundary_min"] > 0
                   and abs(r.values["boundary_min"] - r.values["boundary_exact"]) <= 1e-12)]
    out["boundary_positive"] = {"pass": not bad, "rows": bad}
    bad = [i for i, r in enumerate(rows) if not r.conclusions["weak_mp_holds"]]
    out["weak_mp_holds"] = {"pass": not bad, "rows": bad}
    bad = [i for i, r in enumerate(rows) if r.residuals["residual_max"] > 1e-8]
    out["residual_closed"] = {"pass": not bad, "rows": bad}
    return out


# ---------------------------------------------------------------------------
# manufactured pairs
# ---------------------------------------------------------------------------

def sampling_grid(n: int, r: float = 1.0, points: int = 1000, seed: int = 0,
                  radial: int = 401, boundary: int = 200):
    """Interior sample (dense radii along several rays plus random points) and boundary sample."""
    rng = np.random.default_rng(seed)
    rays = np.eye(n)
    rays = np.concatenate([rays, -rays, np.ones((1, n)) / math.sqrt(n)])
    rad = np.linspace(0.0, r, radial, endpoint=False)
    X1 = (rad[:, None, None] * rays[None]).reshape(-1, n)
    d = rng.standard_normal((points, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    X2 = d * (r * rng.random(points) ** (1.0 / n))[:, None]
    b = rng.standard_normal((boundary, n))
    b /= np.linalg.norm(b, axis=1, keepdims=True)
    B = np.concatenate([r * b, r * rays])
    return np.concatenate([X1, X2]), B


def manufactured_zero_order(u: ScalarField, r: float = 1.0, seed: int = 0) -> ScalarField:
    """c = Delta u / u, so that -Delta u + c u = 0 exactly."""
    if u.laplacian is None:
        raise ValueError(f"{u.name}: a closed-form Laplacian is required")
    X, B = sampling_grid(u.n, r, 1000, seed)
    vals = u(np.concatenate([X, B]))
    if np.any(vals <= 0):
        raise ValueError(f"{u.name} vanishes or changes sign; c = Delta u / u is undefined")
    lap = u.laplacian
    prof = None
    if u.radial:
        def prof(rho):
            return lap(_on_axis(np.atleast_1d(rho), u.n)).reshape(np.shape(rho)) / u.profile(rho)
    return ScalarField(func=lambda x: lap(x) / u(x), n=u.n, radial=u.radial, profile=prof,
                       domain_radius=r, name=f"c[{u.name}]")


class DriftAdmissibilityError(ValueError):
    """The manufactured drift is not in L^n(B_r)."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


def _radial_ln_norm_report(bprof, n, r):
    """int_0^r |b|^n rho^{n-1} over [d, r] for shrinking d; finite iff the increments stop."""
    area = sphere_area(n)
    f = lambda t: area * np.abs(bprof(t)) ** n * t ** (n - 1)
    cuts = [r, 1e-2 * r, 1e-4 * r, 1e-8 * r, 1e-12 * r, 1e-16 * r]
    q = QuadSpec(tol=1e-10, rtol=1e-10)
    incs = [integrate_interval(f, lo, hi, q).value for hi, lo in zip(cuts[:-1], cuts[1:])]
    total = sum(incs)
    finite = incs[-1] <= 1e-6 * max(total, 1e-300) and incs[-2] <= 1e-4 * max(total, 1e-300)
    return {"increments": incs, "partial_integral": total, "finite": bool(finite),
            "norm": total ** (1.0 / n) if finite else math.inf}


def manufactured_drift(u: ScalarField, r: float = 1.0, *, check: bool = True,
                       seed: int = 0) -> VectorField:
    """b = Delta u grad u / |grad u|^2, so that -Delta u + b . grad u = 0 exactly.

    For radial u this is (Delta u / u'(rho)) x/|x|.  Raises
    :class:`DriftAdmissibilityError` when grad u vanishes on the sampling
    grid away from the origin, or (with ``check``) when |b| is not in L^n.
    """
    if u.gradient is None or u.laplacian is None:
        raise ValueError(f"{u.name}: closed-form gradient and Laplacian are required")
    n = u.n
    X, _ = sampling_grid(n, r, 1000, seed)
    X = X[np.linalg.norm(X, axis=-1) > 1e-3 * r]
    gn = np.linalg.norm(u.gradient(X), axis=-1)
    if np.any(gn <= 1e-12):
        raise DriftAdmissibilityError(f"{u.name}: gradient vanishes inside the ball",
                                      {"finite": False, "norm": math.inf})

    def func(x):
        g = u.gradient(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (u.laplacian(x) / np.sum(g * g, axis=-1))[..., None] * g

    report = None
    if u.radial:
        e1 = np.zeros(n)
        e1[0] = 1.0

        def bprof(t):
            t = np.atleast_1d(t)
            X = t[:, None] * e1
            return u.laplacian(X) / (u.gradient(X) @ e1)

        report = _radial_ln_norm_report(bprof, n, r)
    else:
        mag = ScalarField(func=lambda x: np.linalg.norm(func(x), axis=-1), n=n)
        try:
            # above n = 3 the ball integral is Monte Carlo; ask only for what it can deliver
            tq = QuadSpec(tol=1e-8, rtol=1e-8) if n <= 3 else QuadSpec(tol=1e-2, rtol=1e-2)
            res = lp_norm(mag, BallDomain(n, r), float(n), tq)
            report = {"finite": True, "norm": res.value, "err": res.err_estimate}
        except QuadratureError as exc:
            report = {"finite": False, "norm": math.inf, "partial": exc.result.value}
    if check and not report["finite"]:
        raise DriftAdmissibilityError(f"{u.name}: manufactured drift is not in L^{n}(B_{r})", report)
    return VectorField(func=func, n=n, name=f"b[{u.name}]", meta={"admissibility": report})


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------

def sobolev_constant(n: int) -> float:
    """Sharp S_n in ||v||_{2n/(n-2)}^2 <= S_n ||grad v||_2^2 (n >= 3)."""
    if n < 3:
        raise ValueError("needs n >= 3")
    area = 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)   # |S^n|
    return 4.0 / (n * (n - 2) * area ** (2.0 / n))


def recorded_thresholds(n: int) -> dict:
    """Admissible hypothesis sizes that the energy argument certifies.

    ||c^-||_{n/2} < 1/S_n and ||b||_n < S_n^{-1/2} each force u^- = 0.
    """
    S = sobolev_constant(n)
    return {"zero_order": 1.0 / S, "drift": S ** -0.5}


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------

def _minima(u, n, r, seed):
    X, B = sampling_grid(n, r, 1000, seed)
    return float(np.min(u(X))), float(np.min(u(B))), X


def check_weak_mp(u: ScalarField, coef, dom: BallDomain, thresholds: Optional[dict] = None,
                  q: Optional[QuadSpec] = None, *, m: float = 0.0, tol: float = CLOSED_TOL,
                  seed: int = 0) -> MPVerdict:
    """Weak maximum principle for -Delta u + c u >= 0 (scalar ``coef``) or
    -Delta u + b . grad u >= 0 (vector ``coef``).

    With ``m > 0`` the boundary hypothesis is u >= m and the conclusion
    u >= m (the drift strong form).  The verdict's status is
    ``hypothesis_violated`` when the boundary or the inequality fails,
    ``above_threshold`` when a norm exceeds its threshold, else ``ok``.
    """
    n = dom.n
    thresholds = thresholds or recorded_thresholds(n)
    q = q or QuadSpec(tol=1e-9, rtol=1e-9)
    interior_min, boundary_min, X = _minima(u, n, dom.r, seed)
    with np.errstate(divide="ignore", invalid="ignore"):
        lap = classical_laplacian(u, X)
    norms = {}
    drift = isinstance(coef, VectorField)
    if drift:
        bv = coef(X)
        with np.errstate(invalid="ignore"):
            res = -lap + np.sum(bv * u.gradient(X), axis=-1)
        adm = coef.meta.get("admissibility")
        if adm is not None:
            norms["b_Ln"] = adm["norm"]
        else:
            mag = ScalarField(func=lambda x: np.linalg.norm(coef(x), axis=-1), n=n)
            norms["b_Ln"] = lp_norm(mag, dom, float(n), q).value
        key, thr = "b_Ln", thresholds["drift"]
    else:
        with np.errstate(invalid="ignore"):
            res = -lap + coef(X) * u(X)
        cm = negative_part(coef)
        if coef.radial and coef.log_profile is not None:
            # c >= 0 families with singular profiles have c^- = 0 identically
            zero = np.all(coef.profile(np.linspace(1e-6, dom.r, 2001)) >= 0)
            norms["c_minus_Lnhalf"] = 0.0 if zero else lp_norm(cm, dom, n / 2.0, q).value
        else:
            norms["c_minus_Lnhalf"] = lp_norm(cm, dom, n / 2.0, q).value
        key, thr = "c_minus_Lnhalf", thresholds["zero_order"]
    finite = np.isfinite(res)
    residual_max = float(np.max(np.abs(res[finite]))) if np.any(finite) else math.inf
    ineq_ok = bool(np.all(res[finite] >= -max(tol, 1e-9 * np.max(np.abs(lap[finite])))))
    conclusion = interior_min >= m - tol
    status, hyp = "ok", True
    if boundary_min < m - tol or not ineq_ok:
        status, hyp = "hypothesis_violated", False
    elif not norms[key] <= thr:
        status, hyp = "above_threshold", False
    return MPVerdict(norms, interior_min, boundary_min, residual_max, bool(conclusion),
                     None, status, hyp, {key: thr})


def _radial_envelope(c: ScalarField, r: float, samples: int = 64):
    if c.radial:
        return c
    dirs = np.random.default_rng(1).standard_normal((samples, c.n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    def prof(rho):
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        return np.max(c(rho[:, None, None] * dirs[None]), axis=-1).reshape(rho.shape)

    return ScalarField.radial_field(prof, c.n, name=f"env[{c.name}]")


def strong_mp_bound(u: ScalarField, c: ScalarField, m: float, p: float,
                    q: Optional[QuadSpec] = None, *, r: float = 1.0, tol: float = CLOSED_TOL,
                    seed: int = 0) -> MPVerdict:
    """u >= l m with l = 1 - ||f||_inf and -Delta f = c^+ (radial solve).

    For p <= n/2 the statement does not apply; the verdict records
    CRITICAL_CASE together with the observed minimum.
    """
    n = u.n
    dom = BallDomain(n, r)
    q = q or QuadSpec(tol=1e-10, rtol=1e-10)
    interior_min, boundary_min, X = _minima(u, n, r, seed)
    with np.errstate(invalid="ignore"):
        res = -classical_laplacian(u, X) + c(X) * u(X)
    finite = np.isfinite(res)
    residual_max = float(np.max(np.abs(res[finite])))
    norms = {}
    if p <= n / 2.0:
        try:
            norms[f"c_L{p:g}"] = lp_norm(c, dom, p, q.replace(tol=1e-8, rtol=1e-8)).value
        except QuadratureError as exc:
            norms[f"c_L{p:g}"] = exc.result.value
        fails = interior_min <= 0.0 < boundary_min
        return MPVerdict(norms, interior_min, boundary_min, residual_max,
                         conclusion_holds=not fails, quantitative_bound=None,
                         status="CRITICAL_CASE", hypothesis_ok=False,
                         notes="p <= n/2: no positive l exists; observed min u = "
                               f"{interior_min:.3g} with boundary min {boundary_min:.3g}")
    try:
        norms[f"c_L{p:g}"] = lp_norm(c, dom, p, q).value
    except QuadratureError:
        norms[f"c_L{p:g}"] = math.inf
    cm = negative_part(c)
    norms["c_minus_Lnhalf"] = lp_norm(cm, dom, n / 2.0, q).value
    cplus = positive_part(_radial_envelope(c, r))
    f = solve_radial_poisson(cplus, r, n)
    fsup = float(f.profile(np.array([0.0]))[0])
    norms["f_sup"] = fsup
    l = 1.0 - fsup
    thr = recorded_thresholds(n)["zero_order"]
    if boundary_min < m - tol:
        status, hyp = "hypothesis_violated", False
    elif not norms["c_minus_Lnhalf"] <= thr:
        status, hyp = "above_threshold", False
    elif l <= 0:
        status, hyp = "bound_vacuous", False
    else:
        status, hyp = "ok", True
    bound = l * m if l > 0 else None
    holds = bound is None or interior_min >= bound - tol
    return MPVerdict(norms, interior_min, boundary_min, residual_max, bool(holds), bound,
                     status, hyp, {"c_minus_Lnhalf": thr, "f_sup": 1.0})


def fractional_mp_check(s: float, *, g: Optional[ScalarField] = None,
                        h: Optional[ScalarField] = None, c: Optional[ScalarField] = None,
                        b: Optional[VectorField] = None, r: float = 1.0, n: int = 3,
                        q: Optional[QuadSpec] = None, tol: float = QUAD_TOL,
                        points: int = 200, seed: int = 0) -> MPVerdict:
    """Sign of the representation-formula solution and the fractional hypothesis norms.

    ``g``: exterior data (Dirichlet solve); ``h``: forcing (Green solve); at
    least one is required and the two are added.  ``c`` reports
    ||c^-||_{L^{n/2s}}; ``b`` (needs 1/2 < s < 1) reports ||b||_{W^{1,n/2s}}
    and ||b/d||_{L^{n/2s}}.
    """
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    if b is not None and not 0.5 < s < 1:
        raise ValueError("drift data need s in (1/2, 1)")
    if g is None and h is None:
        raise ValueError("give exterior data g or forcing h")
    if g is not None:
        Xg, Bg = sampling_grid(n, 3.0 * r, 400, seed + 1)
        outside = Xg[np.linalg.norm(Xg, axis=-1) > r]
        if np.any(g(outside) < 0):
            raise ValueError("exterior data must be nonnegative")
    dom = BallDomain(n, r)
    sol = []
    if g is not None:
        sol.append(solve_dirichlet_fractional(g, r, n, s, q))
    if h is not None:
        sol.append(solve_forced_fractional(h, r, n, s, q))
    u = sol[0] if len(sol) == 1 else sol[0].combine(1.0, sol[1], 1.0)
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((points, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    X = d * (0.999 * r * rng.random(points) ** (1.0 / n))[:, None]
    X = np.concatenate([X, _on_axis(np.linspace(0, 0.999 * r, 50), n)])
    vals = u(X)
    norms = {}
    p = n / (2.0 * s)
    if c is not None:
        norms["c_minus_Ln2s"] = lp_norm(negative_part(c), dom, p).value
    if b is not None:
        norms["b_W1_n2s"] = sobolev_w1p_norm(b, dom, p, QuadSpec(tol=1e-8)).value
        norms["b_over_d_Ln2s"] = drift_distance_norm(b, dom, p, QuadSpec(tol=1e-8)).value
    interior_min = float(np.min(vals))
    bmin = math.nan
    if g is not None:
        _, Bs = sampling_grid(n, r, 10, seed)
        bmin = float(np.min(g(Bs * 1.0000001)))
    holds = interior_min >= -tol
    return MPVerdict(norms, interior_min, bmin, 0.0, bool(holds),
                     notes=f"max sampled u = {float(np.max(vals)):.6g}")


# ---------------------------------------------------------------------------
# falsification corpus
# ---------------------------------------------------------------------------

@dataclass
class Family:
    name: str
    theorem: str
    build: Callable[[], tuple]
    kind: str  # "weak", "strong", "drift"
    m: float = 0.0


def _radial(profile, d1, d2, n, name, **kw):
    return ScalarField.radial_field(profile, n, d1=d1, d2=d2, name=name, **kw)


def _poly_u(a, n):
    """1 + a|x|^2."""
    return _radial(lambda r: 1 + a * r * r, lambda r: 2 * a * r, lambda r: 2 * a + 0 * r,
                   n, f"1+{a:g}|x|^2")


def _exp_u(n):
    return _radial(lambda r: np.exp(r * r), lambda r: 2 * r * np.exp(r * r),
                   lambda r: (2 + 4 * r * r) * np.exp(r * r), n, "exp(|x|^2)")


def _sinc(k, sign, n=3):
    """sign * sin(k rho) / rho in R^3, an eigenfunction: Delta = -k^2."""
    def prof(r):
        r = np.asarray(r, dtype=float)
        return sign * np.where(r > 0, np.sin(k * r) / np.where(r > 0, r, 1), k)

    def d1(r):
        return sign * (k * r * np.cos(k * r) - np.sin(k * r)) / r ** 2

    def d2(r):
        return sign * (-k * k * r * r * np.sin(k * r) - 2 * k * r * np.cos(k * r)
                       + 2 * np.sin(k * r)) / r ** 3

    u = ScalarField.radial_field(prof, n, d1=d1, d2=d2, name=f"{'-' if sign < 0 else ''}sin({k:g}r)/r")
    u = u.replace(laplacian=lambda x: -k * k * u(x))
    return u, constant_field(-k * k, n)


def _sinh(lam, m, n=3):
    """m sinh(k rho) / (rho sinh k), k = sqrt(lam): Delta u = lam u."""
    k = math.sqrt(lam)
    sk = math.sinh(k)

    def prof(r):
        r = np.asarray(r, dtype=float)
        return m * np.where(r > 0, np.sinh(k * r) / np.where(r > 0, r, 1), k) / sk

    u = ScalarField.radial_field(prof, n, name=f"sinh[{lam:g}]")
    u = u.replace(laplacian=lambda x: lam * u(x))
    return u, constant_field(lam, n)


def _nonradial_exp(n=3):
    u = ScalarField(func=lambda x: np.exp(x[..., 0]), n=n, laplacian=lambda x: np.exp(x[..., 0]),
                    gradient=lambda x: np.exp(x[..., 0])[..., None] * np.eye(n)[0], name="exp(x1)")
    return u


def _affine(n=3):
    return ScalarField(func=lambda x: 2 + x[..., 0], n=n, laplacian=lambda x: 0 * x[..., 0],
                       gradient=lambda x: np.broadcast_to(np.eye(n)[0], x.shape), name="2+x1")


def _drift_u(t, n=3, m=0.0):
    """x1 + t|x|^2 + 1 - t + m: boundary values 1 + x1 + m >= m."""
    def func(x):
        return x[..., 0] + t * np.sum(x * x, -1) + 1 - t + m

    def grad(x):
        return np.eye(n)[0] + 2 * t * x

    return ScalarField(func=func, n=n, gradient=grad, laplacian=lambda x: 2 * n * t + 0 * x[..., 0],
                       name=f"x1+{t:g}|x|^2+{1 - t + m:g}")


def _power_u(gam, beta, n=3):
    """|x|^gam - beta: the radial drift is (gam + n - 2)/|x|, never in L^n."""
    return _radial(lambda r: r ** gam - beta, lambda r: gam * r ** (gam - 1),
                   lambda r: gam * (gam - 1) * r ** (gam - 2.0), n, f"|x|^{gam:g}-{beta:g}")


def falsification_corpus() -> list[Family]:
    fams = []

    def zero(name, ub, theorem="1"):
        def build():
            u = ub()
            return u, manufactured_zero_order(u)
        fams.append(Family(name, theorem, build, "weak"))

    zero("poly a=1 n=3", lambda: _poly_u(1.0, 3))
    zero("poly a=5 n=3", lambda: _poly_u(5.0, 3))
    zero("poly a=1 n=4", lambda: _poly_u(1.0, 4))
    zero("exp n=3", lambda: _exp_u(3))
    zero("exp n=5", lambda: _exp_u(5))
    zero("2-|x|^2 n=3", lambda: _poly_u(-0.5, 3))
    zero("exp(x1) n=3", lambda: _nonradial_exp(3))
    zero("2+x1 n=3", lambda: _affine(3))
    for k, sign in ((1.0, 1), (2.0, 1), (4.0, -1), (5.5, -1)):
        fams.append(Family(f"eigen {'-' if sign < 0 else ''}sin({k:g}r)/r", "1",
                           (lambda k=k, sign=sign: _sinc(k, sign)), "weak"))
    for eps, a in ((0.1, 1.0), (0.01, 2.0), (1e-3, 0.5)):
        p = CounterexampleParams(3, a, eps)
        fams.append(Family(f"counterexample eps={eps:g} alpha={a:g}", "1",
                           (lambda p=p: (counterexample_u(p), counterexample_c(p))), "weak"))
    for lam in (0.6, 3.0):
        fams.append(Family(f"sinh lambda={lam:g}", "3", (lambda lam=lam: _sinh(lam, 1.0)),
                           "strong", m=1.0))
    fams.append(Family("sin(1r)/r strong", "3", lambda: _sinc(1.0, 1), "strong", m=math.sin(1.0)))

    def drift(name, ub, theorem="4", m=0.0):
        def build():
            u = ub()
            try:
                return u, manufactured_drift(u)
            except DriftAdmissibilityError as exc:
                b = manufactured_drift(u, check=False)
                b.meta["admissibility"] = exc.report
                return u, b
        fams.append(Family(name, theorem, build, "drift", m=m))

    for t in (0.1, 0.25, 0.4):
        drift(f"drift t={t:g}", lambda t=t: _drift_u(t))
    drift("drift t=0.2 n=4", lambda: _drift_u(0.2, 4))
    drift("drift strong t=0.2 m=0.5", lambda: _drift_u(0.2, 3, 0.5), "5", m=0.5)
    drift("radial |x|^2-0.5", lambda: _power_u(2.0, 0.5))
    drift("radial |x|^1.5-0.3", lambda: _power_u(1.5, 0.3))
    drift("radial exp(|x|^2)", lambda: _exp_u(3))
    return fams


def run_falsification(families: Optional[list[Family]] = None) -> dict:
    """Evaluate every family; a falsification is an admissible instance whose conclusion fails."""
    families = families or falsification_corpus()
    rows = []
    empirical = {}
    for fam in families:
        u, coef = fam.build()
        dom = BallDomain(u.n, 1.0)
        if fam.kind == "strong":
            v = strong_mp_bound(u, coef, fam.m, p=float(u.n))
        else:
            v = check_weak_mp(u, coef, dom, m=fam.m)
        falsified = v.hypothesis_ok and not v.conclusion_holds
        if not v.conclusion_holds:
            for k, val in v.hypothesis_norms.items():
                empirical[k] = min(empirical.get(k, math.inf), val)
        rows.append({"family": fam.name, "theorem": fam.theorem, "n": u.n,
                     "status": v.status, "conclusion_holds": v.conclusion_holds,
                     "falsified": falsified, "verdict": v.to_dict()})
    return {"rows": rows, "falsifications": sum(r["falsified"] for r in rows),
            "empirical_failure_norms": empirical,
            "thresholds": {n: recorded_thresholds(n) for n in sorted({r["n"] for r in rows})}}
