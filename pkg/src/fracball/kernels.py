"""Closed-form kernels of the fractional Laplacian on a ball.

Normalizations (defaults, all overridable through :class:`KernelConstants`)::

    C_op  = s 4^s Gamma(n/2 + s) / (pi^{n/2} Gamma(1 - s))
    c_P   = Gamma(n/2) sin(pi s) / pi^{n/2 + 1}
    c_Phi = Gamma(n/2 - s) / (4^s pi^{n/2} Gamma(s))
    kappa = Gamma(n/2) / (4^s pi^{n/2} Gamma(s)^2)

so that (-Delta)^s Phi = delta, the Poisson kernel has unit mass, and
kappa * B(s, n/2 - s) = c_Phi (the Green function approaches Phi at the
diagonal).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import special

from .domain import BallDomain, ScalarField
from .quadrature import QuadResult, QuadSpec, integrate_exterior, integrate_interval

__all__ = [
    "KernelConstants",
    "kernel_constants",
    "GreenEval",
    "KernelSingularityError",
    "fundamental_solution",
    "poisson_kernel",
    "r0",
    "incomplete_integral",
    "incomplete_integral_quad",
    "green_function",
    "greens_closed",
    "greens_definition",
]

COINCIDENCE = 1e-8


class KernelSingularityError(ValueError):
    """Kernel evaluated on (or numerically at) its diagonal."""


@dataclass(frozen=True)
class KernelConstants:
    n: int
    s: float
    C_op: float
    c_P: float
    c_Phi: float
    kappa: float


@lru_cache(maxsize=None)
def kernel_constants(n: int, s: float) -> KernelConstants:
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    h = n / 2.0
    C_op = s * 4.0 ** s * math.gamma(h + s) / (math.pi ** h * math.gamma(1.0 - s))
    c_P = math.gamma(h) * math.sin(math.pi * s) / math.pi ** (h + 1.0)
    if n == 2 * s:
        c_Phi = math.nan
    else:
        c_Phi = math.gamma(h - s) / (4.0 ** s * math.pi ** h * math.gamma(s))
    kappa = math.gamma(h) / (4.0 ** s * math.pi ** h * math.gamma(s) ** 2)
    return KernelConstants(n, s, C_op, c_P, c_Phi, kappa)


@dataclass(frozen=True)
class GreenEval:
    value: float
    r0: float
    incomplete_integral: float


def _pt(x):
    return np.asarray(x, dtype=float)


def _check_order(n, s):
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if n == 2 * s:
        raise ValueError("n = 2s is excluded")


def fundamental_solution(x, z, n: int, s: float, *, r: float = 1.0,
                         consts: Optional[KernelConstants] = None):
    """c_Phi |x - z|^{2s - n}; vectorized over leading axes."""
    _check_order(n, s)
    k = consts or kernel_constants(n, s)
    d = np.linalg.norm(_pt(x) - _pt(z), axis=-1)
    if np.any(d < COINCIDENCE * r):
        raise KernelSingularityError("fundamental solution evaluated at coincident points")
    out = k.c_Phi * d ** (2.0 * s - n)
    return float(out) if np.ndim(out) == 0 else out


def poisson_kernel(x, y, r: float, n: int, s: float, *,
                   consts: Optional[KernelConstants] = None):
    """c_P ((r^2 - |x|^2) / (|y|^2 - r^2))^s |x - y|^{-n} for |x| < r < |y|."""
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    k = consts or kernel_constants(n, s)
    x, y = _pt(x), _pt(y)
    ax = np.sum(x * x, axis=-1)
    ay = np.sum(y * y, axis=-1)
    if np.any(ax >= r * r):
        raise ValueError("poisson_kernel: x must lie in the open ball")
    if np.any(ay <= r * r):
        raise ValueError("poisson_kernel: y must lie outside the closed ball")
    d = np.linalg.norm(x - y, axis=-1)
    out = k.c_P * ((r * r - ax) / (ay - r * r)) ** s * d ** (-float(n))
    return float(out) if np.ndim(out) == 0 else out


def r0(x, z, r: float = 1.0):
    """(r^2 - |x|^2)(r^2 - |z|^2) / (r^2 |x - z|^2); inf where x = z."""
    x, z = _pt(x), _pt(z)
    num = (r * r - np.sum(x * x, axis=-1)) * (r * r - np.sum(z * z, axis=-1))
    d2 = np.sum((x - z) ** 2, axis=-1) * (r * r)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(d2 > 0, num / np.where(d2 > 0, d2, 1.0), np.inf)
    return float(out) if np.ndim(out) == 0 else out


def _complete(n, s):
    return special.beta(s, n / 2.0 - s)


def incomplete_integral_quad(R: float, n: int, s: float,
                             q: Optional[QuadSpec] = None) -> QuadResult:
    """int_0^R t^{s-1} (t + 1)^{-n/2} dt by adaptive quadrature."""
    q = (q or QuadSpec()).replace(endpoint_sing=(1.0 - s, 0.0))
    f = lambda t: t ** (s - 1.0) * (t + 1.0) ** (-n / 2.0)
    if R <= 1.0 or math.isinf(R) and n / 2.0 <= s:
        return integrate_interval(f, 0.0, R, q)
    a = integrate_interval(f, 0.0, 1.0, q.replace(tol=q.tol / 2))
    b = integrate_interval(f, 1.0, R, q.replace(tol=q.tol / 2, endpoint_sing=None))
    return QuadResult(a.value + b.value, a.err_estimate + b.err_estimate,
                      a.evaluations + b.evaluations, a.converged and b.converged)


def incomplete_integral(R, n: int, s: float, q: Optional[QuadSpec] = None):
    """int_0^R t^{s-1} (t + 1)^{-n/2} dt.

    For n > 2s this is B(s, n/2 - s) times the regularized incomplete beta
    function at R / (1 + R); otherwise the integral is done by quadrature
    (and diverges as R -> inf).
    """
    R = np.asarray(R, dtype=float)
    if np.any(R < 0):
        raise ValueError("R must be non-negative")
    if n / 2.0 > s:
        u = np.where(np.isinf(R), 1.0, R / (1.0 + np.where(np.isinf(R), 0.0, R)))
        out = _complete(n, s) * special.betainc(s, n / 2.0 - s, u)
        return float(out) if out.ndim == 0 else out
    vals = [incomplete_integral_quad(float(v), n, s, q).require("incomplete integral").value
            for v in R.ravel()]
    out = np.array(vals).reshape(R.shape)
    return float(out) if out.ndim == 0 else out


def green_function(x, z, r: float, n: int, s: float, *,
                   consts: Optional[KernelConstants] = None):
    """Vectorized concise Green function; no diagonal check."""
    k = consts or kernel_constants(n, s)
    x, z = _pt(x), _pt(z)
    d = np.linalg.norm(x - z, axis=-1)
    R = r0(x, z, r)
    out = k.kappa * d ** (2.0 * s - n) * incomplete_integral(R, n, s)
    return out


def _interior_pair(x, z, r):
    x, z = _pt(x), _pt(z)
    if np.dot(x, x) >= r * r or np.dot(z, z) >= r * r:
        raise ValueError("Green function needs points in the open ball")
    if np.linalg.norm(x - z) < COINCIDENCE * r:
        raise KernelSingularityError("Green function evaluated at coincident points")
    return x, z


def greens_closed(x, z, r: float, n: int, s: float, q: Optional[QuadSpec] = None, *,
                  consts: Optional[KernelConstants] = None) -> GreenEval:
    """kappa |z - x|^{2s-n} int_0^{r0(x,z)} t^{s-1} (t+1)^{-n/2} dt."""
    _check_order(n, s)
    x, z = _interior_pair(x, z, r)
    k = consts or kernel_constants(n, s)
    R = r0(x, z, r)
    I = incomplete_integral(R, n, s, q)
    d = np.linalg.norm(x - z)
    return GreenEval(k.kappa * d ** (2.0 * s - n) * I, R, I)


def greens_definition(x, z, r: float, n: int, s: float, q: Optional[QuadSpec] = None, *,
                      consts: Optional[KernelConstants] = None,
                      full_output: bool = False):
    """Phi(x - z) minus the exterior integral of Phi(z - y) P_r(x, y).

    The (|y|^2 - r^2)^{-s} boundary layer is declared to the exterior
    integrator as an endpoint singularity of exponent s.
    """
    _check_order(n, s)
    x, z = _interior_pair(x, z, r)
    k = consts or kernel_constants(n, s)
    q = (q or QuadSpec(tol=1e-9, sphere_order=48)).replace(endpoint_sing=(0.0, s))

    def integrand(y):
        ay = np.sum(y * y, axis=-1)
        P = k.c_P * ((r * r - x @ x) / (ay - r * r)) ** s * np.linalg.norm(x - y, axis=-1) ** (-float(n))
        return k.c_Phi * np.linalg.norm(z - y, axis=-1) ** (2.0 * s - n) * P

    f = ScalarField(func=integrand, n=n, decay=2.0 * n, name="Phi*P")
    axis = x if np.linalg.norm(x) > 0 else None
    res = integrate_exterior(f, BallDomain(n, r), q, axis=axis).require("Green correction integral")
    val = fundamental_solution(x, z, n, s, r=r, consts=k) - res.value
    if full_output:
        return val, res
    return val
