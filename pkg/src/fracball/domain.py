"""Balls, fractional orders and pointwise-evaluatable fields."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "BallDomain",
    "FracOrder",
    "ScalarField",
    "VectorField",
    "distance_to_boundary",
    "positive_part",
    "negative_part",
    "constant_field",
    "random_rotation",
    "check_radial_invariance",
]


@dataclass(frozen=True)
class BallDomain:
    n: int
    r: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n}")
        if not self.r > 0:
            raise ValueError(f"radius must be positive, got {self.r}")

    def contains(self, x, closed: bool = True) -> np.ndarray:
        rho = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
        return rho <= self.r if closed else rho < self.r

    def distance_to_boundary(self, x):
        return distance_to_boundary(x, self)


def distance_to_boundary(x, dom: BallDomain):
    """d(x) = r - |x| on the closed ball."""
    x = np.asarray(x, dtype=float)
    rho = np.linalg.norm(x, axis=-1)
    if np.any(rho > dom.r * (1 + 1e-14)):
        raise ValueError("point outside the closed ball")
    d = np.maximum(dom.r - rho, 0.0)
    return float(d) if d.ndim == 0 else d


@dataclass(frozen=True)
class FracOrder:
    s: float

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"fractional order must lie in (0, 1), got {self.s}")

    @property
    def two_s(self) -> float:
        return 2.0 * self.s

    def riesz_exponent(self, n: int) -> float:
        """n - 2s, the decay exponent of the fundamental solution."""
        return n - 2.0 * self.s

    def critical_exponent(self, n: int) -> float:
        """n / (2s)."""
        return n / (2.0 * self.s)

    @property
    def dual_exponent(self) -> float:
        """1 / (1 - s)."""
        return 1.0 / (1.0 - self.s)

    def require_drift_range(self):
        if not 0.5 < self.s < 1.0:
            raise ValueError(f"drift results need s in (1/2, 1), got {self.s}")
        return self


def _norms(x):
    return np.linalg.norm(x, axis=-1)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A real function on R^n, vectorized over points of shape ``(..., n)``.

    ``decay`` is the exponent k in |f(x)| = O(|x|^-k) at infinity (inf for
    compact support, negative for growth).  ``kinks`` lists radii where a
    radial profile is not smooth.  ``domain_radius`` restricts where the
    evaluator may be called at all.
    """

    func: Callable[[np.ndarray], np.ndarray]
    n: int
    radial: bool = False
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support: str = "whole"
    support_radius: float = math.inf
    decay: float = 0.0
    gradient: Optional[Callable] = None
    laplacian: Optional[Callable] = None
    log_profile: Optional[Callable] = None
    kinks: tuple = ()
    domain_radius: Optional[float] = None
    name: str = "field"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.support not in ("whole", "ball", "exterior"):
            raise ValueError(f"unknown support kind {self.support!r}")
        if self.radial and self.profile is None:
            raise ValueError("radial fields need a profile")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected points in R^{self.n}, got shape {x.shape}")
        if self.domain_radius is not None:
            if np.any(_norms(x) > self.domain_radius * (1 + 1e-12)):
                raise ValueError(f"{self.name}: evaluation outside B_{self.domain_radius}")
        out = self.func(x)
        return out

    @classmethod
    def radial_field(cls, profile, n: int, *, d1=None, d2=None, **kw) -> "ScalarField":
        """Build a radial field from its profile and optional radial derivatives."""
        def func(x):
            return profile(_norms(x))

        grad = lap = None
        if d1 is not None:
            def grad(x):
                rho = _norms(x)
                safe = np.where(rho > 0, rho, 1.0)
                fac = np.where(rho > 0, d1(safe) / safe, 0.0)
                return x * fac[..., None]

            if d2 is not None:
                def lap(x):
                    rho = _norms(x)
                    safe = np.where(rho > 0, rho, 1.0)
                    with np.errstate(divide="ignore", invalid="ignore"):
                        centre = n * d2(np.zeros_like(rho))
                    return np.where(rho > 0, d2(safe) + (n - 1) * d1(safe) / safe, centre)

        kw.setdefault("gradient", grad)
        kw.setdefault("laplacian", lap)
        return cls(func=func, n=n, radial=True, profile=profile, **kw)

    def replace(self, **kw) -> "ScalarField":
        return dataclasses.replace(self, **kw)

    def scaled(self, lam: float) -> "ScalarField":
        lam = float(lam)
        kw = dict(
            func=lambda x: lam * self.func(x),
            profile=None if self.profile is None else (lambda r: lam * self.profile(r)),
            gradient=None if self.gradient is None else (lambda x: lam * self.gradient(x)),
            laplacian=None if self.laplacian is None else (lambda x: lam * self.laplacian(x)),
            log_profile=None,
            name=f"{lam:g}*{self.name}",
        )
        if self.log_profile is not None and lam != 0:
            kw["log_profile"] = lambda t: math.log(abs(lam)) + self.log_profile(t)
        if lam == 0:
            kw.update(support="ball", support_radius=0.0, decay=math.inf)
        return dataclasses.replace(self, **kw)

    def combine(self, a: float, other: "ScalarField", b: float) -> "ScalarField":
        """a*self + b*other."""
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        radial = self.radial and other.radial
        prof = (lambda r: a * self.profile(r) + b * other.profile(r)) if radial else None
        grad = lap = None
        if self.gradient is not None and other.gradient is not None:
            grad = lambda x: a * self.gradient(x) + b * other.gradient(x)
        if self.laplacian is not None and other.laplacian is not None:
            lap = lambda x: a * self.laplacian(x) + b * other.laplacian(x)
        same_ball = self.support == other.support == "ball"
        kinks = set(self.kinks) | set(other.kinks)
        if not same_ball:
            # a compact support edge becomes an interior kink of the sum
            kinks |= {f.support_radius for f in (self, other) if f.support == "ball"}
        return ScalarField(
            func=lambda x: a * self.func(x) + b * other.func(x),
            n=self.n, radial=radial, profile=prof,
            support="ball" if same_ball else "whole",
            support_radius=max(self.support_radius, other.support_radius) if same_ball else math.inf,
            decay=min(self.decay, other.decay),
            gradient=grad, laplacian=lap,
            kinks=tuple(sorted(kinks)),
            name=f"{a:g}*{self.name}+{b:g}*{other.name}",
        )

    def _pointwise(self, op, name, support_keep=True) -> "ScalarField":
        prof = None if self.profile is None else (lambda r: op(self.profile(r)))
        return ScalarField(
            func=lambda x: op(self.func(x)), n=self.n, radial=self.radial, profile=prof,
            support=self.support if support_keep else "whole",
            support_radius=self.support_radius if support_keep else math.inf,
            decay=self.decay, kinks=self.kinks, domain_radius=self.domain_radius,
            name=name,
        )

    def positive_part(self) -> "ScalarField":
        return positive_part(self)

    def negative_part(self) -> "ScalarField":
        return negative_part(self)


def positive_part(c: ScalarField) -> ScalarField:
    """c+ = max(c, 0)."""
    return c._pointwise(lambda v: np.maximum(v, 0.0), f"{c.name}+")


def negative_part(c: ScalarField) -> ScalarField:
    """c- = -min(c, 0) >= 0, so that c = c+ - c-."""
    return c._pointwise(lambda v: -np.minimum(v, 0.0), f"{c.name}-")


def constant_field(value: float, n: int, name: Optional[str] = None) -> ScalarField:
    value = float(value)
    return ScalarField.radial_field(
        lambda r: np.full(np.shape(r), value), n,
        d1=lambda r: np.zeros(np.shape(r)), d2=lambda r: np.zeros(np.shape(r)),
        decay=math.inf if value == 0 else 0.0,
        support="ball" if value == 0 else "whole",
        support_radius=0.0 if value == 0 else math.inf,
        name=name or f"const({value:g})",
    )


@dataclass(frozen=True, eq=False)
class VectorField:
    """A vector field on the ball; ``jacobian(x)[..., i, j] = d b_i / d x_j``."""

    func: Callable[[np.ndarray], np.ndarray]
    n: int
    divergence: Optional[Callable] = None
    jacobian: Optional[Callable] = None
    name: str = "b"
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.n:
            raise ValueError(f"expected points in R^{self.n}, got shape {x.shape}")
        return self.func(x)

    def magnitude(self) -> ScalarField:
        return ScalarField(func=lambda x: np.linalg.norm(self.func(x), axis=-1), n=self.n,
                           name=f"|{self.name}|")

    def scaled(self, lam: float) -> "VectorField":
        return VectorField(
            func=lambda x: lam * self.func(x), n=self.n,
            divergence=None if self.divergence is None else (lambda x: lam * self.divergence(x)),
            jacobian=None if self.jacobian is None else (lambda x: lam * self.jacobian(x)),
            name=f"{lam:g}*{self.name}",
        )


def random_rotation(n: int, rng) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.diag(r))


def check_radial_invariance(f: ScalarField, rng, rotations: int = 10, points: int = 10,
                            radius: float = 1.0, rtol: float = 1e-12) -> float:
    """Largest relative change of ``f`` under random rotations of random points."""
    x = rng.standard_normal((points, f.n))
    x *= (radius * rng.random(points) ** (1.0 / f.n) / np.linalg.norm(x, axis=1))[:, None]
    base = np.asarray(f(x), dtype=float)
    worst = 0.0
    for _ in range(rotations):
        R = random_rotation(f.n, rng)
        moved = np.asarray(f(x @ R.T), dtype=float)
        scale = np.maximum(np.abs(base), 1e-300)
        worst = max(worst, float(np.max(np.abs(moved - base) / scale)))
    return worst
