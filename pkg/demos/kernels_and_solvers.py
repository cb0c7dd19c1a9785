"""Kernels, representation formulas and the principal-value operator on B_1 in R^3.

Builds solutions of the fractional Dirichlet and forced problems from the
Poisson kernel and the Green function, then applies the operator to them to
see the data come back.
"""
import math

import numpy as np

from fracball import BallDomain, QuadSpec, ScalarField, constant_field
from fracball.kernels import (fundamental_solution, greens_closed, greens_definition,
                              poisson_kernel)
from fracball.operator import pv_fractional_laplacian
from fracball.quadrature import integrate_exterior
from fracball.solvers import (solve_dirichlet_fractional, solve_forced_fractional,
                              torsion_constant)

n, s = 3, 0.75
dom = BallDomain(n, 1.0)

print("Poisson kernel mass (should be 1):")
for x in (np.zeros(3), np.array([0.5, 0.0, 0.0]), np.array([0.0, 0.9, 0.0])):
    f = ScalarField(func=lambda y, x=x: poisson_kernel(x, y, 1.0, n, s), n=n, decay=n + 2 * s)
    res = integrate_exterior(f, dom, QuadSpec(tol=1e-8, endpoint_sing=(0.0, s)),
                             axis=x if x.any() else None)
    print(f"  x = {x}: {res.value:.10f}")

print("\nGreen function, closed form vs Phi minus its Poisson extension:")
rng = np.random.default_rng(3)
for _ in range(4):
    x, z = rng.uniform(-0.45, 0.45, (2, 3))
    a = greens_closed(x, z, 1.0, n, s).value
    b = greens_definition(x, z, 1.0, n, s)
    print(f"  G = {a:.8f}  {b:.8f}   Phi = {fundamental_solution(x, z, n, s):.8f}")

print("\nforced problem with h = 1 against the torsion function:")
u = solve_forced_fractional(constant_field(1.0, n), 1.0, n, s)
a = np.array([0.0, 0.5, 0.9])
print("  solver :", np.round(u.profile(a), 10))
print("  closed :", np.round(torsion_constant(n, s) * (1 - a * a) ** s, 10))

g = ScalarField.radial_field(lambda r: 1 / (1 + r * r), n, decay=2.0, name="1/(1+|x|^2)")
ug = solve_dirichlet_fractional(g, 1.0, n, s)
print("\nDirichlet data 1/(1+|x|^2): u and the operator applied to it")
for r in (0.0, 0.5, 0.8):
    x = np.array([r, 0.0, 0.0])
    val = pv_fractional_laplacian(ug, x, s, q=QuadSpec(tol=1e-6))
    print(f"  |x| = {r}: u = {ug.profile(np.array([r]))[0]:.8f}, (-Delta)^s u = {val:.1e}")

bub = ScalarField.radial_field(lambda r: (1 + r * r) ** (-(n - 2 * s) / 2), n, decay=n - 2 * s)
K = 4 ** s * math.gamma(n / 2 + s) / math.gamma(n / 2 - s)
x = np.array([0.3, 0.0, 0.0])
print(f"\nbubble at |x| = 0.3: {pv_fractional_laplacian(bub, x, s):.10f} "
      f"vs {K * (1 + 0.09) ** (-(n + 2 * s) / 2):.10f}")
