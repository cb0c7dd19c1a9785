"""Maximum principles on manufactured pairs.

A manufactured pair fixes u and reads the coefficient off the equation
(c = Delta u / u, or a drift b along grad u), so -Delta u + c u = 0 holds
exactly.  The harness then compares hypothesis norms with the thresholds the
energy argument certifies and checks the conclusion on a sampling grid.
"""
import numpy as np

from fracball import ScalarField, VectorField, constant_field
from fracball.mplab import (_sinh, fractional_mp_check, recorded_thresholds, run_falsification,
                            strong_mp_bound)

print("thresholds (1/S_n for ||c^-||_{n/2}, S_n^{-1/2} for ||b||_n):")
for n in (3, 4, 5):
    t = recorded_thresholds(n)
    print(f"  n={n}: {t['zero_order']:.4f}  {t['drift']:.4f}")

print("\nquantitative strong principle, c = lambda constant, u = m on the sphere:")
for lam in (0.6, 3.0, 9.0):
    u, c = _sinh(lam, 1.0)
    v = strong_mp_bound(u, c, 1.0, p=3.0)
    print(f"  lambda={lam}: ||f||_inf = {v.hypothesis_norms['f_sup']:.6f}, "
          f"bound {v.quantitative_bound}, min u = {v.interior_min:.6f}, {v.status}")

out = run_falsification()
print(f"\nfalsification corpus: {len(out['rows'])} families, {out['falsifications']} falsifications")
for r in out["rows"]:
    if not r["conclusion_holds"]:
        print(f"  conclusion fails for {r['family']}: status {r['status']}")
print("  smallest norms seen with a failing conclusion:", out["empirical_failure_norms"])

print("\nfractional side, s = 0.75:")
v = fractional_mp_check(0.75, g=constant_field(0.5, 3))
print(f"  g = 0.5 outside: min u = {v.interior_min:.10f}")
h = ScalarField.radial_field(lambda r: np.exp(-4 * r * r), 3, decay=np.inf)
v = fractional_mp_check(0.75, h=h)
print(f"  h = exp(-4|x|^2) inside: min u = {v.interior_min:.3e}, holds {v.conclusion_holds}")
b = VectorField(func=lambda x: x * (1 - np.linalg.norm(x, axis=-1))[..., None], n=3)
v = fractional_mp_check(0.75, g=constant_field(1.0, 3), b=b)
print("  drift x(1-|x|):", {k: round(val, 6) for k, val in v.hypothesis_norms.items()})
