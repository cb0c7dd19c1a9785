"""The strong maximum principle breaks at the critical exponent p = n/2.

u_eps = (-ln(eps|x|))^-alpha solves -Delta u + c_eps u = 0 in the unit ball
with c_eps >= 0, is positive on the sphere and vanishes at the origin.  The
L^{n/2} norm of c_eps goes to zero with eps, so no smallness of that norm
can buy a positive lower bound.  The decay is only logarithmic, as the
table shows.
"""
import math

import numpy as np

from fracball import BallDomain
from fracball.mplab import (CounterexampleParams, check_weak_mp, counterexample_c,
                            counterexample_residuals, counterexample_u, critical_sweep,
                            recorded_thresholds, strong_mp_bound)

eps_list = [1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8]
rows = critical_sweep(3, 1.0, eps_list)

print(f"{'eps':>8} {'||c||_3/2':>12} {'u(0)':>6} {'u on |x|=1':>11} {'residual':>10}")
for r in rows:
    print(f"{r.params['eps']:8.0e} {r.norms['norm_c_Lnhalf']:12.6f} {r.values['u_at_origin']:6.1f} "
          f"{r.values['boundary_min']:11.6f} {r.residuals['residual_max']:10.1e}")

# for alpha = 1, ||c||^{3/2} ~ 8 pi ln(1/eps)^{-1/2}: the norm only drops like ln(1/eps)^{-1/3}
norms = np.array([r.norms["norm_c_Lnhalf"] for r in rows])
L = -np.log(eps_list)
print("\nnorm * ln(1/eps)^(1/3):", np.round(norms * L ** (1 / 3), 4),
      f"-> {(8 * math.pi) ** (2 / 3):.4f}")

thr = recorded_thresholds(3)["zero_order"]
print(f"\nenergy threshold 1/S_3 = {thr:.4f}; every row is below it and yet u(0) = 0.")

p = CounterexampleParams(3, 1.0, 1e-4)
u, c = counterexample_u(p), counterexample_c(p)
weak = check_weak_mp(u, c, BallDomain(3, 1.0))
print(f"weak principle: status {weak.status}, min u on the grid {weak.interior_min}")
strong = strong_mp_bound(u, c, m=1 / -math.log(1e-4), p=1.5)
print(f"strong principle at p = 3/2: {strong.status}; {strong.notes}")

res = counterexample_residuals(CounterexampleParams(4, 2.0, 0.01))
print(f"\nn=4, alpha=2: closed-form residual {res['residual_closed']:.1e}, "
      f"finite-difference residual {res['residual_fd']:.1e}")
