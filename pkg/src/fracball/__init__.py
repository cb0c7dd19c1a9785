"""Fractional Laplacian on a ball: kernels, representation-formula solvers,
principal-value evaluation and maximum-principle experiments."""
from .domain import (BallDomain, FracOrder, ScalarField, VectorField, constant_field,
                     distance_to_boundary, negative_part, positive_part)
from .quadrature import (QuadResult, QuadSpec, QuadratureError, integrate_ball,
                         integrate_exterior, integrate_interval)
from .norms import drift_distance_norm, lp_norm, sobolev_w1p_norm, tail_weighted_norm
from .kernels import (KernelConstants, KernelSingularityError, fundamental_solution,
                      greens_closed, greens_definition, incomplete_integral, kernel_constants,
                      poisson_kernel)
from .operator import (PVSpec, classical_laplacian, mollify, pv_fractional_laplacian,
                       standard_bump, truncate_min, weak_truncation_gap)
from .solvers import (solve_dirichlet_classical, solve_dirichlet_fractional,
                      solve_forced_fractional, solve_radial_poisson, tabulated,
                      torsion_constant)
from .mplab import (CounterexampleParams, ExperimentRecord, MPVerdict, check_weak_mp,
                    counterexample_c, counterexample_u, critical_sweep, fractional_mp_check,
                    manufactured_drift, manufactured_zero_order, strong_mp_bound)

__version__ = "0.1.0"
