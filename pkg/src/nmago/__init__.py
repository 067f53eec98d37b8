"""Radial boundary blow-up machinery for (N-1)-Monge-Ampere equations.

Solves, certifies, and enumerates radial (N-1)-convex profiles that blow up
on the boundary of the unit ball, for weights that may be singular there.
"""

from .errors import (CertificationError, ConfigError, ConvexityLossError,
                     DomainError, EnvelopeMismatchError, FUndefinedError,
                     NmagoError)
from .scalarfn import (Affine, Constant, Domain, Exponential, Power,
                       PowerSingular, ScalarFnSpec, Tabulated,
                       spec_from_json, spec_from_string)
from .problem_model import (AssumptionReport, ProblemSpec, ResidualReport,
                            eval_pde_residual, eval_radial_operator,
                            full_hessian_oracle, validate_assumptions)
from .keller_osserman import (Divergence, GInverse, GTable, KOProfile,
                              build_G, build_g, build_profile, classify_ko,
                              estimate_H_inf, eval_F, eval_H)
from .ivp_solver import (LocalIntervalPlan, PicardStats, RadialSolution,
                         Status, continue_ode, picard_solve_local,
                         plan_local_interval, solve_ivp, solution_sidecar,
                         write_solution_csv)
from .bound_builder import (Amplify, BlowupCandidate, BoundFamily, PhiPair,
                            ShrinkScale, WeightClass, WeightClassVerdict,
                            build_P_phi, build_w, certification_radii,
                            eval_inequality_residual, find_k_bounds,
                            fit_envelope, transform_weight,
                            validate_weight_class)
from .multiplicity import (ComparisonReport, ConvexityReport, FamilyResult,
                           check_comparison, manufacture_weight, solve_family,
                           verify_convexity)

__version__ = "0.1.0"
