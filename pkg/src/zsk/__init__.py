"""Series quadrature on logarithmic node sequences, boundary-value series
for holomorphic functions, and exactly summable exponential lattice sums.
"""

from .boundary import (BlaschkeSpec, CircleFunction, DiskFunction, circle_mean,
                       holo_at_point_blaschke, holo_at_zero, holo_general,
                       holo_weighted_kernel)
from .explog import ExpLogTerm, explog_differentiate, explog_evaluate, psi, psi_lattice_sum
from .expr import EvalDomainError, Expression, ExpressionParseError, parse_expression
from .gzeta import (HomogeneousSummand, XiPsiPair, gzeta_difference_series,
                    gzeta_invariance_check, gzeta_quadrature,
                    neighbor_ratio_summand)
from .lattice import (CLOSED_FORM_IDS, LatticeSumResult, PhiParams,
                      closed_form_suite, lattice_sum_pair, lattice_sum_single, phi)
from .numerics import (CompensatedAccumulator, ToleranceConfig, comp_add,
                       euler_m_partial_sum, euler_m_tail_bound, gamma_ref,
                       periodic_trapezoid_integral, theta_ab, zeta_ref)
from .parallel import ReductionPlan
from .quadrature import (ModulusOfContinuity, NodeScheme, PeriodicFunction,
                         QuadratureResult, integral_cf_nodes,
                         integral_derivative_form, integral_lattice_nodes,
                         integral_logM, integral_rational_base,
                         integral_transformed, node_stream, tail_bound)

__version__ = "0.1.0"
