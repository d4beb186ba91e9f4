"""Multiobjective steepest descent on Riemannian manifolds.

The package couples a descent engine (minimum-norm-point directions, exact
or sigma-approximate, with Armijo or general validated step sizes) with a
verification harness that re-checks, on recorded traces, every inequality
the method's convergence theory promises.
"""

from .directions import (
    DirectionResult,
    alpha,
    brute_force_alpha_star,
    solve_exact,
    solve_sigma_approx,
)
from .engine import IterateRecord, RunConfig, StepSizeRule, Termination, Trace, run
from .errors import (
    ConfigError,
    ContractViolation,
    EvaluationError,
    LineSearchError,
    ModescError,
    OutOfRangeError,
    StepRuleViolation,
    UnsupportedProblem,
)
from .harness import (
    CheckReport,
    KLEstimate,
    MeritOracle,
    check_armijo_lower_bound,
    check_linear_rate,
    check_monotone,
    check_movement,
    check_phi_descent,
    check_qc_distance_inequality,
    check_quasi_fejer,
    check_step_bound,
    check_sublevel_bounded,
    check_sufficient_decrease,
    check_summability,
    estimate_kl,
    hbar,
    rate_constants,
)
from .manifolds import (
    Euclidean,
    Hyperboloid,
    Manifold,
    ManifoldPoint,
    Sphere,
    SPDMatrices,
    TangentVector,
    manifold_from_config,
)
from .objectives import VectorObjective, is_pareto_critical, leq, lt
from .problems import ProblemSpec, get_problem, shipped_problems

__version__ = "0.1.0"
