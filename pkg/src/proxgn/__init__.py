"""Proximal Gauss-Newton solver for penalized nonlinear least squares.

The outer iteration x+ = prox_J^{H(x)}(x - F'(x)^dag F(x)) combines a
Gauss-Newton step with a proximity operator in the metric
H(x) = F'(x)^T F'(x).  The :mod:`radius` module quantifies the local
convergence ball under generalized Lipschitz assumptions; :mod:`problems`
ships box-constrained benchmark fits and :mod:`cli` a benchmark runner.
"""
from .linalg import (
    DEFAULT_RANK_TOLERANCE,
    PinvResult,
    RankDeficientError,
    ShapeMismatchError,
    condition_data,
    operator_norm,
    pseudoinverse,
    verify_penrose,
)
from .prox import (
    Box,
    BoxIndicator,
    CustomProx,
    DimensionMismatchError,
    InnerConfig,
    Penalty,
    ProxOutcome,
    StepTooLargeError,
    ZeroPenalty,
    is_firmly_nonexpansive,
    normal_cone_gap,
    project_box,
    prox_metric,
    prox_via_pullback,
)
from .radius import (
    ConditionViolatedError,
    LipschitzAverage,
    LipschitzMode,
    OutOfDomainError,
    ProblemConstants,
    RadiusSummary,
    check_small_residual,
    contraction_constants,
    convergence_radius,
    gamma_c,
    gamma_lambda,
    q_factor,
    r_bar_closed_form,
    r_bar_numeric,
    sup_radius,
)
from .solver import (
    InsufficientDataError,
    InvalidPointError,
    IterationRecord,
    JacobianRankDeficientError,
    Problem,
    SolveReport,
    SolveStatus,
    SolverConfig,
    estimate_rate,
    gauss_newton_point,
    prox_gn_step,
    solve,
    stationarity_residual,
)
from .problems import (
    BenchmarkCase,
    CaseSource,
    EmptyBoxError,
    ExternalDefinitionUnavailableError,
    UnknownProblemError,
    case_names,
    finite_diff_jacobian,
    get_case,
    shrink_box,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoxIndicator",
    "BenchmarkCase",
    "CaseSource",
    "ConditionViolatedError",
    "CustomProx",
    "DEFAULT_RANK_TOLERANCE",
    "DimensionMismatchError",
    "EmptyBoxError",
    "ExternalDefinitionUnavailableError",
    "InnerConfig",
    "InsufficientDataError",
    "InvalidPointError",
    "IterationRecord",
    "JacobianRankDeficientError",
    "LipschitzAverage",
    "LipschitzMode",
    "OutOfDomainError",
    "Penalty",
    "PinvResult",
    "Problem",
    "ProblemConstants",
    "ProxOutcome",
    "RadiusSummary",
    "RankDeficientError",
    "ShapeMismatchError",
    "SolveReport",
    "SolveStatus",
    "SolverConfig",
    "StepTooLargeError",
    "UnknownProblemError",
    "ZeroPenalty",
    "case_names",
    "check_small_residual",
    "condition_data",
    "contraction_constants",
    "convergence_radius",
    "estimate_rate",
    "finite_diff_jacobian",
    "gamma_c",
    "gamma_lambda",
    "gauss_newton_point",
    "is_firmly_nonexpansive",
    "get_case",
    "normal_cone_gap",
    "operator_norm",
    "project_box",
    "prox_gn_step",
    "prox_metric",
    "prox_via_pullback",
    "pseudoinverse",
    "q_factor",
    "r_bar_closed_form",
    "r_bar_numeric",
    "shrink_box",
    "solve",
    "stationarity_residual",
    "sup_radius",
    "verify_penrose",
]
