"""Discrete optimal transport solvers and the economic models that reduce to them."""
from .core import (
    DiscreteMeasure,
    InfeasibleInputError,
    NonConvergenceError,
    OtError,
    Potentials,
    SurplusMatrix,
    ToleranceConfig,
    TransportPlan,
    UnbalancedMassError,
    duality_gap,
    validate_problem,
)
from .entropic import EntropicConfig, ipfp_solve
from .otexact import OtSolution, solve_exact, solve_with_unmatched

__all__ = [
    "DiscreteMeasure",
    "EntropicConfig",
    "InfeasibleInputError",
    "NonConvergenceError",
    "OtError",
    "OtSolution",
    "Potentials",
    "SurplusMatrix",
    "ToleranceConfig",
    "TransportPlan",
    "UnbalancedMassError",
    "duality_gap",
    "ipfp_solve",
    "solve_exact",
    "solve_with_unmatched",
    "validate_problem",
]
