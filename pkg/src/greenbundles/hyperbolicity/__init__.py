"""Transversal reduction, quasi-hyperbolicity and the hyperbolicity deciders."""
from .cocycle import (
    CocycleReport,
    HyperbolicSplitting,
    SampledCocycle,
    exponential_fit,
    quasi_hyperbolicity_check,
    sacker_sell_dims,
)
from .theorems import (
    TheoremAResult,
    TheoremCResult,
    decide_theorem_A,
    decide_theorem_C,
    graph_transform_period_map,
    graph_transform_splitting,
)
from .transversal import TransversalAction, build_transversal_action

__all__ = [
    "CocycleReport", "HyperbolicSplitting", "SampledCocycle", "TheoremAResult", "TheoremCResult",
    "TransversalAction", "build_transversal_action", "decide_theorem_A", "decide_theorem_C",
    "exponential_fit", "graph_transform_period_map", "graph_transform_splitting",
    "quasi_hyperbolicity_check", "sacker_sell_dims",
]
