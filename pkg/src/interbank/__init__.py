"""Interbank systemic-risk simulation and intervention workbench.

Generate exposure networks from marginals, shock them under threshold,
linear or hybrid contagion, compute entity and system risk indicators, lay
banks out by risk similarity, apply surgical interventions and quantify
risk relief against rescue cost.
"""

from .network import (
    Bank,
    FinancialNetwork,
    ValidationReport,
    degree_adjacency,
    load_network,
    make_network,
    recompute_marginals,
    save_network,
    validate_network,
)
from .generator import (
    GeneratorConfig,
    InfeasibleMarginals,
    Marginals,
    generate_network,
    max_entropy_estimate,
    min_density_estimate,
    sample_marginals,
)
from .contagion import (
    PropagationResult,
    ShockSpec,
    apply_initial_shock,
    propagate,
    propagate_hybrid,
    propagate_linear,
    propagate_threshold,
    run_shock,
    settle_network,
)
from .metrics import RiskMatrix, SystemRisk, risk_matrix, systemic_indicators
from .layout import Layout, LayoutConfig, compute_layout
from .intervention import (
    Assessment,
    CutEdge,
    InterventionPlan,
    RemoveNode,
    compare_strategies,
    cut_edge,
    remove_node,
    run_scenario,
)
from .scenario import Scenario, load_scenario, save_scenario

__version__ = "0.1.0"

__all__ = [
    "Bank",
    "FinancialNetwork",
    "ValidationReport",
    "degree_adjacency",
    "load_network",
    "make_network",
    "recompute_marginals",
    "save_network",
    "validate_network",
    "GeneratorConfig",
    "InfeasibleMarginals",
    "Marginals",
    "generate_network",
    "max_entropy_estimate",
    "min_density_estimate",
    "sample_marginals",
    "PropagationResult",
    "ShockSpec",
    "apply_initial_shock",
    "propagate",
    "propagate_hybrid",
    "propagate_linear",
    "propagate_threshold",
    "run_shock",
    "settle_network",
    "RiskMatrix",
    "SystemRisk",
    "risk_matrix",
    "systemic_indicators",
    "Layout",
    "LayoutConfig",
    "compute_layout",
    "Assessment",
    "CutEdge",
    "InterventionPlan",
    "RemoveNode",
    "compare_strategies",
    "cut_edge",
    "remove_node",
    "run_scenario",
    "Scenario",
    "load_scenario",
    "save_scenario",
]
