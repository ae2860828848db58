"""Probabilistic flexibility-design toolkit.

Build sparse bipartite designs that fulfill nearly all random demand:
model a production system's mean capacities and their randomness, wire
supplies to demands by importance-weighted coin flips, evaluate the
fulfilled demand by exact maximum flow, audit the subset conditions the
guarantees rest on, and reproduce the Monte Carlo studies comparing
wiring methods.
"""
from .audit import (
    AuditConfig,
    AuditReport,
    cut_condition_audit,
    either_or_audit,
    expansion_audit_demand,
    expansion_audit_importance,
    neighbor_probability_check,
)
from .construct import (
    FULL,
    METHODS,
    TPC,
    UPC,
    WPC,
    ConstructionConfig,
    DesignGraph,
    ImportanceProfile,
    build_design,
    edge_probability,
    expected_edge_count,
    gamma_from_theory,
    importance_profile,
    method_profile,
    probability_matrix,
)
from .errors import (
    BoundViolationError,
    FlexdesignError,
    InvalidInputError,
    InvalidInstanceError,
    TooLargeError,
)
from .experiment import (
    ExperimentPlan,
    ExperimentRow,
    ExperimentTable,
    IsolationResult,
    OptimalityRow,
    OptimalityTable,
    emit_design_snapshot,
    emit_results,
    plan_system,
    read_results,
    run_experiment_suite,
    run_isolation_experiment,
    run_optimality_experiment,
    run_ratio_experiment,
)
from .flow import (
    CutResult,
    FlowResult,
    FulfillmentSolver,
    full_flex_value,
    fulfillment_ratio,
    max_fulfilled_demand,
    min_cut_bruteforce,
)
from .rng import derive_seed, make_rng
from .system import (
    AssumptionReport,
    DistributionSpec,
    ProductionSystem,
    Scenario,
    check_assumptions,
    make_pareto_instance,
    make_two_level_instance,
    make_uniform_instance,
    normalize,
    sample_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "AuditConfig",
    "AuditReport",
    "BoundViolationError",
    "ConstructionConfig",
    "CutResult",
    "DesignGraph",
    "DistributionSpec",
    "ExperimentPlan",
    "ExperimentRow",
    "ExperimentTable",
    "FlexdesignError",
    "FlowResult",
    "FULL",
    "FulfillmentSolver",
    "ImportanceProfile",
    "InvalidInputError",
    "InvalidInstanceError",
    "IsolationResult",
    "METHODS",
    "OptimalityRow",
    "OptimalityTable",
    "ProductionSystem",
    "Scenario",
    "TooLargeError",
    "TPC",
    "UPC",
    "WPC",
    "build_design",
    "check_assumptions",
    "cut_condition_audit",
    "derive_seed",
    "edge_probability",
    "either_or_audit",
    "emit_design_snapshot",
    "emit_results",
    "expansion_audit_demand",
    "expansion_audit_importance",
    "expected_edge_count",
    "full_flex_value",
    "fulfillment_ratio",
    "gamma_from_theory",
    "importance_profile",
    "make_pareto_instance",
    "make_rng",
    "make_two_level_instance",
    "make_uniform_instance",
    "max_fulfilled_demand",
    "method_profile",
    "min_cut_bruteforce",
    "neighbor_probability_check",
    "normalize",
    "plan_system",
    "probability_matrix",
    "read_results",
    "run_experiment_suite",
    "run_isolation_experiment",
    "run_optimality_experiment",
    "run_ratio_experiment",
    "sample_scenario",
]
