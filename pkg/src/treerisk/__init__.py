"""Multi-period convex and coherent risk measures on finite scenario trees.

The package models a finite filtered probability space as a scenario tree,
represents dual elements as bi-measures splitting into predictable and
optional increment parts, and evaluates risk measures through the pairing
of adapted processes against those dual elements. On top of the core sit
canonical instances (value at risk, tail conditional expectation, average
value at risk, entropic, worst case), a projection calculus with exact
adjointness, capital allocation with fairness certification, and
diagnostics for tail uniform integrability and continuity along
refinements.
"""

from .allocation import AllocationResult, FairnessCertificate, allocate, fairness_check
from .bimeasure import (
    BiMeasure,
    RawBiMeasure,
    as_raw,
    dual_projection,
    increment_vector,
    jordan,
    normalize_scenario,
    pairing,
    raw_pairing,
    stopping_time_measure,
    terminal_density_measure,
    terminal_increment,
    variation,
    variation_norm,
)
from .convexgeom import SimplexProgram, SimplexSolution, min_cost_combination
from .diagnostics import (
    AttainmentReport,
    AVaRFamily,
    DecompositionReport,
    LebesgueReport,
    RefinementSchedule,
    SpecFamily,
    UIReport,
    WorstCaseFamily,
    attainment_check,
    avar_crash_schedule,
    crash_sequence,
    decomposition_battery,
    lebesgue_probe,
    ui_modulus,
    worst_case_crash_schedule,
)
from .errors import UndefinedQuantityError, ValidationError
from .instances import (
    QuantileLevel,
    StoppedWorstCase,
    avar,
    avar_max_density,
    avar_spec,
    entropic,
    es_tce,
    stopped_worst_case,
    var_alpha,
    worst_case_spec,
)
from .process import (
    AdaptedProcess,
    RawProcess,
    StaticRV,
    optional_projection_raw,
    optional_projection_static,
    predictable_projection_raw,
    prob_sup_exceedance,
    running_sup,
    sup_norm,
    terminal_values,
)
from .riskcore import (
    AxiomReport,
    RhoResult,
    RiskMeasureSpec,
    axiom_report,
    conjugate_combination,
    conjugate_value,
    rho_eval,
    static_rho,
    static_rho_coherent_direct,
    subgradient,
)
from .scenario import ScenarioTree, TreeNode, build_tree, node_probability, uniform_binomial

__version__ = "0.1.0"

__all__ = [
    "AdaptedProcess",
    "AllocationResult",
    "AttainmentReport",
    "AVaRFamily",
    "AxiomReport",
    "BiMeasure",
    "DecompositionReport",
    "FairnessCertificate",
    "LebesgueReport",
    "QuantileLevel",
    "RawBiMeasure",
    "RawProcess",
    "RefinementSchedule",
    "RhoResult",
    "RiskMeasureSpec",
    "ScenarioTree",
    "SimplexProgram",
    "SimplexSolution",
    "SpecFamily",
    "StaticRV",
    "StoppedWorstCase",
    "TreeNode",
    "UIReport",
    "UndefinedQuantityError",
    "ValidationError",
    "WorstCaseFamily",
    "allocate",
    "as_raw",
    "attainment_check",
    "avar",
    "avar_crash_schedule",
    "avar_max_density",
    "avar_spec",
    "axiom_report",
    "build_tree",
    "conjugate_combination",
    "conjugate_value",
    "crash_sequence",
    "decomposition_battery",
    "dual_projection",
    "entropic",
    "es_tce",
    "fairness_check",
    "increment_vector",
    "jordan",
    "lebesgue_probe",
    "min_cost_combination",
    "node_probability",
    "normalize_scenario",
    "optional_projection_raw",
    "optional_projection_static",
    "pairing",
    "predictable_projection_raw",
    "prob_sup_exceedance",
    "raw_pairing",
    "rho_eval",
    "running_sup",
    "static_rho",
    "static_rho_coherent_direct",
    "stopped_worst_case",
    "stopping_time_measure",
    "subgradient",
    "sup_norm",
    "terminal_density_measure",
    "terminal_increment",
    "terminal_values",
    "ui_modulus",
    "uniform_binomial",
    "var_alpha",
    "variation",
    "variation_norm",
    "worst_case_crash_schedule",
    "worst_case_spec",
]
