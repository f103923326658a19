__version__ = "0.1.0"

from .errors import (
    DirsensError,
    NonSmoothModel,
    ParseError,
    PlanError,
    ReportIOError,
    StabilityPrereqFailed,
)
from .engine import (
    DEFAULT_CONFIG,
    AnalysisConfig,
    Check,
    Variant,
    Verdict,
    Which,
    clear_record_callbacks,
    set_record_callback,
)
from .geometry import GeneratorCone, Polyhedron, SequenceSchedule
from .expressions import ParametricProblem, format_problem, parse_problem
from .solver import directional_solutions, solve_value, stability_diagnostics
from .oracle import (
    AnalyticValueFunction,
    ProblemValueFunction,
    dini,
    directional_limiting_subdiff,
    directional_singular_subdiff,
    hadamard,
    lipschitz_verdict,
)
from .multipliers import (
    AnalysisContext,
    LocalModel,
    check_lipschitz_sufficient,
    check_upper_estimate,
    classical_multipliers,
    critical_cone,
    danskin_sets,
    directional_multipliers,
    linearization_cone,
)
from .plan import AnalysisPlan, load_plan, parse_plan, run_plan
from .report import AnalysisReport, emit, load_report

__all__ = [
    "DirsensError",
    "NonSmoothModel",
    "ParseError",
    "PlanError",
    "ReportIOError",
    "StabilityPrereqFailed",
    "DEFAULT_CONFIG",
    "AnalysisConfig",
    "Check",
    "Variant",
    "Verdict",
    "Which",
    "clear_record_callbacks",
    "set_record_callback",
    "GeneratorCone",
    "Polyhedron",
    "SequenceSchedule",
    "ParametricProblem",
    "format_problem",
    "parse_problem",
    "directional_solutions",
    "solve_value",
    "stability_diagnostics",
    "AnalyticValueFunction",
    "ProblemValueFunction",
    "dini",
    "directional_limiting_subdiff",
    "directional_singular_subdiff",
    "hadamard",
    "lipschitz_verdict",
    "AnalysisContext",
    "LocalModel",
    "check_lipschitz_sufficient",
    "check_upper_estimate",
    "classical_multipliers",
    "critical_cone",
    "danskin_sets",
    "directional_multipliers",
    "linearization_cone",
    "AnalysisPlan",
    "load_plan",
    "parse_plan",
    "run_plan",
    "AnalysisReport",
    "emit",
    "load_report",
]
