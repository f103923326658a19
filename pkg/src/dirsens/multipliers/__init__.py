from .sets import (
    CriticalConeSpec,
    LocalModel,
    MultiplierPiece,
    MultiplierSet,
    SetKind,
    classical_multipliers,
    critical_cone,
    critical_cone_from,
    directional_multipliers,
    graphical_derivative,
    linearization_cone,
    linearization_from_tangent,
    multipliers_from_model,
    zeta_projection,
)
from .theorems import (
    AbadieVerdict,
    AdditiveSets,
    AnalysisContext,
    DanskinResult,
    GauvinDubeauVerdict,
    InclusionVerdict,
    LipschitzCertificate,
    RegularityVerdict,
    abadie_check,
    additive_perturbation_sets,
    check_lipschitz_sufficient,
    check_upper_estimate,
    danskin_sets,
    foscms_check,
    foscms_from_model,
    gauvin_dubeau_check,
    is_additive_perturbation,
    mfcq_holds,
    multiplier_sets,
    probe_direction,
    solution_points,
)

__all__ = [
    "CriticalConeSpec",
    "LocalModel",
    "MultiplierPiece",
    "MultiplierSet",
    "SetKind",
    "classical_multipliers",
    "critical_cone",
    "critical_cone_from",
    "directional_multipliers",
    "graphical_derivative",
    "linearization_cone",
    "linearization_from_tangent",
    "multipliers_from_model",
    "zeta_projection",
    "AbadieVerdict",
    "AdditiveSets",
    "AnalysisContext",
    "DanskinResult",
    "GauvinDubeauVerdict",
    "InclusionVerdict",
    "LipschitzCertificate",
    "RegularityVerdict",
    "abadie_check",
    "additive_perturbation_sets",
    "check_lipschitz_sufficient",
    "check_upper_estimate",
    "danskin_sets",
    "foscms_check",
    "foscms_from_model",
    "gauvin_dubeau_check",
    "is_additive_perturbation",
    "mfcq_holds",
    "multiplier_sets",
    "probe_direction",
    "solution_points",
]
