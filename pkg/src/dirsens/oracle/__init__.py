from .base import DiniEstimate, SetEstimate, ValueFunction
from .functions import AnalyticValueFunction, ProblemValueFunction, as_value_function
from .subdiff import (
    ClarkeEstimate,
    ContinuityVerdict,
    LipschitzVerdict,
    SubgradientSweep,
    continuity_diagnostic,
    dini,
    directional_clarke_subdiff,
    directional_limiting_subdiff,
    directional_singular_subdiff,
    directional_subdifferentials,
    divergence_sign,
    frechet_subgradients,
    hadamard,
    lipschitz_verdict,
    subgradient_sweep,
)

__all__ = [
    "DiniEstimate",
    "SetEstimate",
    "ValueFunction",
    "AnalyticValueFunction",
    "ProblemValueFunction",
    "as_value_function",
    "ClarkeEstimate",
    "ContinuityVerdict",
    "LipschitzVerdict",
    "SubgradientSweep",
    "continuity_diagnostic",
    "dini",
    "directional_clarke_subdiff",
    "directional_limiting_subdiff",
    "directional_singular_subdiff",
    "directional_subdifferentials",
    "divergence_sign",
    "frechet_subgradients",
    "hadamard",
    "lipschitz_verdict",
    "subgradient_sweep",
]
