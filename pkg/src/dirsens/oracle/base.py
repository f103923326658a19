import math
from dataclasses import dataclass, field
from typing import List, Protocol, Tuple, runtime_checkable

import numpy as np

from ..solver import SetEstimate


@runtime_checkable
class ValueFunction(Protocol):
    """
    Protocol for every value-function backend consumed by the oracle.

    Backends return math.inf where the inner problem is infeasible.
    """

    @property
    def dim(self) -> int:
        """Parameter dimension n."""
        ...

    def value(self, x: np.ndarray) -> float:
        """
        Evaluate V at a parameter value.

        Args:
            x: Parameter vector of length `dim`.
        """
        ...


@dataclass
class DiniEstimate:
    """
    Lower and upper directional derivative estimates.

    Attributes:
        upper: Estimate of the upper derivative; math.inf when divergent.
        lower: Estimate of the lower derivative; -math.inf when divergent.
        samples: (t_k, quotient) pairs in shell order.
        kind: "dini" for the fixed direction, "hadamard" for perturbed ones.
    """

    upper: float
    lower: float
    samples: List[Tuple[float, float]] = field(default_factory=list)
    kind: str = "dini"

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower derivative estimate exceeds the upper one")

    @property
    def converged(self) -> bool:
        return self.lower == self.upper

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)


__all__ = ["DiniEstimate", "SetEstimate", "ValueFunction"]
