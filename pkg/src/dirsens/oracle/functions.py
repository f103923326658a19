import math
from typing import Callable, Optional, Union

import numpy as np

from ..engine import DEFAULT_CONFIG, AnalysisConfig
from ..expressions.problem import ParametricProblem
from ..solver import ValueSolver
from .base import ValueFunction


class ProblemValueFunction(ValueFunction):
    """
    V(x) of a parametric problem, computed by the inner solver.

    Every value is cached by the underlying `ValueSolver`, so the oracle,
    the solver diagnostics and the multiplier checks can share one instance.
    """

    def __init__(
        self,
        prob: ParametricProblem,
        config: AnalysisConfig = DEFAULT_CONFIG,
        solver: Optional[ValueSolver] = None,
    ):
        self.prob = prob
        self.solver = solver if solver is not None else ValueSolver(prob, config)

    @property
    def dim(self) -> int:
        return self.prob.n

    def value(self, x: np.ndarray) -> float:
        return self.solver.value(x)

    def __repr__(self) -> str:
        return f"ProblemValueFunction({self.prob.name!r})"


class AnalyticValueFunction(ValueFunction):
    """
    A value function given in closed form.

    Bypasses the inner solver; used for property tests of the oracle and for
    checking estimates against known answers. Non-finite results and
    arithmetic errors map to math.inf.
    """

    def __init__(self, func: Callable[[np.ndarray], float], dim: int = 1, name: str = ""):
        if dim < 1:
            raise ValueError("dim must be at least 1")
        self.func = func
        self._dim = dim
        self.name = name or getattr(func, "__name__", "analytic")

    @property
    def dim(self) -> int:
        return self._dim

    def value(self, x: np.ndarray) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        try:
            with np.errstate(all="ignore"):
                v = float(self.func(x))
        except (ArithmeticError, ValueError):
            return math.inf
        return v if math.isfinite(v) else math.inf

    def __repr__(self) -> str:
        return f"AnalyticValueFunction({self.name!r})"


def as_value_function(
    source: Union[ParametricProblem, ValueFunction],
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> ValueFunction:
    """Wrap a problem in a `ProblemValueFunction`; pass value functions through."""
    if isinstance(source, ParametricProblem):
        return ProblemValueFunction(source, config)
    if isinstance(source, ValueFunction):
        return source
    raise TypeError(f"Unsupported value function source: {type(source)}")
