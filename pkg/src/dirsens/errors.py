from typing import Optional


class DirsensError(Exception):
    """Base class for every error raised by dirsens."""


class PointNotInSet(DirsensError):
    pass


class DimensionOverflow(DirsensError):
    pass


class ParseError(DirsensError):
    """Malformed problem, expression or plan text.

    Attributes:
        line: 1-based line of the offending token, if known.
        column: 1-based column of the offending token, if known.
    """

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ):
        self.line = line
        self.column = column
        self.reason = message
        if line is not None:
            message = f"line {line}, column {column or 1}: {message}"
        super().__init__(message)


class ArityError(DirsensError):
    pass


class EvalDomain(DirsensError):
    pass


class NonSmoothPoint(DirsensError):
    pass


class NonSmoothModel(DirsensError):
    pass


class PointNotFeasible(DirsensError):
    pass


class PatternOverflow(DirsensError):
    pass


class ValueAtBaseInfinite(DirsensError):
    pass


class NotDirectionallyLipschitz(DirsensError):
    pass


class StabilityPrereqFailed(DirsensError):
    pass


class ConstraintDependsOnParameter(DirsensError):
    pass


class PlanError(DirsensError):
    pass


class ReportIOError(DirsensError):
    pass
