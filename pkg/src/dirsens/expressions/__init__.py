from .nodes import (
    BinOp,
    Call,
    Const,
    Expr,
    Neg,
    Pow,
    Var,
    evaluate,
    evaluate_masked,
    format_expr,
    grad,
)
from .parser import format_problem, parse_expression, parse_problem, tokenize
from .problem import ParametricProblem

__all__ = [
    "BinOp",
    "Call",
    "Const",
    "Expr",
    "Neg",
    "Pow",
    "Var",
    "evaluate",
    "evaluate_masked",
    "format_expr",
    "grad",
    "format_problem",
    "parse_expression",
    "parse_problem",
    "tokenize",
    "ParametricProblem",
]
