"""
Expression AST.

Nodes are frozen dataclasses so structural equality is plain `==`. Numeric
evaluation is vectorized over numpy arrays; `evaluate` raises EvalDomain on
domain violations while `evaluate_masked` maps them to NaN for grid sweeps.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Sequence, Tuple, Union

import numpy as np

from ..errors import EvalDomain
from .dual import DUAL_FUNCTIONS, Dual

Number = Union[float, np.ndarray]

UNARY_FUNCTIONS = ("exp", "log", "sin", "cos", "abs", "sqrt")
VARIADIC_FUNCTIONS = ("min", "max")
NONSMOOTH_FUNCTIONS = ("abs", "min", "max")


class Expr:
    """Base class of all expression nodes."""

    def children(self) -> Tuple["Expr", ...]:
        return ()

    def variables(self) -> frozenset:
        out = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, Var):
                out.add(node.name)
            stack.extend(node.children())
        return frozenset(out)

    @property
    def is_smooth(self) -> bool:
        """False when the tree contains abs, min or max."""
        stack = [self]
        while stack:
            node = stack.pop()
            if isinstance(node, Call) and node.func in NONSMOOTH_FUNCTIONS:
                return False
            stack.extend(node.children())
        return True

    def __str__(self) -> str:
        return format_expr(self)


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def children(self):
        return (self.base,)


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: Tuple[Expr, ...]

    def children(self):
        return self.args


def _domain(strict: bool, bad: np.ndarray, message: str, value: np.ndarray) -> np.ndarray:
    if np.any(bad):
        if strict:
            raise EvalDomain(message)
        value = np.where(bad, np.nan, value)
    return value


def _eval(node: Expr, env: Mapping[str, Number], strict: bool) -> np.ndarray:
    if isinstance(node, Const):
        return np.asarray(node.value, dtype=float)
    if isinstance(node, Var):
        try:
            return np.asarray(env[node.name], dtype=float)
        except KeyError:
            raise EvalDomain(f"unbound variable {node.name}")
    if isinstance(node, Neg):
        return -_eval(node.arg, env, strict)
    if isinstance(node, BinOp):
        left = _eval(node.left, env, strict)
        right = _eval(node.right, env, strict)
        with np.errstate(all="ignore"):
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            value = left / right
        return _domain(strict, right == 0, "division by zero", value)
    if isinstance(node, Pow):
        base = _eval(node.base, env, strict)
        with np.errstate(all="ignore"):
            value = np.power(base, float(node.exponent))
        if node.exponent < 0:
            value = _domain(strict, base == 0, "negative power of zero", value)
        return value
    if isinstance(node, Call):
        args = [_eval(a, env, strict) for a in node.args]
        with np.errstate(all="ignore"):
            if node.func == "exp":
                value = np.exp(args[0])
                return _domain(strict, ~np.isfinite(value) & np.isfinite(args[0]), "exp overflow", value)
            if node.func == "log":
                value = np.log(np.where(args[0] > 0, args[0], 1.0))
                return _domain(strict, ~(args[0] > 0), "log of nonpositive value", value)
            if node.func == "sqrt":
                value = np.sqrt(np.where(args[0] >= 0, args[0], 0.0))
                return _domain(strict, args[0] < 0, "sqrt of negative value", value)
            if node.func == "sin":
                return np.sin(args[0])
            if node.func == "cos":
                return np.cos(args[0])
            if node.func == "abs":
                return np.abs(args[0])
            if node.func == "min":
                return _fold_left(np.minimum, args)
            if node.func == "max":
                return _fold_left(np.maximum, args)
    raise TypeError(f"Unsupported node: {node!r}")


def _fold_left(op: Callable, args: Sequence[np.ndarray]) -> np.ndarray:
    acc = args[0]
    for a in args[1:]:
        acc = op(acc, a)
    return acc


def evaluate(e: Expr, env: Mapping[str, Number]) -> Number:
    """
    Evaluate with IEEE doubles, left to right.

    Raises:
        EvalDomain: on log of a nonpositive value, division by zero and similar.
    """
    value = _eval(e, env, strict=True)
    return float(value) if value.ndim == 0 else value


def evaluate_masked(e: Expr, env: Mapping[str, Number]) -> np.ndarray:
    """Vectorized evaluation mapping domain violations to NaN."""
    return _eval(e, env, strict=False)


def _eval_dual(node: Expr, env: Mapping[str, Dual]) -> Dual:
    if isinstance(node, Const):
        return Dual(node.value, 0.0)
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise EvalDomain(f"unbound variable {node.name}")
    if isinstance(node, Neg):
        return -_eval_dual(node.arg, env)
    if isinstance(node, BinOp):
        left = _eval_dual(node.left, env)
        right = _eval_dual(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left / right
    if isinstance(node, Pow):
        return _eval_dual(node.base, env) ** node.exponent
    if isinstance(node, Call):
        args = [_eval_dual(a, env) for a in node.args]
        return DUAL_FUNCTIONS[node.func](*args)
    raise TypeError(f"Unsupported node: {node!r}")


def grad(e: Expr, point: Mapping[str, float], wrt: Sequence[str]) -> np.ndarray:
    """
    Gradient of e with respect to the variables in `wrt`.

    One forward dual-number sweep per requested coordinate.

    Raises:
        NonSmoothPoint: at an active kink of abs/min/max or at sqrt(0).
        EvalDomain: when e is undefined at the point.
    """
    out = np.empty(len(wrt))
    for i, name in enumerate(wrt):
        env: Dict[str, Dual] = {
            k: Dual(float(v), 1.0 if k == name else 0.0) for k, v in point.items()
        }
        if name not in env:
            env[name] = Dual(0.0, 1.0)
        out[i] = _eval_dual(e, env).b
    return out


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def _atom(node: Expr) -> bool:
    return isinstance(node, (Var, Call)) or (isinstance(node, Const) and node.value >= 0)


def _format_const(value: float) -> str:
    text = repr(float(value))
    return f"({text})" if value < 0 or text.startswith("-") else text


def format_expr(e: Expr) -> str:
    """Print an expression so that parsing the text gives back an equal tree."""
    if isinstance(e, Const):
        return _format_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = format_expr(e.arg)
        if isinstance(e.arg, Const) or not _atom(e.arg):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, BinOp):
        left = format_expr(e.left)
        right = format_expr(e.right)
        if isinstance(e.left, BinOp) and _PRECEDENCE[e.left.op] < _PRECEDENCE[e.op]:
            left = f"({left})"
        if isinstance(e.left, Neg):
            left = f"({left})"
        if isinstance(e.right, (BinOp, Neg)):
            right = f"({right})"
        return f"{left} {e.op} {right}"
    if isinstance(e, Pow):
        base = format_expr(e.base)
        if not (_atom(e.base) or isinstance(e.base, Const)):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    raise TypeError(f"Unsupported node: {e!r}")
