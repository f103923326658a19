"""
Recursive-descent parsers for expressions and problem files.

Expression grammar::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" ["-"] INT)?
    primary := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

A unary minus directly in front of a number literal (not raised to a power)
folds into a negative constant. The Unicode minus sign is accepted.
"""

import re
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ArityError, ParseError
from ..geometry.cones import FactorKind, GammaFactor
from ..geometry.polyhedron import Polyhedron
from ..utils import format_float
from .nodes import (
    UNARY_FUNCTIONS,
    VARIADIC_FUNCTIONS,
    BinOp,
    Call,
    Const,
    Expr,
    Neg,
    Pow,
    Var,
    evaluate,
    format_expr,
    grad,
)
from .problem import ParametricProblem

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op><=|>=|==|[-+*/^(),;\[\]{}<>=])"
    r")"
)


@dataclass(frozen=True)
class Token:
    kind: str  # number, name, op, end
    text: str
    line: int
    column: int


def tokenize(text: str, line: int = 1, column: int = 1) -> List[Token]:
    text = text.replace("−", "-")
    tokens: List[Token] = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(
                f"unexpected character {text[pos + bad]!r}", line, column + pos + bad
            )
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(Token(kind, m.group(kind), line, column + start))
        pos = m.end()
    tokens.append(Token("end", "", line, column + len(text)))
    return tokens


class _ExpressionParser:
    def __init__(self, tokens: List[Token], names: Optional[frozenset] = None):
        self.tokens = tokens
        self.pos = 0
        self.names = names

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def _error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.current
        return ParseError(message, token.line, token.column)

    def _accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.pos += 1
            return True
        return False

    def _expect(self, text: str) -> Token:
        token = self.current
        if not self._accept(text):
            found = token.text or "end of input"
            raise self._error(f"expected {text!r}, found {found!r}", token)
        return token

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.current.kind == "op" and self.current.text in ("+", "-"):
            op = self.current.text
            self.pos += 1
            node = BinOp(op, node, self.parse_term())
        return node

    def parse_term(self) -> Expr:
        node = self.parse_unary()
        while self.current.kind == "op" and self.current.text in ("*", "/"):
            op = self.current.text
            self.pos += 1
            node = BinOp(op, node, self.parse_unary())
        return node

    def parse_unary(self) -> Expr:
        if self._accept("-"):
            nxt = self.current
            follower = self._peek()
            if nxt.kind == "number" and not (
                follower.kind == "op" and follower.text == "^"
            ):
                self.pos += 1
                return Const(-float(nxt.text))
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_primary()
        if self._accept("^"):
            negative = self._accept("-")
            token = self.current
            if token.kind != "number" or not token.text.isdigit():
                raise self._error("exponent must be an integer literal", token)
            self.pos += 1
            exponent = int(token.text)
            return Pow(base, -exponent if negative else exponent)
        return base

    def parse_primary(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.pos += 1
            return Const(float(token.text))
        if token.kind == "name":
            self.pos += 1
            if self._accept("("):
                if token.text not in UNARY_FUNCTIONS + VARIADIC_FUNCTIONS:
                    raise self._error(f"unknown function {token.text!r}", token)
                args = [self.parse_expr()]
                while self._accept(","):
                    args.append(self.parse_expr())
                self._expect(")")
                if token.text in UNARY_FUNCTIONS and len(args) != 1:
                    raise self._error(f"{token.text} takes one argument", token)
                if token.text in VARIADIC_FUNCTIONS and len(args) < 2:
                    raise self._error(f"{token.text} takes at least two arguments", token)
                return Call(token.text, tuple(args))
            if self.names is not None and token.text not in self.names:
                raise self._error(f"undeclared variable {token.text!r}", token)
            return Var(token.text)
        if self._accept("("):
            node = self.parse_expr()
            self._expect(")")
            return node
        found = token.text or "end of input"
        raise self._error(f"unexpected token {found!r}", token)


def parse_expression(
    text: str,
    names: Optional[Sequence[str]] = None,
    line: int = 1,
    column: int = 1,
) -> Expr:
    """
    Parse a single expression.

    Raises:
        ParseError: on malformed text or (when `names` is given) undeclared variables.
    """
    parser = _ExpressionParser(
        tokenize(text, line, column), frozenset(names) if names is not None else None
    )
    node = parser.parse_expr()
    if parser.current.kind != "end":
        raise parser._error(f"unexpected token {parser.current.text!r}")
    return node


# ---------------------------------------------------------------------------
# Problem files

_HEADER = re.compile(r"^(problem|params|vars|box|min|st)\b\s*(.*)$")
_DIM = re.compile(r"^([nm])\s*=\s*(\d+)$")
_BOX = re.compile(r"^y(\d+)\s+in\s+\[\s*([^,\]]+)\s*,\s*([^\]]+)\]$")
_GAMMA = re.compile(r"\s+in\s+(NonPositive|Zero|Poly|Interval)\b")


def _split_top_level(text: str, sep: str) -> List[Tuple[str, int]]:
    """Split on `sep` outside parentheses; returns (piece, offset) pairs."""
    out = []
    depth = 0
    start = 0
    for i, ch in enumerate(text):
        if ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == sep and depth == 0:
            out.append((text[start:i], start))
            start = i + 1
    out.append((text[start:], start))
    return out


def _affine_row(
    e: Expr, k: int, line: int, column: int
) -> Tuple[np.ndarray, float]:
    """Coefficients (a, c) with e(z) = a.z + c; rejects non-affine bodies."""
    names = [f"z{i + 1}" for i in range(k)]
    zero = {n: 0.0 for n in names}
    try:
        a = grad(e, zero, names)
        c = float(evaluate(e, zero))
        probe = {n: 1.0 + 0.5 * i for i, n in enumerate(names)}
        exact = float(evaluate(e, probe))
    except Exception as err:
        raise ParseError(f"cannot evaluate Poly row: {err}", line, column)
    predicted = float(a @ np.array(list(probe.values()))) + c
    if abs(exact - predicted) > 1e-9 * (1 + abs(exact)):
        raise ParseError("Poly rows must be affine in z", line, column)
    return a, c


def _parse_poly_body(body: str, k: int, line: int, column: int) -> Polyhedron:
    ineqs, eqs = [], []
    for piece, offset in _split_top_level(body, ";"):
        if not piece.strip():
            continue
        col = column + offset
        m = re.search(r"(<=|>=|==)", piece)
        if not m:
            raise ParseError("Poly rows need <=, >= or ==", line, col)
        lhs_text, rhs_text = piece[: m.start()], piece[m.end():]
        used = set(re.findall(r"\bz(\d+)\b", piece))
        if any(int(i) > k or int(i) < 1 for i in used):
            raise ArityError(
                f"line {line}: Poly row uses z{max(int(i) for i in used)} but only {k} constraint expressions are given"
            )
        names = [f"z{i + 1}" for i in range(k)]
        lhs = parse_expression(lhs_text, names, line, col)
        rhs = parse_expression(rhs_text, names, line, col + m.end())
        a, c = _affine_row(BinOp("-", lhs, rhs), k, line, col)
        if m.group(1) == "<=":
            ineqs.append((a, -c))
        elif m.group(1) == ">=":
            ineqs.append((-a, c))
        else:
            eqs.append((a, -c))
    if not ineqs and not eqs:
        raise ParseError("empty Poly body", line, column)
    return Polyhedron.from_rows(k, ineqs, eqs)


def _parse_constraint(
    text: str, names: Sequence[str], line: int, column: int
) -> Tuple[List[Expr], GammaFactor]:
    m = _GAMMA.search(text)
    if not m:
        raise ParseError("constraint needs 'in NonPositive|Zero|Poly{...}|Interval[...]'", line, column)
    lhs = text[: m.start()].strip()
    kind = m.group(1)
    rest = text[m.end():].strip()
    lhs_col = column + (len(text[: m.start()]) - len(text[: m.start()].lstrip()))

    if lhs.startswith("(") and lhs.endswith(")") and len(_split_top_level(lhs[1:-1], ",")) > 1:
        parts = _split_top_level(lhs[1:-1], ",")
        exprs = [parse_expression(p, names, line, lhs_col + 1 + off) for p, off in parts]
    else:
        exprs = [parse_expression(lhs, names, line, lhs_col)]

    rest_col = column + m.end() + (len(text[m.end():]) - len(text[m.end():].lstrip()))
    if kind in ("NonPositive", "Zero"):
        count = len(exprs)
        if rest:
            cm = re.fullmatch(r"\(\s*(\d+)\s*\)", rest)
            if not cm:
                raise ParseError(f"unexpected text after {kind}", line, rest_col)
            count = int(cm.group(1))
        if count != len(exprs):
            raise ArityError(
                f"line {line}: {kind}({count}) given {len(exprs)} constraint expressions"
            )
        factor = (
            GammaFactor.nonpositive(count)
            if kind == "NonPositive"
            else GammaFactor.zero(count)
        )
        return exprs, factor

    if kind == "Interval":
        im = re.fullmatch(r"\[\s*([^,\]]+)\s*,\s*([^\]]+)\]", rest)
        if not im:
            raise ParseError("Interval needs [lo, hi]", line, rest_col)
        if len(exprs) != 1:
            raise ArityError(f"line {line}: Interval applies to exactly one expression")
        try:
            lo, hi = float(im.group(1).replace("−", "-")), float(im.group(2).replace("−", "-"))
        except ValueError:
            raise ParseError("Interval bounds must be numbers", line, rest_col)
        if lo > hi:
            raise ParseError("Interval lower bound exceeds upper bound", line, rest_col)
        return exprs, GammaFactor.polyhedral(
            Polyhedron.from_rows(1, [([1.0], hi), ([-1.0], -lo)])
        )

    if not (rest.startswith("{") and rest.endswith("}")):
        raise ParseError("Poly needs a body in braces", line, rest_col)
    poly = _parse_poly_body(rest[1:-1], len(exprs), line, rest_col + 1)
    return exprs, GammaFactor.polyhedral(poly)


def parse_problem(text: str) -> ParametricProblem:
    """
    Parse a problem file.

    Raises:
        ParseError: malformed text, with line and column.
        ArityError: constraint expressions do not match their Gamma factor.
    """
    name = None
    n = m = None
    boxes = {}
    objective = None
    constraints: List[Expr] = []
    factors: List[GammaFactor] = []
    pending: List[Tuple[int, str, int, str]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        hm = _HEADER.match(line.strip())
        if not hm:
            raise ParseError(f"unknown statement {line.split()[0]!r}", lineno, indent + 1)
        key, body = hm.group(1), hm.group(2).strip()
        col = indent + len(line.strip()) - len(body) + 1
        if key == "problem":
            if not body:
                raise ParseError("problem needs a name", lineno, col)
            name = body
        elif key in ("params", "vars"):
            dm = _DIM.match(body)
            if not dm or dm.group(1) != ("n" if key == "params" else "m"):
                raise ParseError(f"expected {'n' if key == 'params' else 'm'}=<int>", lineno, col)
            if key == "params":
                n = int(dm.group(2))
            else:
                m = int(dm.group(2))
        elif key == "box":
            bm = _BOX.match(body)
            if not bm:
                raise ParseError("expected y<i> in [<lo>, <hi>]", lineno, col)
            try:
                lo = float(bm.group(2).replace("−", "-"))
                hi = float(bm.group(3).replace("−", "-"))
            except ValueError:
                raise ParseError("box bounds must be numbers", lineno, col)
            boxes[int(bm.group(1))] = (lo, hi)
        else:
            pending.append((lineno, key, col, body))

    if n is None or m is None:
        raise ParseError("missing params or vars declaration", 1, 1)
    names = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(m)]

    for lineno, key, col, body in pending:
        if key == "min":
            if objective is not None:
                raise ParseError("objective declared twice", lineno, col)
            objective = parse_expression(body, names, lineno, col)
            continue
        exprs, factor = _parse_constraint(body, names, lineno, col)
        constraints.extend(exprs)
        if (
            factors
            and factor.kind != FactorKind.POLY
            and factors[-1].kind == factor.kind
        ):
            factors[-1] = GammaFactor(factor.kind, factors[-1].count + factor.count)
        else:
            factors.append(factor)

    if objective is None:
        raise ParseError("missing objective ('min' line)", 1, 1)
    missing = [i for i in range(1, m + 1) if i not in boxes]
    if missing:
        raise ParseError(f"missing box for y{missing[0]}", 1, 1)
    extra = [i for i in boxes if i > m or i < 1]
    if extra:
        raise ArityError(f"box given for y{extra[0]} but m={m}")
    lower = tuple(boxes[i][0] for i in range(1, m + 1))
    upper = tuple(boxes[i][1] for i in range(1, m + 1))

    return ParametricProblem(
        name=name or "unnamed",
        n=n,
        m=m,
        objective=objective,
        constraints=tuple(constraints),
        gamma=tuple(factors),
        y_lower=lower,
        y_upper=upper,
    )


def _format_poly_row(a: np.ndarray, rhs: float, op: str) -> str:
    terms = [f"{format_float(c)}*z{i + 1}" for i, c in enumerate(a)]
    return f"{' + '.join(terms)} {op} {format_float(rhs)}"


def format_problem(prob: ParametricProblem) -> str:
    """Render a problem in the file format; parse_problem reads it back equal."""
    lines = [
        f"problem {prob.name}",
        f"params  n={prob.n}",
        f"vars    m={prob.m}",
    ]
    for i, (lo, hi) in enumerate(zip(prob.y_lower, prob.y_upper), start=1):
        lines.append(f"box     y{i} in [{format_float(lo)}, {format_float(hi)}]")
    lines.append(f"min     {format_expr(prob.objective)}")
    row = 0
    for factor in prob.gamma:
        exprs = prob.constraints[row: row + factor.count]
        row += factor.count
        if factor.kind == FactorKind.POLY:
            lhs = format_expr(exprs[0]) if len(exprs) == 1 else (
                "(" + ", ".join(format_expr(e) for e in exprs) + ")"
            )
            body = [_format_poly_row(a, b, "<=") for a, b in zip(factor.poly.A, factor.poly.b)]
            body += [_format_poly_row(e, f, "==") for e, f in zip(factor.poly.E, factor.poly.f)]
            lines.append(f"st      {lhs} in Poly{{{'; '.join(body)}}}")
        else:
            for e in exprs:
                lines.append(f"st      {format_expr(e)} in {factor.kind.value}")
    return "\n".join(lines) + "\n"
