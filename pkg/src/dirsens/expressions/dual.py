"""Dual numbers a + b*eps for first-order forward-mode differentiation."""

import math
from dataclasses import dataclass
from typing import Sequence

from ..errors import EvalDomain, NonSmoothPoint

# Kink tolerance for abs/min/max arguments
KINK_TOL = 1e-9


@dataclass(frozen=True)
class Dual:
    """Dual number a + b*eps."""

    a: float  # real part
    b: float  # dual part

    def __add__(self, other: "Dual") -> "Dual":
        return Dual(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "Dual") -> "Dual":
        return Dual(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "Dual":
        return Dual(-self.a, -self.b)

    def __mul__(self, other: "Dual") -> "Dual":
        return Dual(self.a * other.a, self.a * other.b + self.b * other.a)

    def __truediv__(self, other: "Dual") -> "Dual":
        if other.a == 0.0:
            raise EvalDomain("division by zero")
        real = self.a / other.a
        dual = (self.b * other.a - self.a * other.b) / (other.a * other.a)
        return Dual(real, dual)

    def __pow__(self, n: int) -> "Dual":
        if n < 0 and self.a == 0.0:
            raise EvalDomain("negative power of zero")
        if n == 0:
            return Dual(1.0, 0.0)
        try:
            return Dual(self.a**n, n * self.a ** (n - 1) * self.b)
        except OverflowError:
            raise EvalDomain(f"power overflow at {self.a}")

    def __repr__(self) -> str:
        return f"{self.a} + {self.b}ε"


def d_exp(x: Dual) -> Dual:
    try:
        e = math.exp(x.a)
    except OverflowError:
        raise EvalDomain(f"exp overflow at {x.a}")
    return Dual(e, e * x.b)


def d_log(x: Dual) -> Dual:
    if x.a <= 0.0:
        raise EvalDomain(f"log of nonpositive value {x.a}")
    return Dual(math.log(x.a), x.b / x.a)


def d_sin(x: Dual) -> Dual:
    return Dual(math.sin(x.a), math.cos(x.a) * x.b)


def d_cos(x: Dual) -> Dual:
    return Dual(math.cos(x.a), -math.sin(x.a) * x.b)


def d_sqrt(x: Dual) -> Dual:
    if x.a < 0.0:
        raise EvalDomain(f"sqrt of negative value {x.a}")
    if x.a <= KINK_TOL:
        if x.b == 0.0:
            return Dual(math.sqrt(x.a), 0.0)
        raise NonSmoothPoint("sqrt is not differentiable at 0")
    r = math.sqrt(x.a)
    return Dual(r, x.b / (2.0 * r))


def d_abs(x: Dual) -> Dual:
    if abs(x.a) <= KINK_TOL:
        # one-sided derivatives are b and -b
        if x.b != 0.0:
            raise NonSmoothPoint(f"abs has a kink at {x.a}")
        return Dual(abs(x.a), 0.0)
    return Dual(abs(x.a), math.copysign(1.0, x.a) * x.b)


def _extremum(args: Sequence[Dual], pick) -> Dual:
    best = pick(arg.a for arg in args)
    tied = [arg for arg in args if abs(arg.a - best) <= KINK_TOL]
    slopes = {arg.b for arg in tied}
    if len(slopes) > 1:
        raise NonSmoothPoint(f"tie between arguments at value {best}")
    return Dual(best, tied[0].b)


def d_min(*args: Dual) -> Dual:
    return _extremum(args, min)


def d_max(*args: Dual) -> Dual:
    return _extremum(args, max)


DUAL_FUNCTIONS = {
    "exp": d_exp,
    "log": d_log,
    "sin": d_sin,
    "cos": d_cos,
    "sqrt": d_sqrt,
    "abs": d_abs,
    "min": d_min,
    "max": d_max,
}
