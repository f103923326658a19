from dataclasses import dataclass
from enum import Enum
from functools import reduce as _fold
from typing import Optional, Sequence

import numpy as np

from ..errors import PointNotInSet
from .polyhedron import GeneratorCone, Polyhedron


def _check_member(S: Polyhedron, x: np.ndarray, tol: float) -> None:
    if x.shape != (S.dim,):
        raise ValueError(f"Point has shape {x.shape}, expected ({S.dim},)")
    if not S.contains(x, tol):
        raise PointNotInSet(f"Point {x.tolist()} is not in the polyhedron")


def tangent_cone(S: Polyhedron, x: Sequence[float], tol: float = 1e-9) -> Polyhedron:
    """
    Tangent cone of a polyhedron at x: active inequalities and all equations, homogenized.

    Raises:
        PointNotInSet: if x violates S beyond the activity tolerance.
    """
    x = np.asarray(x, dtype=float)
    _check_member(S, x, tol)
    active = S.active_rows(x, tol)
    return Polyhedron(S.dim, A=S.A[active], b=np.zeros(len(active)), E=S.E)


def normal_cone(S: Polyhedron, x: Sequence[float], tol: float = 1e-9) -> GeneratorCone:
    """
    Normal cone of a polyhedron at x.

    Rays are the active inequality normals and the lineality space is spanned
    by the equation normals.

    Raises:
        PointNotInSet: if x violates S beyond the activity tolerance.
    """
    x = np.asarray(x, dtype=float)
    _check_member(S, x, tol)
    active = S.active_rows(x, tol)
    return GeneratorCone(S.dim, rays=S.A[active], lineality=S.E)


def directional_normal_cone(
    S: Polyhedron,
    x: Sequence[float],
    d: Sequence[float],
    tol: float = 1e-9,
    zero_tol: float = 1e-12,
) -> GeneratorCone:
    """
    Directional normal cone N_S(x; d) = N_S(x) intersected with the orthogonal complement of d.

    Returns the empty cone when d is not tangent, and N_S(x) when d is zero.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    _check_member(S, x, tol)
    if float(np.linalg.norm(d)) < zero_tol:
        return normal_cone(S, x, tol)
    if not tangent_cone(S, x, tol).contains(d, tol):
        return GeneratorCone.empty_set(S.dim)
    active = S.active_rows(x, tol)
    A = S.A[active]
    dnorm = float(np.linalg.norm(d))
    orthogonal = [
        a for a in A if abs(float(a @ d)) <= tol * (1 + np.linalg.norm(a) * dnorm)
    ]
    return GeneratorCone(S.dim, rays=orthogonal, lineality=S.E)


def restrict_normal_cone(
    N: GeneratorCone, T: Polyhedron, d: Sequence[float], zero_tol: float = 1e-12
) -> GeneratorCone:
    """
    Directional restriction for given tangent/normal cone data.

    Used for sets that are not polyhedral but whose cones at the base point
    are known: returns N intersected with the complement of d when d lies in T,
    the empty cone otherwise, and N itself for d = 0.
    """
    d = np.asarray(d, dtype=float)
    if float(np.linalg.norm(d)) < zero_tol:
        return N
    if N.empty or not T.contains(d):
        return GeneratorCone.empty_set(N.dim)
    return GeneratorCone.from_polyhedron(N.to_polyhedron().with_equality(d, 0.0))


class FactorKind(str, Enum):
    NONPOSITIVE = "NonPositive"
    ZERO = "Zero"
    POLY = "Poly"


@dataclass(frozen=True)
class GammaFactor:
    """One factor of the product constraint set Gamma."""

    kind: FactorKind
    count: int = 1
    poly: Optional[Polyhedron] = None

    def __post_init__(self):
        if self.kind == FactorKind.POLY:
            if self.poly is None:
                raise ValueError("Poly factors need a polyhedron")
            object.__setattr__(self, "count", self.poly.dim)
        elif self.count < 1:
            raise ValueError("factor count must be positive")

    @classmethod
    def nonpositive(cls, count: int = 1) -> "GammaFactor":
        return cls(FactorKind.NONPOSITIVE, count)

    @classmethod
    def zero(cls, count: int = 1) -> "GammaFactor":
        return cls(FactorKind.ZERO, count)

    @classmethod
    def polyhedral(cls, poly: Polyhedron) -> "GammaFactor":
        return cls(FactorKind.POLY, poly.dim, poly)

    @property
    def dim(self) -> int:
        return self.count

    def to_polyhedron(self) -> Polyhedron:
        if self.kind == FactorKind.NONPOSITIVE:
            return Polyhedron(self.count, A=np.eye(self.count), b=np.zeros(self.count))
        if self.kind == FactorKind.ZERO:
            return Polyhedron.origin(self.count)
        return self.poly

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GammaFactor):
            return NotImplemented
        if self.kind != other.kind or self.count != other.count:
            return False
        if self.kind == FactorKind.POLY:
            return self.poly == other.poly
        return True

    def __hash__(self) -> int:
        return hash((self.kind, self.count))


def gamma_polyhedron(factors: Sequence[GammaFactor]) -> Polyhedron:
    """The product polyhedron of the factors in order."""
    if not factors:
        raise ValueError("Gamma needs at least one factor")
    return _fold(lambda acc, fac: acc.product(fac.to_polyhedron()),
                 factors[1:], factors[0].to_polyhedron())
