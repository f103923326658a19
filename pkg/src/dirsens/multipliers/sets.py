"""
Linearization and critical cones, classical and directional multiplier sets.

Multipliers are written as lambda = R_J^T mu + L^T nu, where the rows of R
are the extreme rays of N_Gamma(P(x, y)) (the active inequality normals for
polyhedral Gamma), L spans its lineality space and J is a complementarity
pattern: mu_J >= 0, mu = 0 off J. The v-part of every system separates from
the lambda-part, so each pattern contributes one lambda-polyhedron
(projected by Fourier-Motzkin) whenever its v-system is feasible.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..engine import DEFAULT_CONFIG, AnalysisConfig, DirectionMode
from ..errors import NonSmoothModel, NonSmoothPoint, PatternOverflow, PointNotFeasible
from ..expressions.problem import ParametricProblem
from ..geometry.cones import normal_cone, tangent_cone
from ..geometry.polyhedron import GeneratorCone, Polyhedron, fm_project
from ..oracle.base import DiniEstimate
from ..utils import is_zero_direction

logger = logging.getLogger(__name__)

# Activity tolerance for points produced by the inner solver
SOLVED_POINT_TOL = 1e-7

# Below this a coordinate maximum counts as zero
ZERO_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class LocalModel:
    """
    First-order data of a problem at a feasible point (x, y).

    Attributes:
        x: Parameter point.
        y: Decision point.
        grad_x: Gradient of f in x.
        grad_y: Gradient of f in y.
        J_x: Jacobian of P in x, shape (p, n).
        J_y: Jacobian of P in y, shape (p, m).
        tangent: Tangent cone of Gamma at P(x, y).
        normal: Normal cone of Gamma at P(x, y); its rays index the patterns.
    """

    x: np.ndarray
    y: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    J_x: np.ndarray
    J_y: np.ndarray
    tangent: Polyhedron
    normal: GeneratorCone

    def __post_init__(self):
        p = self.J_x.shape[0]
        if self.J_y.shape[0] != p or self.tangent.dim != p or self.normal.dim != p:
            raise ValueError("Jacobians and cones must share the constraint dimension")
        if self.J_x.shape[1] != self.grad_x.shape[0] or self.J_y.shape[1] != self.grad_y.shape[0]:
            raise ValueError("Jacobian columns must match the gradient lengths")

    @property
    def n(self) -> int:
        return self.J_x.shape[1]

    @property
    def m(self) -> int:
        return self.J_y.shape[1]

    @property
    def p(self) -> int:
        return self.J_x.shape[0]

    @property
    def n_patterns(self) -> int:
        return len(self.normal.rays)

    @classmethod
    def from_arrays(
        cls,
        x: Sequence[float],
        y: Sequence[float],
        grad_x: Sequence[float],
        grad_y: Sequence[float],
        J_x: Sequence[Sequence[float]],
        J_y: Sequence[Sequence[float]],
        tangent: Polyhedron,
        normal: GeneratorCone,
    ) -> "LocalModel":
        """
        Build a model from explicit data.

        Used for constraint sets given only through their tangent and normal
        cones at the base point (the normal cone must lie in the polar of the
        tangent cone).
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        p = tangent.dim
        return cls(
            x=x,
            y=y,
            grad_x=np.atleast_1d(np.asarray(grad_x, dtype=float)),
            grad_y=np.atleast_1d(np.asarray(grad_y, dtype=float)),
            J_x=np.asarray(J_x, dtype=float).reshape(p, x.shape[0]),
            J_y=np.asarray(J_y, dtype=float).reshape(p, y.shape[0]),
            tangent=tangent,
            normal=normal,
        )

    @classmethod
    def at(
        cls,
        prob: ParametricProblem,
        x: Sequence[float],
        y: Sequence[float],
        tol: float = DEFAULT_CONFIG.activity_tol,
    ) -> "LocalModel":
        """
        Linearize a smooth problem at (x, y).

        Problems without constraints get one inactive placeholder row so that
        every multiplier set lives in a space of positive dimension.

        Raises:
            NonSmoothModel: if f or P uses abs, min or max, or is not differentiable at the point.
            PointNotFeasible: if P(x, y) is not in Gamma within `tol`.
        """
        if not prob.is_smooth:
            raise NonSmoothModel(
                f"problem {prob.name!r} uses nonsmooth functions; multiplier sets need smooth f and P"
            )
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        try:
            g_x, g_y = prob.objective_gradient(x, y)
            if prob.p == 0:
                return cls(
                    x, y, g_x, g_y,
                    np.zeros((1, prob.n)),
                    np.zeros((1, prob.m)),
                    Polyhedron.whole(1),
                    GeneratorCone.zero(1),
                )
            J_x, J_y = prob.jacobian(x, y)
        except NonSmoothPoint as e:
            raise NonSmoothModel(str(e)) from e
        z = prob.P(x, y)
        G = prob.gamma_set
        if not G.contains(z, tol):
            raise PointNotFeasible(
                f"P(x, y) = {z.tolist()} is not in Gamma at x={x.tolist()}, y={y.tolist()}"
            )
        return cls(x, y, g_x, g_y, J_x, J_y, tangent_cone(G, z, tol), normal_cone(G, z, tol))

    def graphical_derivative(self, u: Sequence[float], v: Sequence[float]) -> np.ndarray:
        """DP(x, y)(u, v) = J_x u + J_y v."""
        return self.J_x @ np.asarray(u, dtype=float) + self.J_y @ np.asarray(v, dtype=float)


def graphical_derivative(
    prob: ParametricProblem,
    x: Sequence[float],
    y: Sequence[float],
    u: Sequence[float],
    v: Sequence[float],
) -> np.ndarray:
    """
    Graphical derivative of a smooth P at (x, y) applied to (u, v).

    Raises:
        NonSmoothModel: if P is not smooth at the point.
    """
    if not all(c.is_smooth for c in prob.constraints):
        raise NonSmoothModel("P uses nonsmooth functions")
    try:
        J_x, J_y = prob.jacobian(np.atleast_1d(x), np.atleast_1d(y))
    except NonSmoothPoint as e:
        raise NonSmoothModel(str(e)) from e
    return J_x @ np.atleast_1d(np.asarray(u, dtype=float)) + J_y @ np.atleast_1d(
        np.asarray(v, dtype=float)
    )


def linearization_from_tangent(
    T: Polyhedron, J_x: np.ndarray, J_y: np.ndarray, u: Sequence[float]
) -> Polyhedron:
    """{v | J_x u + J_y v in T}."""
    J_x = np.asarray(J_x, dtype=float).reshape(T.dim, -1)
    J_y = np.asarray(J_y, dtype=float).reshape(T.dim, -1)
    return T.affine_image_preimage(J_y, J_x @ np.atleast_1d(np.asarray(u, dtype=float)))


def linearization_cone(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    y: Sequence[float],
    u: Sequence[float],
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> Polyhedron:
    """
    The linearization cone {v | grad P(x, y)(u, v) in T_Gamma(P(x, y))}.

    Raises:
        NonSmoothModel: if the model is not smooth.
        PointNotFeasible: if y is not feasible at x_bar.
    """
    model = LocalModel.at(prob, x_bar, y, config.activity_tol)
    return linearization_from_tangent(model.tangent, model.J_x, model.J_y, u)


@dataclass
class CriticalConeSpec:
    """
    The critical cone: the linearization cone cut by the derivative slab
    lower <= grad f(x, y)(u, v) <= upper.

    An upper bound of -inf or a lower bound of +inf empties the cone; the
    other infinite bounds drop their side of the slab. Finite bounds are widened
    by `pad * (1 + |bound|)`; at u = 0 the pad is zero and finite bounds are
    taken as 0, so the cone is homogeneous.
    """

    base: Polyhedron
    dini_lower: float
    dini_upper: float
    slab: List[Tuple[np.ndarray, float]] = field(default_factory=list)
    pad: float = 0.0

    @property
    def cone(self) -> Polyhedron:
        P = self.base
        for a, b in self.slab:
            P = P.with_inequality(a, b)
        return P

    @property
    def is_empty(self) -> bool:
        return self.cone.is_empty


def critical_cone_from(
    base: Polyhedron,
    grad_x: np.ndarray,
    grad_y: np.ndarray,
    u: Sequence[float],
    dini: DiniEstimate,
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> CriticalConeSpec:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    zero = is_zero_direction(u, config.zero_direction_tol)
    lower, upper = dini.lower, dini.upper
    if zero:
        lower = lower if math.isinf(lower) else 0.0
        upper = upper if math.isinf(upper) else 0.0
    pad = 0.0 if zero else config.slab_pad
    shift = float(np.asarray(grad_x, dtype=float) @ u)
    g = np.asarray(grad_y, dtype=float)
    slab = []
    if math.isfinite(upper):
        slab.append((g, upper - shift + pad * (1.0 + abs(upper))))
    if math.isfinite(lower):
        slab.append((-g, -(lower - shift) + pad * (1.0 + abs(lower))))
    if upper == -math.inf or lower == math.inf:
        # no finite v reaches an infinite derivative bound
        slab.append((np.zeros_like(g), -1.0))
    return CriticalConeSpec(base, dini.lower, dini.upper, slab, pad)


def critical_cone(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    y: Sequence[float],
    u: Sequence[float],
    dini: DiniEstimate,
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> CriticalConeSpec:
    """
    The critical cone at (x_bar, y) in direction u for given derivative bounds of V.

    Raises:
        NonSmoothModel: if the model is not smooth.
        PointNotFeasible: if y is not feasible at x_bar.
    """
    model = LocalModel.at(prob, x_bar, y, config.activity_tol)
    base = linearization_from_tangent(model.tangent, model.J_x, model.J_y, u)
    return critical_cone_from(base, model.grad_x, model.grad_y, u, dini, config)


class SetKind(str, Enum):
    CLASSICAL = "Classical"
    DIRECTIONAL = "Directional"


@dataclass
class MultiplierPiece:
    """
    One pattern's contribution to a multiplier set.

    Attributes:
        pattern: Indices of the normal-cone rays allowed a positive weight.
        polyhedron: The multipliers lambda of this pattern.
        zeta: Its image zeta = alpha grad_x f + J_x^T lambda.
        representative_v: A v realizing the pattern (unit norm on the sphere).
    """

    pattern: Tuple[int, ...]
    polyhedron: Polyhedron
    zeta: Polyhedron
    representative_v: Optional[np.ndarray] = None


@dataclass
class MultiplierSet:
    """A union of polyhedral pieces of multipliers."""

    alpha: int
    kind: SetKind
    direction_mode: Optional[DirectionMode]
    dim: int
    zeta_dim: int
    pieces: List[MultiplierPiece] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    def contains(self, lam: Sequence[float], tol: float = 1e-7) -> bool:
        return any(p.polyhedron.contains(lam, tol) for p in self.pieces)

    def contains_zeta(self, zeta: Sequence[float], tol: float = 1e-7) -> bool:
        return any(p.zeta.contains(zeta, tol) for p in self.pieces)

    @property
    def zeta_pieces(self) -> List[Polyhedron]:
        return [p.zeta for p in self.pieces]


def _lambda_piece(
    model: LocalModel, pattern: Tuple[int, ...], alpha: int, config: AnalysisConfig
) -> Polyhedron:
    p, m = model.p, model.m
    R = model.normal.rays[list(pattern)] if pattern else np.zeros((0, p))
    L = model.normal.lineality
    k, l = R.shape[0], L.shape[0]
    dim = p + k + l
    E = np.vstack(
        [
            np.hstack([np.eye(p), -R.T, -L.T]),
            np.hstack([model.J_y.T, np.zeros((m, k + l))]),
        ]
    )
    f = np.r_[np.zeros(p), -alpha * model.grad_y]
    A = np.hstack([np.zeros((k, p)), -np.eye(k), np.zeros((k, l))])
    S = Polyhedron(dim, A=A, b=np.zeros(k), E=E, f=f)
    return fm_project(S, range(p), config.fm_row_cap).canonical()


def zeta_projection(
    model: LocalModel, lam_piece: Polyhedron, alpha: int, config: AnalysisConfig = DEFAULT_CONFIG
) -> Polyhedron:
    """The image {alpha grad_x f + J_x^T lambda | lambda in lam_piece}."""
    n, p = model.n, model.p
    if lam_piece.is_empty:
        return Polyhedron.empty(n)
    # variables (zeta, lambda)
    A = np.hstack([np.zeros((lam_piece.n_ineqs, n)), lam_piece.A])
    E = np.vstack(
        [
            np.hstack([np.eye(n), -model.J_x.T]),
            np.hstack([np.zeros((lam_piece.n_eqs, n)), lam_piece.E]),
        ]
    )
    f = np.r_[alpha * model.grad_x, lam_piece.f]
    S = Polyhedron(n + p, A=A, b=lam_piece.b, E=E, f=f)
    return fm_project(S, range(n), config.fm_row_cap).canonical()


def _check_patterns(model: LocalModel, config: AnalysisConfig) -> None:
    if model.n_patterns > config.pattern_cap:
        raise PatternOverflow(
            f"{model.n_patterns} active normals exceed the pattern cap {config.pattern_cap}"
        )


def _piece(
    model: LocalModel,
    pattern: Tuple[int, ...],
    alpha: int,
    v: Optional[np.ndarray],
    config: AnalysisConfig,
) -> Optional[MultiplierPiece]:
    lam = _lambda_piece(model, pattern, alpha, config)
    if lam.is_empty:
        return None
    return MultiplierPiece(pattern, lam, zeta_projection(model, lam, alpha, config), v)


def nonzero_point(K: Polyhedron) -> Optional[np.ndarray]:
    """A unit vector of the cone K, or None when K = {0} (or empty)."""
    box = K.intersect(Polyhedron.box(-np.ones(K.dim), np.ones(K.dim)))
    for i in range(K.dim):
        for sign in (1.0, -1.0):
            c = np.zeros(K.dim)
            c[i] = sign
            res = box.maximize(c)
            if res.optimal and res.fun > ZERO_TOL:
                return res.x / np.linalg.norm(res.x)
    return None


def multipliers_from_model(
    model: LocalModel,
    alpha: int,
    cone: Optional[CriticalConeSpec] = None,
    u: Optional[Sequence[float]] = None,
    mode: Optional[DirectionMode] = None,
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> MultiplierSet:
    """
    Multiplier set of a linearized model.

    Without a cone this is the classical set: lambda in N_Gamma(P) with
    alpha grad_y f + J_y^T lambda = 0. With a cone it is the directional set:
    some v in the cone (nonzero under Dir0Sphere) has d = J_x u + J_y v
    orthogonal to the pattern's rays. Patterns are tried from the largest
    down and only maximal feasible ones are kept, since a sub-pattern's
    polyhedron lies in its superset's.

    Raises:
        PatternOverflow: if N_Gamma(P) has more than `config.pattern_cap` extreme rays.
    """
    if alpha not in (0, 1):
        raise ValueError("alpha must be 0 or 1")
    _check_patterns(model, config)
    full = tuple(range(model.n_patterns))
    if cone is None:
        piece = _piece(model, full, alpha, None, config)
        return MultiplierSet(
            alpha,
            SetKind.CLASSICAL,
            None,
            model.p,
            model.n,
            [piece] if piece else [],
            {"set": "classical", "alpha": alpha},
        )

    mode = mode or DirectionMode.DIR_U
    u = np.zeros(model.n) if u is None or mode == DirectionMode.DIR0_SPHERE else np.atleast_1d(
        np.asarray(u, dtype=float)
    )
    C = cone.cone
    RJ = model.normal.rays @ model.J_y if model.n_patterns else np.zeros((0, model.m))
    offset = model.normal.rays @ (model.J_x @ u) if model.n_patterns else np.zeros(0)

    feasible: List[Tuple[Tuple[int, ...], np.ndarray]] = []
    if not C.is_empty:
        for size in range(len(full), -1, -1):
            for pattern in itertools.combinations(full, size):
                if any(set(pattern) <= set(q) for q, _ in feasible):
                    continue
                K = C
                for i in pattern:
                    K = K.with_equality(RJ[i], -offset[i])
                if mode == DirectionMode.DIR0_SPHERE:
                    v = nonzero_point(K)
                else:
                    v = K.feasible_point
                if v is not None:
                    feasible.append((pattern, np.asarray(v, dtype=float)))

    pieces = []
    for pattern, v in sorted(feasible, key=lambda item: item[0]):
        piece = _piece(model, pattern, alpha, v, config)
        if piece is not None:
            pieces.append(piece)
    logger.debug(
        f"{mode.value} alpha={alpha}: {len(feasible)} feasible patterns, {len(pieces)} pieces"
    )
    return MultiplierSet(
        alpha,
        SetKind.DIRECTIONAL,
        mode,
        model.p,
        model.n,
        pieces,
        {
            "set": "directional",
            "alpha": alpha,
            "mode": mode.value,
            "u": u.tolist(),
            "slab_pad": cone.pad,
            "dini": [cone.dini_lower, cone.dini_upper],
        },
    )


def classical_multipliers(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    y: Sequence[float],
    alpha: int,
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> MultiplierSet:
    """
    Classical (alpha = 1) or singular (alpha = 0) multipliers at (x_bar, y).

    Raises:
        NonSmoothModel: if the model is not smooth.
        PointNotFeasible: if y is not feasible at x_bar.
        PatternOverflow: if too many constraints are active.
    """
    model = LocalModel.at(prob, x_bar, y, config.activity_tol)
    return multipliers_from_model(model, alpha, config=config)


def directional_multipliers(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    y: Sequence[float],
    u: Sequence[float],
    cone: CriticalConeSpec,
    alpha: int,
    mode: DirectionMode = DirectionMode.DIR_U,
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> MultiplierSet:
    """
    Directional multipliers for the critical cone `cone`.

    With `DirectionMode.DIR0_SPHERE` the direction is taken as 0 and only
    nonzero v of the cone count.

    Raises:
        NonSmoothModel: if the model is not smooth.
        PointNotFeasible: if y is not feasible at x_bar.
        PatternOverflow: if too many constraints are active.
    """
    model = LocalModel.at(prob, x_bar, y, config.activity_tol)
    return multipliers_from_model(model, alpha, cone, u, mode, config)
