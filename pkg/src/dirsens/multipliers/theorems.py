"""
Checkers for the upper estimates of the directional subdifferentials of V,
the directional Lipschitz sufficient condition and the surrounding
regularity tests.

All checkers share an `AnalysisContext`: one value solver, one oracle and
one cache of stability verdicts, subgradient sweeps and derivative bounds
per direction. Multiplier sets are built from a `LocalModel` per solution
point; a custom model provider lets the same checks run on constraint sets
known only through their tangent and normal cones.
"""

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..engine import (
    DEFAULT_CONFIG,
    AbadieStatus,
    AnalysisConfig,
    Certification,
    ContinuityStatus,
    DirectionMode,
    InclusionStatus,
    RegularityStatus,
    StabilityProperty,
    Variant,
    Verdict,
    Which,
)
from ..errors import (
    ConstraintDependsOnParameter,
    NonSmoothModel,
    NonSmoothPoint,
    NotDirectionallyLipschitz,
    StabilityPrereqFailed,
)
from ..expressions.nodes import BinOp, Const, Expr, Var, grad
from ..expressions.problem import ParametricProblem
from ..geometry.cones import restrict_normal_cone
from ..geometry.neighborhood import SequenceSchedule, sphere_directions
from ..geometry.polyhedron import GeneratorCone, Polyhedron, hull_of_union, v_to_h
from ..oracle.base import DiniEstimate, SetEstimate
from ..oracle.functions import ProblemValueFunction
from ..oracle.subdiff import (
    ClarkeEstimate,
    ContinuityVerdict,
    LipschitzVerdict,
    SubgradientSweep,
    continuity_diagnostic,
    dini,
    directional_clarke_subdiff,
    hadamard,
    lipschitz_verdict,
    subgradient_sweep,
)
from ..solver import (
    StabilityVerdict,
    ValueSolver,
    directional_solutions,
    restore_feasible_point,
    stability_diagnostics,
)
from ..utils import cluster_points, is_zero_direction, unit
from .sets import (
    SOLVED_POINT_TOL,
    ZERO_TOL,
    CriticalConeSpec,
    LocalModel,
    MultiplierSet,
    critical_cone_from,
    linearization_from_tangent,
    multipliers_from_model,
    nonzero_point,
)

logger = logging.getLogger(__name__)

ModelProvider = Callable[[np.ndarray], LocalModel]


def _key(u: Sequence[float]) -> Tuple[float, ...]:
    return tuple(np.round(np.atleast_1d(np.asarray(u, dtype=float)), 15).tolist())


class AnalysisContext:
    """
    Solver, oracle and cached per-direction results for one problem at x_bar.

    Args:
        prob: The parametric problem; supplies V through the inner solver.
        x_bar: Base parameter point.
        schedule: Shell schedule for every sweep.
        config: Tolerances.
        model_at: Optional override y -> LocalModel for the multiplier sets.
    """

    def __init__(
        self,
        prob: ParametricProblem,
        x_bar: Sequence[float],
        schedule: SequenceSchedule = SequenceSchedule(),
        config: AnalysisConfig = DEFAULT_CONFIG,
        model_at: Optional[ModelProvider] = None,
    ):
        self.prob = prob
        self.x_bar = np.atleast_1d(np.asarray(x_bar, dtype=float))
        if self.x_bar.shape[0] != prob.n:
            raise ValueError(f"x_bar must have {prob.n} coordinates")
        self.schedule = schedule
        self.config = config
        self.solver = ValueSolver(prob, config)
        self.value_function = ProblemValueFunction(prob, config, self.solver)
        self._model_at = model_at
        self._cache: Dict[tuple, Any] = {}
        self._lock = threading.Lock()

    @property
    def has_custom_model(self) -> bool:
        return self._model_at is not None

    def _cached(self, key: tuple, compute: Callable[[], Any]) -> Any:
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = compute()
        with self._lock:
            return self._cache.setdefault(key, value)

    def require_smooth(self) -> None:
        if not self.has_custom_model and not self.prob.is_smooth:
            raise NonSmoothModel(
                f"problem {self.prob.name!r} uses nonsmooth functions; multiplier sets need smooth f and P"
            )

    def model(self, y: Sequence[float]) -> LocalModel:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if self._model_at is not None:
            return self._model_at(y)
        return self._cached(
            ("model", _key(y)),
            lambda: LocalModel.at(self.prob, self.x_bar, y, SOLVED_POINT_TOL),
        )

    def stability(self, u: Sequence[float]) -> Dict[StabilityProperty, StabilityVerdict]:
        def compute():
            verdicts = stability_diagnostics(
                self.prob, self.x_bar, u, self.schedule, self.config, self.solver
            )
            return {v.property: v for v in verdicts}

        return self._cached(("stability", _key(u)), compute)

    def sweep(self, u: Sequence[float]) -> SubgradientSweep:
        return self._cached(
            ("sweep", _key(u)),
            lambda: subgradient_sweep(
                self.value_function, self.x_bar, u, self.schedule, self.config
            ),
        )

    def derivative(self, u: Sequence[float]) -> DiniEstimate:
        """Dini bounds for u != 0, Hadamard bounds at u = 0."""
        if is_zero_direction(np.atleast_1d(u), self.config.zero_direction_tol):
            return self._cached(
                ("hadamard", _key(u)),
                lambda: hadamard(self.value_function, self.x_bar, u, self.schedule, self.config),
            )
        return self._cached(
            ("dini", _key(u)),
            lambda: dini(self.value_function, self.x_bar, u, self.schedule, self.config),
        )

    def continuity(self, u: Sequence[float]) -> ContinuityVerdict:
        return self._cached(
            ("continuity", _key(u)),
            lambda: continuity_diagnostic(
                self.value_function, self.x_bar, u, self.schedule, self.config
            ),
        )

    def lipschitz(self, u: Sequence[float]) -> LipschitzVerdict:
        return self._cached(
            ("lipschitz", _key(u)),
            lambda: lipschitz_verdict(
                self.value_function, self.x_bar, u, self.schedule, self.config
            ),
        )

    def solutions(self, u: Sequence[float]) -> SetEstimate:
        return self._cached(
            ("solutions", _key(u)),
            lambda: directional_solutions(
                self.prob, self.x_bar, u, self.schedule, self.config, self.solver
            ),
        )

    def critical_cone(self, model: LocalModel, u: Sequence[float]) -> CriticalConeSpec:
        base = linearization_from_tangent(model.tangent, model.J_x, model.J_y, u)
        return critical_cone_from(
            base, model.grad_x, model.grad_y, u, self.derivative(u), self.config
        )


def _context(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    schedule: SequenceSchedule,
    config: AnalysisConfig,
    context: Optional[AnalysisContext],
) -> AnalysisContext:
    return context if context is not None else AnalysisContext(prob, x_bar, schedule, config)


def solution_points(ctx: AnalysisContext, u: Sequence[float], variant: Variant) -> List[np.ndarray]:
    """
    The solution points a theorem variant ranges over.

    (i) and (ii) use the estimated S(x_bar; u), cut to the compact set of the
    restricted inf-compactness diagnostic under (i); (iii) and (iv) use the
    single point at which the stability property was observed.
    """
    stability = ctx.stability(u)
    if variant.uses_whole_directional_solution_set:
        points = list(ctx.solutions(u).points)
        omega = stability[StabilityProperty.RESTRICTED_INF_COMPACT].omega
        if variant == Variant.RESTRICTED_INF_COMPACT and omega is not None:
            lo, hi = omega
            points = [y for y in points if np.all(y >= lo - 1e-9) and np.all(y <= hi + 1e-9)]
        return points
    point = stability[variant.prerequisite].point
    return [] if point is None else [np.asarray(point, dtype=float)]


def multiplier_sets(
    ctx: AnalysisContext, y: Sequence[float], u: Sequence[float], alpha: int, variant: Variant
) -> List[MultiplierSet]:
    """M^alpha_u on the critical cone at u, plus M^alpha_0 on the sphere when the variant uses it."""
    model = ctx.model(y)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    sets = [
        multipliers_from_model(
            model, alpha, ctx.critical_cone(model, u), u, DirectionMode.DIR_U, ctx.config
        )
    ]
    if variant.uses_sphere_term:
        zero = np.zeros(model.n)
        sets.append(
            multipliers_from_model(
                model,
                alpha,
                ctx.critical_cone(model, zero),
                zero,
                DirectionMode.DIR0_SPHERE,
                ctx.config,
            )
        )
    return sets


@dataclass
class InclusionVerdict:
    """
    Outcome of checking an oracle estimate against a union of polyhedra.

    Attributes:
        theorem: Which estimate was checked.
        variant: Hypothesis variant, when the check has one.
        status: Holds, Violated or Inconclusive.
        lhs: The oracle estimate.
        rhs: Pieces of the right-hand side.
        distances: Infinity-norm distance of each lhs point, then each lhs ray, to rhs.
        witness: The first member farther than `incl_tol`, with its shell.
        multiplier_sets: The sets the pieces were projected from.
        provenance: Hypotheses, tolerances and diagnostics the verdict rests on.
    """

    theorem: str
    variant: Optional[Variant]
    status: InclusionStatus
    lhs: SetEstimate
    rhs: List[Polyhedron] = field(default_factory=list)
    distances: List[float] = field(default_factory=list)
    witness: Optional[dict] = None
    multiplier_sets: List[MultiplierSet] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)


def _nearest_shell(sweep: SubgradientSweep, xi: np.ndarray, ray: bool) -> dict:
    best, best_d = None, math.inf
    for j in sorted(sweep.tracks):
        for s in sweep.tracks[j]:
            if s.subgradient is None:
                continue
            g = unit(s.subgradient) if ray else s.subgradient
            d = float(np.max(np.abs(g - xi)))
            if d < best_d:
                best, best_d = s, d
    if best is None:
        return {}
    return {"k": best.k, "j": best.j, "t": best.t, "x": best.point.tolist()}


def _distances(
    members: List[Tuple[np.ndarray, bool]], rhs: List[Polyhedron]
) -> List[float]:
    return [min((P.distance_inf(xi) for P in rhs), default=math.inf) for xi, _ in members]


def check_upper_estimate(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    u: Sequence[float],
    which: Which,
    variant: Variant,
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
    context: Optional[AnalysisContext] = None,
) -> InclusionVerdict:
    """
    Check the upper estimate of the directional limiting (`Which.LIMITING`)
    or singular (`Which.SINGULAR`) subdifferential of V.

    The right-hand side ranges over the solution points of the variant and
    takes the zeta-projections of M^alpha_u on the critical cone at u, plus
    M^alpha_0 on the unit sphere of the critical cone at 0 for variants (i)
    and (iii). The origin of the singular estimate is always covered.

    Raises:
        NonSmoothModel: if f or P is not smooth.
        StabilityPrereqFailed: if the variant's stability property empirically fails.
    """
    ctx = _context(prob, x_bar, schedule, config, context)
    ctx.require_smooth()
    u = np.atleast_1d(np.asarray(u, dtype=float))
    prereq = ctx.stability(u)[variant.prerequisite]
    if prereq.verdict == Verdict.FAILS:
        raise StabilityPrereqFailed(
            f"variant ({variant.value}) needs {prereq.property.value}, which empirically fails"
        )
    alpha = 1 if which == Which.LIMITING else 0
    sweep = ctx.sweep(u)
    lhs = sweep.limiting if alpha else sweep.singular
    ys = solution_points(ctx, u, variant)

    sets = [s for y in ys for s in multiplier_sets(ctx, y, u, alpha, variant)]
    rhs = [piece for s in sets for piece in s.zeta_pieces]
    members = [(p, False) for p in lhs.points] + [(r, True) for r in lhs.rays]
    distances = _distances(members, rhs)

    witness = None
    for (xi, ray), d in zip(members, distances):
        if d > ctx.config.incl_tol:
            witness = {
                "zeta": xi.tolist(),
                "kind": "ray" if ray else "point",
                "distance": d,
                "shell": _nearest_shell(sweep, xi, ray),
            }
            break

    derivative = ctx.derivative(u)
    provenance = {
        "theorem": which.value,
        "variant": variant.value,
        "prerequisite": prereq.property.value,
        "prerequisite_verdict": prereq.verdict.value,
        "solutions": [y.tolist() for y in ys],
        "solution_source": "estimated",
        "derivative": {"kind": derivative.kind, "lower": derivative.lower, "upper": derivative.upper},
        "incl_tol": ctx.config.incl_tol,
    }
    if not is_zero_direction(u, ctx.config.zero_direction_tol):
        provenance["hypothesis"] = "P directionally differentiable"

    if witness is not None and not ys:
        status = InclusionStatus.INCONCLUSIVE
        provenance["reason"] = "no solution point for the variant"
    elif witness is not None:
        status = InclusionStatus.VIOLATED
    elif not lhs.converged:
        status = InclusionStatus.INCONCLUSIVE
        provenance["reason"] = "oracle sweep did not converge"
    else:
        status = InclusionStatus.HOLDS
    logger.debug(
        f"{which.value} ({variant.value}) along {u.tolist()}: {status.value}, "
        f"{len(members)} lhs members, {len(rhs)} rhs pieces"
    )
    return InclusionVerdict(
        which.value, variant, status, lhs, rhs, distances,
        None if status != InclusionStatus.VIOLATED else witness,
        sets, provenance,
    )


@dataclass
class RegularityVerdict:
    status: RegularityStatus
    witness: Optional[dict] = None


def foscms_from_model(
    model: LocalModel, u: Sequence[float], v_probe: Sequence[float]
) -> RegularityVerdict:
    """
    First-order sufficient condition for directional metric subregularity.

    Certified when lambda = 0 is the only multiplier in N_Gamma(P; w) with
    grad P^T lambda = 0, w = grad P (u, v_probe). A direction w outside the
    tangent cone leaves nothing to check.
    """
    w = model.graphical_derivative(np.atleast_1d(u), np.atleast_1d(v_probe))
    N = restrict_normal_cone(model.normal, model.tangent, w)
    if N.empty:
        return RegularityVerdict(RegularityStatus.CERTIFIED)
    K = N.to_polyhedron()
    for row in np.hstack([model.J_x, model.J_y]).T:
        K = K.with_equality(row, 0.0)
    lam = nonzero_point(K)
    if lam is None:
        return RegularityVerdict(RegularityStatus.CERTIFIED)
    return RegularityVerdict(
        RegularityStatus.NOT_CERTIFIED, {"lambda": lam.tolist(), "w": w.tolist()}
    )


def foscms_check(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    y: Sequence[float],
    u: Sequence[float],
    v_probe: Sequence[float],
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> RegularityVerdict:
    """
    Test FOSCMS at (x_bar, y) in direction (u, v_probe).

    Raises:
        NonSmoothModel: if f or P is not smooth.
    """
    return foscms_from_model(LocalModel.at(prob, x_bar, y, config.activity_tol), u, v_probe)


def probe_direction(model: LocalModel, u: np.ndarray) -> np.ndarray:
    v = linearization_from_tangent(model.tangent, model.J_x, model.J_y, u).feasible_point
    return np.zeros(model.m) if v is None else v


@dataclass
class LipschitzCertificate:
    """
    Result of the directional Lipschitz sufficient condition.

    Attributes:
        status: Certified or NotCertified.
        reason: Why the condition could not be certified.
        witness: A nonzero zeta (or an unbounded direction) of the singular union.
        pieces: Zeta-pieces of the singular multiplier union.
        provenance: Variant, solution points and prerequisite verdicts.
    """

    status: Certification
    reason: str = ""
    witness: Optional[dict] = None
    pieces: List[Polyhedron] = field(default_factory=list)
    provenance: Dict[str, Any] = field(default_factory=dict)


def _nonzero_in(piece: Polyhedron) -> Optional[dict]:
    if piece.is_empty:
        return None
    for i in range(piece.dim):
        for sign in (1.0, -1.0):
            c = np.zeros(piece.dim)
            c[i] = sign
            res = piece.maximize(c)
            # a nonempty piece without an optimum is unbounded along c
            if not res.optimal:
                return {"direction": c.tolist(), "unbounded": True}
            if res.fun > ZERO_TOL:
                return {"zeta": res.x.tolist(), "value": float(res.fun)}
    return None


def check_lipschitz_sufficient(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    u: Sequence[float],
    variant: Variant,
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
    context: Optional[AnalysisContext] = None,
) -> LipschitzCertificate:
    """
    Sufficient condition for V to be Lipschitz around x_bar in direction u.

    Certified when the variant's stability property does not fail, V is not
    discontinuous along u (u != 0), FOSCMS holds at every solution point and
    the zeta-projections of the singular multiplier sets are exactly {0}:
    nonempty, with no nonzero point. Each piece is tested by maximizing +-zeta_i.

    Raises:
        NonSmoothModel: if f or P is not smooth.
    """
    ctx = _context(prob, x_bar, schedule, config, context)
    ctx.require_smooth()
    u = np.atleast_1d(np.asarray(u, dtype=float))
    prereq = ctx.stability(u)[variant.prerequisite]
    provenance: Dict[str, Any] = {
        "variant": variant.value,
        "prerequisite": prereq.property.value,
        "prerequisite_verdict": prereq.verdict.value,
    }

    def not_certified(reason: str, witness: Optional[dict] = None, pieces=()) -> LipschitzCertificate:
        return LipschitzCertificate(
            Certification.NOT_CERTIFIED, reason, witness or {"reason": reason}, list(pieces), provenance
        )

    if prereq.verdict == Verdict.FAILS:
        return not_certified(f"{prereq.property.value} empirically fails")
    if not is_zero_direction(u, ctx.config.zero_direction_tol):
        continuity = ctx.continuity(u)
        provenance["continuity"] = continuity.status.value
        if continuity.status == ContinuityStatus.DISCONTINUOUS:
            return not_certified("V is discontinuous in direction u", continuity.witness)

    ys = solution_points(ctx, u, variant)
    provenance["solutions"] = [y.tolist() for y in ys]
    if not ys:
        return not_certified("no solution point for the variant")

    pieces: List[Polyhedron] = []
    for y in ys:
        model = ctx.model(y)
        regularity = foscms_from_model(model, u, probe_direction(model, u))
        if regularity.status != RegularityStatus.CERTIFIED:
            return not_certified(
                f"FOSCMS not certified at y={y.tolist()}", regularity.witness
            )
        for s in multiplier_sets(ctx, y, u, 0, variant):
            pieces.extend(s.zeta_pieces)

    if not pieces:
        return not_certified("singular multiplier union is empty")
    for piece in pieces:
        witness = _nonzero_in(piece)
        if witness is not None:
            return not_certified("nonzero singular multiplier", witness, pieces)
    return LipschitzCertificate(Certification.CERTIFIED, "", None, pieces, provenance)


@dataclass
class AbadieVerdict:
    status: AbadieStatus
    witness: Optional[dict] = None
    generators: List[np.ndarray] = field(default_factory=list)


def _arc_steps(schedule: SequenceSchedule) -> np.ndarray:
    steps = schedule.steps
    return steps[3:6] if len(steps) >= 6 else steps[-3:]


def abadie_check(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    y: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
    model: Optional[LocalModel] = None,
) -> AbadieVerdict:
    """
    Compare the tangent cone of the feasible set {(x, y) | P(x, y) in Gamma}
    with its linearization at (x_bar, y).

    A generator g of the linearization is realized when a feasible point lies
    within arc_tol * t of (x_bar, y) + t g for every probe step t. Sphere
    directions realized this way but far from the linearization make the
    verdict inconclusive.

    Raises:
        NonSmoothModel: if f or P is not smooth.
    """
    model = model or LocalModel.at(prob, x_bar, y, config.activity_tol)
    M = np.hstack([model.J_x, model.J_y])
    L = model.tangent.affine_image_preimage(M, np.zeros(model.p))
    gens = GeneratorCone.from_polyhedron(L).generators()
    z_bar = np.r_[model.x, model.y]
    ts = _arc_steps(schedule)

    def realized(d: np.ndarray) -> List[bool]:
        return [
            restore_feasible_point(prob, z_bar + t * d, config.arc_tol * t, config) is not None
            for t in ts
        ]

    undecided = None
    for g in gens:
        hits = realized(g)
        if not any(hits):
            return AbadieVerdict(
                AbadieStatus.STRICT_INCLUSION,
                {"direction": g.tolist(), "t": ts.tolist()},
                gens,
            )
        if not all(hits) and undecided is None:
            undecided = {"direction": g.tolist(), "realized": hits}

    dim = model.n + model.m
    for d in sphere_directions(dim, 2 * dim + 2, config.seed):
        if L.distance_inf(d) > 2 * config.arc_tol and all(realized(d)):
            undecided = undecided or {"direction": d.tolist(), "outside_linearization": True}
    if undecided is not None:
        return AbadieVerdict(AbadieStatus.INCONCLUSIVE, undecided, gens)
    return AbadieVerdict(AbadieStatus.EQUAL, None, gens)


@dataclass
class DanskinResult:
    """
    Partial gradients over the directional solution set and their hull.

    Attributes:
        gradient_set: grad_x f(x_bar, y) for each estimated solution y, clustered.
        hull: Convex hull of `gradient_set`.
        inclusion: The limiting estimate checked against `gradient_set`.
    """

    gradient_set: List[np.ndarray]
    hull: Polyhedron
    inclusion: Optional[InclusionVerdict] = None


def _partial_x(prob: ParametricProblem, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    try:
        return grad(prob.objective, prob.point(x, y), prob.x_names)
    except NonSmoothPoint as e:
        raise NonSmoothModel(str(e)) from e


def danskin_sets(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
    context: Optional[AnalysisContext] = None,
) -> DanskinResult:
    """
    Directional Danskin sets for a problem whose constraints do not involve x.

    Raises:
        ConstraintDependsOnParameter: if some constraint expression uses x.
        NonSmoothModel: if f is not differentiable in x at a solution.
    """
    if prob.constraints_depend_on_parameter:
        raise ConstraintDependsOnParameter(
            f"problem {prob.name!r} has constraints depending on x"
        )
    ctx = _context(prob, x_bar, schedule, config, context)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    solutions = ctx.solutions(u)
    grads = [_partial_x(prob, ctx.x_bar, y) for y in solutions.points]
    grads = sorted(grads, key=lambda g: tuple(np.round(g, 12)))
    gradient_set = [rep for rep, _ in cluster_points(grads, ctx.config.cluster_tol)]
    hull = v_to_h(gradient_set, dim=prob.n, dim_cap=ctx.config.hv_dim_cap)

    lhs = ctx.sweep(u).limiting
    members = [(p, False) for p in lhs.points]
    points = [Polyhedron.origin(prob.n).affine_image_preimage(np.eye(prob.n), -g) for g in gradient_set]
    distances = _distances(members, points)
    witness = next(
        ({"zeta": xi.tolist(), "distance": d} for (xi, _), d in zip(members, distances) if d > ctx.config.incl_tol),
        None,
    )
    if witness is not None:
        status = InclusionStatus.VIOLATED
    elif not lhs.converged:
        status = InclusionStatus.INCONCLUSIVE
    else:
        status = InclusionStatus.HOLDS
    inclusion = InclusionVerdict(
        "Danskin", None, status, lhs, points, distances, witness,
        provenance={"solutions": [y.tolist() for y in solutions.points]},
    )
    return DanskinResult(gradient_set, hull, inclusion)


def mfcq_holds(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    y: Sequence[float],
    config: AnalysisConfig = DEFAULT_CONFIG,
    model: Optional[LocalModel] = None,
) -> bool:
    """Whether lambda = 0 is the only singular multiplier at (x_bar, y)."""
    model = model or LocalModel.at(prob, x_bar, y, config.activity_tol)
    singular = multipliers_from_model(model, 0, config=config)
    return all(nonzero_point(p.polyhedron) is None for p in singular.pieces)


@dataclass
class GauvinDubeauVerdict:
    status: InclusionStatus
    mfcq: bool
    clarke: Optional[ClarkeEstimate] = None
    hull: Optional[Polyhedron] = None
    distances: List[float] = field(default_factory=list)
    witness: Optional[dict] = None
    reason: str = ""


def gauvin_dubeau_check(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
    context: Optional[AnalysisContext] = None,
) -> GauvinDubeauVerdict:
    """
    Check the Clarke estimate of V at x_bar against the convex hull of
    grad_x L(x_bar, y, lambda) over y in S(x_bar) and classical multipliers.

    Inconclusive when MFCQ fails at some solution or V does not look Lipschitz.

    Raises:
        NonSmoothModel: if f or P is not smooth.
    """
    ctx = _context(prob, x_bar, schedule, config, context)
    ctx.require_smooth()
    zero = np.zeros(prob.n)
    ys = ctx.solutions(zero).points
    models = [ctx.model(y) for y in ys]
    mfcq = all(mfcq_holds(prob, ctx.x_bar, m.y, ctx.config, m) for m in models)
    if not mfcq:
        return GauvinDubeauVerdict(InclusionStatus.INCONCLUSIVE, False, reason="MFCQ fails at some solution")
    try:
        clarke = directional_clarke_subdiff(
            ctx.value_function, ctx.x_bar, zero, ctx.schedule, ctx.config
        )
    except NotDirectionallyLipschitz as e:
        return GauvinDubeauVerdict(InclusionStatus.INCONCLUSIVE, True, reason=str(e))

    pieces = [
        z
        for m in models
        for z in multipliers_from_model(m, 1, config=ctx.config).zeta_pieces
    ]
    hull = hull_of_union(pieces) if pieces else Polyhedron.empty(prob.n)
    distances = [hull.distance_inf(v) for v in clarke.vertices]
    witness = next(
        ({"zeta": v.tolist(), "distance": d} for v, d in zip(clarke.vertices, distances) if d > ctx.config.incl_tol),
        None,
    )
    status = InclusionStatus.VIOLATED if witness else InclusionStatus.HOLDS
    return GauvinDubeauVerdict(status, True, clarke, hull, distances, witness)


def _additive_rest(e: Expr, name: str) -> Optional[Expr]:
    """e - name when e is name plus (or minus) terms, else None."""
    if isinstance(e, Var) and e.name == name:
        return Const(0.0)
    if isinstance(e, BinOp) and e.op in "+-":
        rest = _additive_rest(e.left, name)
        if rest is not None:
            return BinOp(e.op, rest, e.right)
        if e.op == "+":
            rest = _additive_rest(e.right, name)
            if rest is not None:
                return BinOp("+", e.left, rest)
    return None


def is_additive_perturbation(prob: ParametricProblem) -> bool:
    """Whether P(x, y) = x + P~(y) with P~ free of x."""
    if prob.p != prob.n:
        return False
    xs = set(prob.x_names)
    for c, name in zip(prob.constraints, prob.x_names):
        rest = _additive_rest(c, name)
        if rest is None or rest.variables() & xs:
            return False
    return True


@dataclass
class AdditiveSets:
    """
    Multiplier sets at one solution of an additively perturbed problem.

    `zeta` maps alpha to the zeta-pieces, obtained from the multiplier pieces
    by the shift alpha * grad_x f.
    """

    y: np.ndarray
    sets: Dict[int, List[MultiplierSet]]
    zeta: Dict[int, List[Polyhedron]]
    foscms: RegularityStatus = RegularityStatus.CERTIFIED


def additive_perturbation_sets(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
    context: Optional[AnalysisContext] = None,
) -> List[AdditiveSets]:
    """
    Directional multiplier sets of min f(x, y) s.t. x + P~(y) in Gamma, one
    entry per estimated solution in S(x_bar; u).

    Raises:
        ValueError: if P is not of the form x + P~(y).
        NonSmoothModel: if f or P is not smooth.
    """
    if not is_additive_perturbation(prob):
        raise ValueError(f"problem {prob.name!r} is not of the form x + P(y)")
    ctx = _context(prob, x_bar, schedule, config, context)
    ctx.require_smooth()
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = []
    for y in ctx.solutions(u).points:
        model = ctx.model(y)
        sets: Dict[int, List[MultiplierSet]] = {}
        zeta: Dict[int, List[Polyhedron]] = {}
        for alpha in (1, 0):
            sets[alpha] = multiplier_sets(ctx, y, u, alpha, Variant.RESTRICTED_INF_COMPACT)
            shift = -alpha * model.grad_x
            zeta[alpha] = [
                piece.polyhedron.affine_image_preimage(np.eye(prob.n), shift)
                for s in sets[alpha]
                for piece in s.pieces
            ]
        out.append(AdditiveSets(np.asarray(y), sets, zeta))
    return out
