"""
Desk-scale inner solver.

V(x) is computed by a dense grid over the decision box followed by a batched
pattern search (coordinate and diagonal directions, halving steps) from the
best grid cells. Equality rows are kept satisfied by Gauss-Newton corrections.
"""

import itertools
import logging
import math
import threading
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .engine import DEFAULT_CONFIG, AnalysisConfig, StabilityProperty, Verdict
from .errors import DimensionOverflow, ValueAtBaseInfinite
from .expressions.problem import ParametricProblem
from .geometry.neighborhood import (
    DirectionalNeighborhood,
    SequenceSchedule,
    iter_dir_neighborhood,
)
from .utils import cluster_points, is_zero_direction, loglog_slope

logger = logging.getLogger(__name__)

# Smallest step of the pattern search, relative to the box width
STEP_FLOOR = 1e-12
MAX_ITER = 600


@dataclass(frozen=True)
class SolveCertificate:
    grid_shape: Tuple[int, ...]
    grid_step: Tuple[float, ...]
    starts: int
    iterations: int


@dataclass(frozen=True, eq=False)
class SolveResult:
    """
    Estimated V(x) and S(x).

    `value` is math.inf when no feasible point was found; argmins are then empty.
    """

    value: float
    argmins: Tuple[np.ndarray, ...]
    certificate: Optional[SolveCertificate] = None

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.value)

    def distance_to(self, y: np.ndarray) -> float:
        if not self.argmins:
            return math.inf
        return float(min(np.linalg.norm(a - y) for a in self.argmins))


def search_directions(dim: int) -> np.ndarray:
    """All nonzero sign patterns for dim <= 3; signed axes and pairs beyond."""
    if dim <= 3:
        dirs = [v for v in itertools.product((-1.0, 0.0, 1.0), repeat=dim) if any(v)]
        return np.array(dirs)
    dirs = []
    for i in range(dim):
        for s in (1.0, -1.0):
            e = np.zeros(dim)
            e[i] = s
            dirs.append(e)
    for i, j in itertools.combinations(range(dim), 2):
        for si, sj in itertools.product((1.0, -1.0), repeat=2):
            e = np.zeros(dim)
            e[i], e[j] = si, sj
            dirs.append(e)
    return np.array(dirs)


def pattern_search(
    objective: Callable[[np.ndarray], np.ndarray],
    feasible: Callable[[np.ndarray], np.ndarray],
    Y0: np.ndarray,
    h0: float,
    h_min: float,
    lower: np.ndarray,
    upper: np.ndarray,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    target: Optional[float] = None,
    max_iter: int = MAX_ITER,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Batched compass search from every row of Y0.

    Successful steps double (up to h0), failed ones halve; a start stops once
    its step falls below h_min or its objective reaches `target`.
    """
    Y = np.array(Y0, dtype=float)
    S, d = Y.shape
    D = search_directions(d)
    F = objective(Y)
    F = np.where(np.isfinite(F) & feasible(Y), F, np.inf)
    h = np.full(S, float(h0))
    it = 0
    for it in range(1, max_iter + 1):
        active = h >= h_min
        if target is not None:
            active &= F > target
        if not active.any():
            break
        idx = np.flatnonzero(active)
        T = Y[idx, None, :] + h[idx, None, None] * D[None, :, :]
        T = np.clip(T, lower, upper)
        flat = T.reshape(-1, d)
        if project is not None:
            flat = project(flat)
            T = flat.reshape(T.shape)
        FT = objective(flat)
        ok = feasible(flat) & np.isfinite(FT)
        FT = np.where(ok, FT, np.inf).reshape(len(idx), -1)
        best = np.argmin(FT, axis=1)
        best_F = FT[np.arange(len(idx)), best]
        current = F[idx]
        improved = best_F < current - 1e-15 * (1.0 + np.abs(np.where(np.isfinite(current), current, 0.0)))
        for pos, i in enumerate(idx):
            if improved[pos]:
                Y[i] = T[pos, best[pos]]
                F[i] = best_F[pos]
                h[i] = min(2.0 * h[i], h0)
            else:
                h[i] /= 2.0
    return Y, F, it


def grid_shape(m: int, config: AnalysisConfig) -> int:
    """Grid points per decision coordinate."""
    if m == 1:
        return config.grid_points
    per_dim = int(math.floor(config.max_grid_total ** (1.0 / m) + 1e-9))
    return max(3, min(config.grid_points, per_dim))


def _equality_projector(
    prob: ParametricProblem, x: np.ndarray
) -> Optional[Callable[[np.ndarray], np.ndarray]]:
    G = prob.gamma_set
    if not G.n_eqs:
        return None
    lo, hi = prob.box_lower, prob.box_upper

    def residual(Y: np.ndarray) -> np.ndarray:
        Z = prob.constraint_values(x, Y)
        return Z @ G.E.T - G.f

    def project(Y: np.ndarray) -> np.ndarray:
        Y = Y.copy()
        for _ in range(3):
            r = residual(Y)
            step = 1e-7 * (1.0 + np.abs(Y))
            J = np.empty((Y.shape[0], r.shape[1], Y.shape[1]))
            for i in range(Y.shape[1]):
                Yp, Ym = Y.copy(), Y.copy()
                Yp[:, i] += step[:, i]
                Ym[:, i] -= step[:, i]
                J[:, :, i] = (residual(Yp) - residual(Ym)) / (2.0 * step[:, i, None])
            good = np.all(np.isfinite(r), axis=1) & np.all(np.isfinite(J), axis=(1, 2))
            if not good.any():
                break
            delta = np.zeros_like(Y)
            delta[good] = -(np.linalg.pinv(J[good]) @ r[good][..., None])[..., 0]
            Y = np.clip(Y + delta, lo, hi)
        return Y

    return project


def _diverse_starts(Y: np.ndarray, order: np.ndarray, count: int, spacing: float) -> np.ndarray:
    chosen: List[int] = []
    for i in order:
        if all(np.max(np.abs(Y[i] - Y[j])) > spacing for j in chosen):
            chosen.append(int(i))
            if len(chosen) == count:
                break
    return Y[chosen]


def _thin_argmins(points: List[np.ndarray], cap: int) -> List[np.ndarray]:
    """Keep at most `cap` points, always keeping coordinate extremes."""
    if len(points) <= cap:
        return points
    P = np.array(points)
    keep = set()
    for i in range(P.shape[1]):
        keep.add(int(np.argmin(P[:, i])))
        keep.add(int(np.argmax(P[:, i])))
    rest = [i for i in range(len(points)) if i not in keep]
    slots = cap - len(keep)
    if slots > 0:
        picks = np.linspace(0, len(rest) - 1, slots).round().astype(int)
        keep.update(rest[i] for i in picks)
    return [points[i] for i in sorted(keep)]


def solve_value(
    prob: ParametricProblem,
    x: Sequence[float],
    tol: Optional[float] = None,
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> SolveResult:
    """
    Estimate V(x) and S(x) by grid search plus multistart refinement.

    Args:
        prob: The parametric problem.
        x: Parameter value.
        tol: Relative value tolerance; defaults to `config.value_tol`.
        config: Analysis configuration.

    Returns:
        A SolveResult; the value is math.inf when no feasible point exists.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if prob.m > config.max_decision_dim:
        raise DimensionOverflow(
            f"decision dimension {prob.m} exceeds the supported {config.max_decision_dim}"
        )
    tol = config.value_tol if tol is None else tol
    lo, hi = prob.box_lower, prob.box_upper
    g = grid_shape(prob.m, config)
    axes = [np.linspace(lo[i], hi[i], g) for i in range(prob.m)]
    Y = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=1)
    step = (hi - lo) / (g - 1)

    F = prob.objective_values(x, Y)
    viol, feasible = prob.violation(x, Y, config.eq_tol)
    feasible &= np.isfinite(F)

    project = _equality_projector(prob, x)
    width = float(np.max(hi - lo))
    h0 = float(np.max(step))
    h_min = STEP_FLOOR * width

    def objective(P: np.ndarray) -> np.ndarray:
        return prob.objective_values(x, P)

    def is_feasible(P: np.ndarray) -> np.ndarray:
        return prob.violation(x, P, config.eq_tol)[1]

    if feasible.any():
        cand = np.flatnonzero(feasible)
        order = cand[np.argsort(F[cand], kind="stable")]
        starts = _diverse_starts(Y, order, config.n_starts, 2.0 * h0)
    else:
        # restore feasibility from the least violated cells first
        order = np.argsort(viol, kind="stable")
        seeds = _diverse_starts(Y, order[np.isfinite(viol[order])], config.n_starts, 2.0 * h0)
        if not len(seeds):
            return SolveResult(math.inf, (), SolveCertificate((g,) * prob.m, tuple(step), 0, 0))
        if project is not None:
            seeds = project(seeds)
        seeds, V0, _ = pattern_search(
            lambda P: prob.violation(x, P, config.eq_tol)[0],
            lambda P: np.ones(P.shape[0], dtype=bool),
            seeds,
            h0,
            h_min,
            lo,
            hi,
            project=project,
            target=0.0,
        )
        ok = is_feasible(seeds) & np.isfinite(objective(seeds))
        if not ok.any():
            logger.debug(f"no feasible point found at x={x.tolist()}")
            return SolveResult(math.inf, (), SolveCertificate((g,) * prob.m, tuple(step), len(seeds), 0))
        starts = seeds[ok]

    refined, FR, iterations = pattern_search(
        objective, is_feasible, starts, h0, h_min, lo, hi, project=project
    )
    finite = np.isfinite(FR)
    if not finite.any():
        return SolveResult(math.inf, (), SolveCertificate((g,) * prob.m, tuple(step), len(starts), iterations))

    value = float(np.min(FR[finite]))
    if feasible.any():
        value = min(value, float(np.min(F[feasible])))
    threshold = value + max(config.argmin_tol, tol * 1e-4 * abs(value)) * (1.0 + abs(value))

    pool = [r for r, v in zip(refined, FR) if np.isfinite(v) and v <= threshold]
    if feasible.any():
        near = np.flatnonzero(feasible & (F <= threshold))
        pool.extend(Y[i] for i in near)
    pool.sort(key=lambda p: tuple(np.round(p, 12)))
    argmins = [rep for rep, _ in cluster_points(pool, config.cluster_tol)]
    argmins = _thin_argmins(argmins, config.max_argmins)
    return SolveResult(
        value,
        tuple(argmins),
        SolveCertificate((g,) * prob.m, tuple(float(s) for s in step), len(starts), iterations),
    )


def _key(x: np.ndarray) -> bytes:
    return np.round(np.asarray(x, dtype=float), 15).tobytes()


class ValueSolver:
    """
    Caching front end to `solve_value` for one problem and configuration.

    The cache is shared by every analysis stage run on the same problem and
    is safe to use from worker threads.
    """

    def __init__(self, prob: ParametricProblem, config: AnalysisConfig = DEFAULT_CONFIG):
        self.prob = prob
        self.config = config
        self._cache: Dict[bytes, SolveResult] = {}
        self._lock = threading.Lock()

    def solve(self, x: Sequence[float]) -> SolveResult:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        key = _key(x)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        result = solve_value(self.prob, x, config=self.config)
        with self._lock:
            self._cache.setdefault(key, result)
        return result

    def value(self, x: Sequence[float]) -> float:
        return self.solve(x).value

    @property
    def cache_size(self) -> int:
        with self._lock:
            return len(self._cache)


def _solver_for(
    prob: ParametricProblem, solver: Optional[ValueSolver], config: AnalysisConfig
) -> ValueSolver:
    if solver is not None:
        return solver
    return ValueSolver(prob, config)


@dataclass(frozen=True, eq=False)
class ShellSolve:
    k: int
    j: int
    t: float
    x: np.ndarray
    result: SolveResult


@dataclass(frozen=True, eq=False)
class SolutionSweep:
    """Solutions along every sampled sequence x_k = x + t_k u_k."""

    base: SolveResult
    sequences: Dict[int, List[ShellSolve]]


def solution_sweep(
    solver: ValueSolver,
    x_bar: np.ndarray,
    u: np.ndarray,
    schedule: SequenceSchedule,
) -> SolutionSweep:
    config = solver.config
    base = solver.solve(x_bar)
    if not base.feasible:
        raise ValueAtBaseInfinite(f"V is infinite at {x_bar.tolist()}")
    N = DirectionalNeighborhood(x_bar, u, config.epsilon, config.delta)
    sequences: Dict[int, List[ShellSolve]] = {}
    for sample in iter_dir_neighborhood(N, schedule, shrink=True, seed=config.seed):
        result = solver.solve(sample.point)
        sequences.setdefault(sample.j, []).append(
            ShellSolve(sample.k, sample.j, sample.t, sample.point, result)
        )
    return SolutionSweep(base, sequences)


def decays(t: Sequence[float], d: Sequence[float], conv_tol: float) -> Optional[bool]:
    """
    Whether a nonnegative tail sequence tends to zero.

    True when the last value is within conv_tol or the tail decays like a
    positive power of t, False when it stays away from zero without
    decaying, None otherwise.
    """
    d = np.asarray(d, dtype=float)
    if not np.all(np.isfinite(d)):
        return False if np.all(~np.isfinite(d[-2:])) else None
    if d[-1] <= conv_tol:
        return True
    slope = loglog_slope(t, d)
    if slope > 0.05 and d[-1] < d[0]:
        return True
    if slope <= 0.05 and np.min(d) > 10.0 * conv_tol:
        return False
    return None


@dataclass
class SetEstimate:
    """
    Finite point cloud plus unit recession rays approximating a set.

    Attributes:
        points: Estimated members (limits of convergent sequences).
        rays: Unit directions of unbounded sequences.
        rates: Per-point convergence exponent, when measured.
        converged: False when some sampled sequence could not be classified.
        shell_history: Raw per-shell samples for plotting.
        contains_origin: Whether 0 belongs to the represented set by convention.
    """

    points: List[np.ndarray] = field(default_factory=list)
    rays: List[np.ndarray] = field(default_factory=list)
    rates: List[Optional[float]] = field(default_factory=list)
    converged: bool = True
    shell_history: List[dict] = field(default_factory=list)
    contains_origin: bool = False

    @property
    def is_empty(self) -> bool:
        return not self.points and not self.rays and not self.contains_origin


def directional_solutions(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
    solver: Optional[ValueSolver] = None,
) -> SetEstimate:
    """
    Estimate S(x; u), the solutions at x reachable along sequences in direction u.

    For u = 0 this is S(x) itself. For u != 0 a point of S(x) is kept when
    its distance to S(x + t_k u_k) tends to zero along some sampled sequence.

    Raises:
        ValueAtBaseInfinite: if V(x) is infinite.
    """
    solver = _solver_for(prob, solver, config)
    x_bar = np.atleast_1d(np.asarray(x_bar, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    base = solver.solve(x_bar)
    if not base.feasible:
        raise ValueAtBaseInfinite(f"V is infinite at {x_bar.tolist()}")
    if is_zero_direction(u, config.zero_direction_tol):
        return SetEstimate(points=list(base.argmins), rates=[None] * len(base.argmins))

    sweep = solution_sweep(solver, x_bar, u, schedule)
    tail = config.tail
    points, rates = [], []
    history = [
        {"k": s.k, "j": s.j, "t": s.t, "x": s.x.tolist(), "value": s.result.value}
        for j in sorted(sweep.sequences)
        for s in sweep.sequences[j]
    ]
    undecided = False
    for y_bar in base.argmins:
        best_rate = None
        accepted = False
        for j in sorted(sweep.sequences):
            seq = sweep.sequences[j][-tail:]
            if len(seq) < 2:
                continue
            t = [s.t for s in seq]
            d = [s.result.distance_to(y_bar) for s in seq]
            verdict = decays(t, d, config.conv_tol)
            if verdict:
                accepted = True
                rate = math.inf if max(d) == 0 else loglog_slope(t, np.maximum(d, 1e-300))
                best_rate = rate if best_rate is None else max(best_rate, rate)
            elif verdict is None:
                undecided = True
        if accepted:
            points.append(y_bar)
            rates.append(best_rate)
    return SetEstimate(
        points=points, rates=rates, converged=not undecided or bool(points), shell_history=history
    )


@dataclass
class StabilityVerdict:
    """
    Empirical verdict on one stability property of the solution map.

    Failures carry the sequence that falsified the property; passes are
    empirical support only.
    """

    property: StabilityProperty
    verdict: Verdict
    witnesses: List[dict] = field(default_factory=list)
    kappa_estimate: Optional[float] = None
    point: Optional[np.ndarray] = None
    omega: Optional[Tuple[np.ndarray, np.ndarray]] = None


def _calm_ratio_verdict(
    t: np.ndarray, d: np.ndarray, norms: np.ndarray
) -> Tuple[Optional[bool], float]:
    """Bounded-ratio test for d_k <= kappa ||x_k - x||; returns (verdict, kappa)."""
    if np.all(d <= 1e-9):
        return True, float(np.max(d / norms))
    if not np.all(np.isfinite(d)):
        return False, math.inf
    ratio = d / norms
    slope = loglog_slope(t, ratio)
    kappa = float(np.max(ratio))
    if slope >= -0.1:
        return True, kappa
    if np.all(np.diff(ratio) >= 0):
        return False, math.inf
    return None, kappa


def _combine(verdicts: List[Optional[bool]]) -> Optional[bool]:
    """All sequences must pass; any definitive failure fails."""
    if any(v is False for v in verdicts):
        return False
    if verdicts and all(v is True for v in verdicts):
        return True
    return None


def _reconcile(results: Dict[StabilityProperty, StabilityVerdict]) -> None:
    """Downgrade a stronger property's pass when a weaker one it implies fails."""
    implications = (
        (StabilityProperty.INNER_CALM, StabilityProperty.INNER_SEMICONTINUOUS),
        (StabilityProperty.INNER_CALM, StabilityProperty.INNER_CALM_STAR),
        (StabilityProperty.INNER_SEMICONTINUOUS, StabilityProperty.RESTRICTED_INF_COMPACT),
        (StabilityProperty.INNER_CALM_STAR, StabilityProperty.RESTRICTED_INF_COMPACT),
    )
    changed = True
    while changed:
        changed = False
        for strong, weak in implications:
            if (
                results[strong].verdict == Verdict.HOLDS
                and results[weak].verdict == Verdict.FAILS
            ):
                results[strong].verdict = Verdict.INCONCLUSIVE
                results[strong].witnesses.append(
                    {"reason": f"conflicts with failed {weak.value}"}
                )
                changed = True


def _to_verdict(v: Optional[bool]) -> Verdict:
    if v is True:
        return Verdict.HOLDS
    if v is False:
        return Verdict.FAILS
    return Verdict.INCONCLUSIVE


def _omega_box(
    sweep: SolutionSweep, inflation: float
) -> Tuple[np.ndarray, np.ndarray]:
    pts = list(sweep.base.argmins)
    for seq in sweep.sequences.values():
        for s in seq:
            pts.extend(s.result.argmins)
    P = np.array(pts)
    lo, hi = P.min(axis=0), P.max(axis=0)
    pad = inflation * np.maximum(hi - lo, 1e-6)
    return lo - pad, hi + pad


def stability_diagnostics(
    prob: ParametricProblem,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
    solver: Optional[ValueSolver] = None,
) -> List[StabilityVerdict]:
    """
    Empirical verdicts for restricted inf-compactness, inner semicontinuity,
    inner calmness and inner calmness* of the solution map in direction u.

    Raises:
        ValueAtBaseInfinite: if V(x) is infinite.
    """
    solver = _solver_for(prob, solver, config)
    x_bar = np.atleast_1d(np.asarray(x_bar, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    sweep = solution_sweep(solver, x_bar, u, schedule)
    base = sweep.base
    tail = config.tail
    seqs = {j: s[-tail:] for j, s in sweep.sequences.items() if len(s) >= 2}
    results: Dict[StabilityProperty, StabilityVerdict] = {}

    # restricted inf-compactness: solutions must not need more room than the box
    omega = _omega_box(sweep, config.box_inflation)
    lo, hi = prob.box_lower, prob.box_upper
    center, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    wide = ValueSolver(
        replace(prob, y_lower=tuple(center - 2 * half), y_upper=tuple(center + 2 * half)),
        config,
    )
    ric: Optional[bool] = True if sweep.sequences else None
    ric_witness: List[dict] = []
    level = base.value + config.epsilon
    for j, seq in sorted(sweep.sequences.items()):
        for s in seq:
            wider = wide.solve(s.x)
            if not wider.feasible or wider.value >= level:
                continue
            if s.result.feasible:
                gap = s.result.value - wider.value
                if gap <= config.value_tol * (1.0 + abs(s.result.value)) + config.argmin_tol:
                    continue
            ric = False
            ric_witness.append(
                {
                    "j": j,
                    "t": s.t,
                    "x": s.x.tolist(),
                    "value": s.result.value,
                    "wider_value": wider.value,
                }
            )
    results[StabilityProperty.RESTRICTED_INF_COMPACT] = StabilityVerdict(
        StabilityProperty.RESTRICTED_INF_COMPACT, _to_verdict(ric), ric_witness, omega=omega
    )

    # inner semicontinuity and inner calmness at some y in S(x)
    best_isc: Tuple[Optional[bool], Optional[np.ndarray], List[dict]] = (False, None, [])
    best_calm: Tuple[Optional[bool], Optional[np.ndarray], float, List[dict]] = (False, None, math.inf, [])
    rank = {True: 2, None: 1, False: 0}
    for y_bar in base.argmins:
        isc_votes, calm_votes, kappas, witnesses = [], [], [], []
        for j, seq in sorted(seqs.items()):
            t = np.array([s.t for s in seq])
            d = np.array([s.result.distance_to(y_bar) for s in seq])
            norms = np.array([np.linalg.norm(s.x - x_bar) for s in seq])
            isc = decays(t, d, config.conv_tol)
            calm, kappa = _calm_ratio_verdict(t, d, norms)
            isc_votes.append(isc)
            calm_votes.append(calm)
            kappas.append(kappa)
            if isc is False or calm is False:
                witnesses.append({"j": j, "t": t.tolist(), "distance": d.tolist()})
        isc_v = _combine(isc_votes)
        calm_v = _combine(calm_votes)
        if rank[isc_v] > rank[best_isc[0]] or best_isc[1] is None:
            best_isc = (isc_v, y_bar, witnesses)
        kappa = max(kappas) if kappas else math.inf
        if rank[calm_v] > rank[best_calm[0]] or best_calm[1] is None:
            best_calm = (calm_v, y_bar, kappa, witnesses)
    results[StabilityProperty.INNER_SEMICONTINUOUS] = StabilityVerdict(
        StabilityProperty.INNER_SEMICONTINUOUS,
        _to_verdict(best_isc[0] if seqs else None),
        best_isc[2],
        point=best_isc[1],
    )
    results[StabilityProperty.INNER_CALM] = StabilityVerdict(
        StabilityProperty.INNER_CALM,
        _to_verdict(best_calm[0] if seqs else None),
        best_calm[3],
        kappa_estimate=best_calm[2] if best_calm[0] else None,
        point=best_calm[1],
    )

    # inner calmness*: distance from S(x_k) to the whole of S(x)
    star_votes, star_kappas, star_witness = [], [], []
    for j, seq in sorted(seqs.items()):
        t = np.array([s.t for s in seq])
        d = np.array(
            [min((s.result.distance_to(y) for y in base.argmins), default=math.inf) for s in seq]
        )
        norms = np.array([np.linalg.norm(s.x - x_bar) for s in seq])
        v, kappa = _calm_ratio_verdict(t, d, norms)
        star_votes.append(v)
        star_kappas.append(kappa)
        if v is False:
            star_witness.append({"j": j, "t": t.tolist(), "distance": d.tolist()})
    star = _combine(star_votes) if seqs else None
    results[StabilityProperty.INNER_CALM_STAR] = StabilityVerdict(
        StabilityProperty.INNER_CALM_STAR,
        _to_verdict(star),
        star_witness,
        kappa_estimate=max(star_kappas) if star and star_kappas else None,
    )

    _reconcile(results)
    order = (
        StabilityProperty.RESTRICTED_INF_COMPACT,
        StabilityProperty.INNER_SEMICONTINUOUS,
        StabilityProperty.INNER_CALM,
        StabilityProperty.INNER_CALM_STAR,
    )
    for prop in order:
        logger.debug(f"{prop.value}: {results[prop].verdict.value}")
    return [results[p] for p in order]


def restore_feasible_point(
    prob: ParametricProblem,
    z0: np.ndarray,
    radius: float,
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> Optional[np.ndarray]:
    """
    A feasible (x, y) within `radius` (infinity norm) of z0, if one is found.

    Used to realize tangent directions of the feasible set by feasible arcs.
    """
    n = prob.n
    z0 = np.asarray(z0, dtype=float)

    def viol(Z: np.ndarray) -> np.ndarray:
        out = np.empty(Z.shape[0])
        for i, z in enumerate(Z):
            out[i] = prob.violation(z[:n], z[None, n:], config.eq_tol)[0][0]
        return out

    def feasible(Z: np.ndarray) -> np.ndarray:
        return np.array(
            [bool(prob.violation(z[:n], z[None, n:], config.eq_tol)[1][0]) for z in Z]
        )

    if feasible(z0[None])[0]:
        return z0
    lower, upper = z0 - radius, z0 + radius
    Z, V, _ = pattern_search(
        viol,
        lambda Z: np.ones(Z.shape[0], dtype=bool),
        z0[None],
        radius / 4.0,
        radius * 1e-9,
        lower,
        upper,
        target=0.0,
        max_iter=300,
    )
    z = Z[0]
    if feasible(z[None])[0]:
        return z
    if prob.gamma_set.n_eqs and V[0] <= config.eq_tol:
        return z
    return None
