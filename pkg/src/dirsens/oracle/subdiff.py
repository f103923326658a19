"""
Brute-force estimators of the value function's directional objects.

Every estimator walks the shells x + t_k u_k of a directional neighborhood
(see `iter_dir_neighborhood`) and classifies the sampled sequences by their
tail: Cauchy sequences give points, sequences blowing up give unit rays,
anything else marks the estimate as not converged.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..engine import (
    DEFAULT_CONFIG,
    AnalysisConfig,
    ContinuityStatus,
    LipschitzStatus,
    Verdict,
)
from ..errors import DimensionOverflow, NotDirectionallyLipschitz, ValueAtBaseInfinite
from ..expressions.problem import ParametricProblem
from ..geometry.neighborhood import (
    DirectionalNeighborhood,
    SequenceSchedule,
    iter_dir_neighborhood,
    sphere_directions,
)
from ..geometry.polyhedron import Polyhedron, h_to_v, v_to_h
from ..solver import SetEstimate, decays
from ..utils import cluster_points, is_zero_direction, loglog_slope, unit
from .base import DiniEstimate, ValueFunction
from .functions import as_value_function

logger = logging.getLogger(__name__)

Source = Union[ParametricProblem, ValueFunction]

# Log-log slope below which a growing sequence is taken to diverge
DIVERGENCE_SLOPE = -0.1

# Shells compared by the Cauchy test
CAUCHY_SHELLS = 3


def _vec(x: Sequence[float], dim: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if x.shape[0] != dim:
        raise ValueError(f"Expected a vector of length {dim}, got {x.shape[0]}")
    return x


def _base_value(vf: ValueFunction, x_bar: np.ndarray) -> float:
    v0 = vf.value(x_bar)
    if not math.isfinite(v0):
        raise ValueAtBaseInfinite(f"V is infinite at {x_bar.tolist()}")
    return v0


def _map(func: Callable, items: Sequence, workers: int) -> List:
    """Order-preserving map, threaded when more than one worker is configured."""
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]


def divergence_sign(
    t: Sequence[float], values: Sequence[float], config: AnalysisConfig = DEFAULT_CONFIG
) -> int:
    """
    +1 or -1 when a tail sequence blows up with a fixed sign, 0 otherwise.

    A sequence diverges when its magnitude grows strictly and either passes
    the divergence threshold or grows like a negative power of t.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0
    if np.isinf(v[-1]):
        return int(np.sign(v[-1]))
    if not np.all(np.isfinite(v)) or v.size < 2:
        return 0
    signs = np.sign(v)
    if not (np.all(signs > 0) or np.all(signs < 0)):
        return 0
    a = np.abs(v)
    if not np.all(np.diff(a) > 0):
        return 0
    if a[-1] > config.divergence_threshold or loglog_slope(t, a) < DIVERGENCE_SLOPE:
        return int(signs[-1])
    return 0


def _is_cauchy(seq: Sequence[np.ndarray], tol: float) -> bool:
    last = np.atleast_1d(seq[-1])
    scale = 1.0 + float(np.max(np.abs(last)))
    return all(
        float(np.max(np.abs(np.atleast_1d(s) - last))) <= tol * scale
        for s in seq[-CAUCHY_SHELLS:]
    )


def _quotient_bounds(
    t: np.ndarray, q: np.ndarray, config: AnalysisConfig
) -> Tuple[float, float]:
    tail_t, tail_q = t[-config.tail:], q[-config.tail:]
    sign = divergence_sign(tail_t, tail_q, config)
    if sign > 0:
        return math.inf, math.inf
    if sign < 0:
        return -math.inf, -math.inf
    if np.all(np.isfinite(tail_q)) and _is_cauchy(list(tail_q), config.conv_tol):
        return float(tail_q[-1]), float(tail_q[-1])
    return float(np.min(tail_q)), float(np.max(tail_q))


def dini(
    source: Source,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> DiniEstimate:
    """
    Lower and upper Dini derivatives of V at x_bar in direction u.

    Quotients (V(x + t_k u) - V(x)) / t_k are inspected over the last
    `config.tail` shells; a divergent tail is reported as an infinite bound.

    Raises:
        ValueAtBaseInfinite: if V(x_bar) is infinite.
    """
    vf = as_value_function(source, config)
    x_bar, u = _vec(x_bar, vf.dim), _vec(u, vf.dim)
    v0 = _base_value(vf, x_bar)
    if is_zero_direction(u, config.zero_direction_tol):
        return DiniEstimate(0.0, 0.0, [], "dini")
    t = schedule.steps
    values = _map(vf.value, [x_bar + tk * u for tk in t], config.workers)
    q = np.array([(v - v0) / tk for v, tk in zip(values, t)])
    lower, upper = _quotient_bounds(t, q, config)
    logger.debug(f"dini at {x_bar.tolist()} along {u.tolist()}: [{lower}, {upper}]")
    return DiniEstimate(upper, lower, list(zip(t.tolist(), q.tolist())), "dini")


def hadamard(
    source: Source,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> DiniEstimate:
    """
    Lower and upper Hadamard-type derivatives of V at x_bar in direction u.

    Quotients use perturbed directions u_k -> u drawn from the shrinking
    cap around u. For u = 0 the perturbations are s_k w with
    s_k = delta * sqrt(t_k / t0) over unit directions w; the bounds are then
    0 unless a quotient sequence diverges, in which case they are infinite.
    This is the convention used to build critical cones at u = 0.

    Raises:
        ValueAtBaseInfinite: if V(x_bar) is infinite.
    """
    vf = as_value_function(source, config)
    x_bar, u = _vec(x_bar, vf.dim), _vec(u, vf.dim)
    v0 = _base_value(vf, x_bar)
    zero = is_zero_direction(u, config.zero_direction_tol)
    N = DirectionalNeighborhood(x_bar, u, config.epsilon, config.delta)

    samples = list(iter_dir_neighborhood(N, schedule, shrink=True, seed=config.seed))
    if zero:
        points = [
            x_bar + s.t * config.delta * math.sqrt(s.t / schedule.t0) * s.direction
            for s in samples
        ]
    else:
        points = [s.point for s in samples]
    values = _map(vf.value, points, config.workers)

    tracks: Dict[int, List[Tuple[float, float]]] = {}
    for s, v in zip(samples, values):
        tracks.setdefault(s.j, []).append((s.t, (v - v0) / s.t))

    lowers, uppers = [], []
    for j in sorted(tracks):
        t = np.array([p[0] for p in tracks[j]])
        q = np.array([p[1] for p in tracks[j]])
        if zero:
            sign = divergence_sign(t[-config.tail:], q[-config.tail:], config)
            lowers.append(-math.inf if sign < 0 else 0.0)
            uppers.append(math.inf if sign > 0 else 0.0)
        else:
            lo, hi = _quotient_bounds(t, q, config)
            lowers.append(lo)
            uppers.append(hi)
    lower = min(lowers) if lowers else 0.0
    upper = max(uppers) if uppers else 0.0
    history = [(s.t, (v - v0) / s.t) for s, v in zip(samples, values)]
    return DiniEstimate(upper, lower, history, "hadamard")


def _stencil(dim: int, radius: float, seed: Optional[int]) -> np.ndarray:
    count = 2 * dim if dim == 1 else 2 * dim + 4
    offsets = []
    for e in sphere_directions(dim, count, seed):
        offsets.append(radius * e)
        offsets.append(0.5 * radius * e)
    return np.array(offsets)


def _fit_subgradient(
    vf: ValueFunction, x: np.ndarray, v: float, radius: float, config: AnalysisConfig
) -> Optional[np.ndarray]:
    Z = _stencil(vf.dim, radius, config.seed)
    vals = np.array([vf.value(x + z) for z in Z])
    if not np.all(np.isfinite(vals)):
        return None
    dv = vals - v
    xi, *_ = np.linalg.lstsq(Z, dv, rcond=None)
    slack = config.frechet_slack * (1.0 + float(np.linalg.norm(xi)))
    minorant = dv - Z @ xi >= -slack * np.linalg.norm(Z, axis=1)
    return xi if bool(np.all(minorant)) else None


def frechet_subgradients(
    source: Source,
    x: Sequence[float],
    radius: float,
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> List[np.ndarray]:
    """
    Fréchet subgradient candidates of V at x.

    A least-squares affine fit on a stencil of radius `radius` is accepted
    when it minorizes every sample up to a slack of
    `config.frechet_slack * (1 + |xi|) * |z - x|`. Returns an empty list when
    the fit is rejected or V is infinite somewhere on the stencil.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    vf = as_value_function(source, config)
    x = _vec(x, vf.dim)
    v = vf.value(x)
    if not math.isfinite(v):
        return []
    xi = _fit_subgradient(vf, x, v, radius, config)
    return [] if xi is None else [xi]


@dataclass(frozen=True, eq=False)
class ShellSample:
    k: int
    j: int
    t: float
    direction: np.ndarray
    point: np.ndarray
    value: float
    subgradient: Optional[np.ndarray]


@dataclass
class SubgradientSweep:
    """
    Raw shell data and the limiting/singular estimates built from it.

    Attributes:
        base_value: V(x_bar).
        tracks: Shell samples grouped by direction index.
        limiting: Estimate of the directional limiting subdifferential.
        singular: Estimate of the directional singular subdifferential.
        witnesses: Tracks whose subgradients blew up, keyed by direction index.
    """

    base_value: float
    tracks: Dict[int, List[ShellSample]]
    limiting: SetEstimate
    singular: SetEstimate
    witnesses: Dict[int, List[ShellSample]] = field(default_factory=dict)

    @property
    def max_subgradient_norm(self) -> Optional[float]:
        norms = [
            float(np.linalg.norm(s.subgradient))
            for track in self.tracks.values()
            for s in track
            if s.subgradient is not None
        ]
        return max(norms) if norms else None


def _history(tracks: Dict[int, List[ShellSample]]) -> List[dict]:
    rows = []
    for j in sorted(tracks):
        for s in tracks[j]:
            xi = s.subgradient
            rows.append(
                {
                    "k": s.k,
                    "j": s.j,
                    "t": s.t,
                    "direction": s.direction.tolist(),
                    "value": s.value,
                    "subgradient": None if xi is None else xi.tolist(),
                    "norm": None if xi is None else float(np.linalg.norm(xi)),
                }
            )
    return rows


def _sorted_clusters(points: List[np.ndarray], tol: float) -> List[np.ndarray]:
    points = sorted(points, key=lambda p: tuple(np.round(p, 12)))
    return [rep for rep, _ in cluster_points(points, tol)]


def subgradient_sweep(
    source: Source,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> SubgradientSweep:
    """
    Collect Fréchet subgradients along the shells of the directional neighborhood.

    Shell points whose value strays from V(x_bar) by more than the budget
    max(1, |V(x_bar)|) * (t_k / t0)^(1/4) are skipped, which enforces
    V(x_k) -> V(x_bar) along the kept sequences.

    Raises:
        ValueAtBaseInfinite: if V(x_bar) is infinite.
    """
    vf = as_value_function(source, config)
    x_bar, u = _vec(x_bar, vf.dim), _vec(u, vf.dim)
    v0 = _base_value(vf, x_bar)
    N = DirectionalNeighborhood(x_bar, u, config.epsilon, config.delta)
    samples = list(iter_dir_neighborhood(N, schedule, shrink=True, seed=config.seed))
    values = _map(vf.value, [s.point for s in samples], config.workers)
    scale = max(1.0, abs(v0))

    def probe(item) -> Optional[np.ndarray]:
        s, v = item
        budget = scale * (s.t / schedule.t0) ** 0.25
        if not math.isfinite(v) or abs(v - v0) > budget:
            return None
        radius = config.frechet_radius_ratio * float(np.linalg.norm(s.point - x_bar))
        return _fit_subgradient(vf, s.point, v, radius, config)

    subgradients = _map(probe, list(zip(samples, values)), config.workers)

    tracks: Dict[int, List[ShellSample]] = {}
    for s, v, xi in zip(samples, values, subgradients):
        tracks.setdefault(s.j, []).append(
            ShellSample(s.k, s.j, s.t, s.direction, s.point, v, xi)
        )

    points: List[np.ndarray] = []
    rays: List[np.ndarray] = []
    witnesses: Dict[int, List[ShellSample]] = {}
    unsettled = 0
    informative = 0
    for j in sorted(tracks):
        tail = tracks[j][-config.tail:]
        if len(tail) < 2:
            continue
        known = [s.subgradient for s in tail if s.subgradient is not None]
        if not known:
            continue
        informative += 1
        if len(known) < len(tail):
            unsettled += 1
            continue
        t = [s.t for s in tail]
        norms = [float(np.linalg.norm(xi)) for xi in known]
        if divergence_sign(t, norms, config) > 0:
            directions = [unit(xi) for xi in known]
            if _is_cauchy(directions, config.conv_tol):
                rays.append(unit(directions[-1]))
                witnesses[j] = tail
            else:
                unsettled += 1
        elif _is_cauchy(known, config.conv_tol):
            points.append(known[-1])
        else:
            unsettled += 1

    history = _history(tracks)
    converged = unsettled == 0 and informative > 0
    limiting = SetEstimate(
        points=_sorted_clusters(points, config.cluster_tol),
        converged=converged,
        shell_history=history,
    )
    singular = SetEstimate(
        rays=[unit(r) for r in _sorted_clusters(rays, config.conv_tol)],
        converged=converged,
        shell_history=history,
        contains_origin=True,
    )
    logger.debug(
        f"subgradient sweep at {x_bar.tolist()} along {u.tolist()}: "
        f"{len(limiting.points)} points, {len(singular.rays)} rays, converged={converged}"
    )
    return SubgradientSweep(v0, tracks, limiting, singular, witnesses)


def directional_subdifferentials(
    source: Source,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> Tuple[SetEstimate, SetEstimate]:
    """(limiting, singular) estimates from one shared sweep."""
    sweep = subgradient_sweep(source, x_bar, u, schedule, config)
    return sweep.limiting, sweep.singular


def directional_limiting_subdiff(
    source: Source,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> SetEstimate:
    """
    Estimate the directional limiting subdifferential of V at x_bar in direction u.

    Raises:
        ValueAtBaseInfinite: if V(x_bar) is infinite.
    """
    return subgradient_sweep(source, x_bar, u, schedule, config).limiting


def directional_singular_subdiff(
    source: Source,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> SetEstimate:
    """
    Estimate the directional singular subdifferential of V at x_bar in direction u.

    The origin always belongs to the represented set; `rays` holds the unit
    limits of normalized subgradients along blowing-up sequences.

    Raises:
        ValueAtBaseInfinite: if V(x_bar) is infinite.
    """
    return subgradient_sweep(source, x_bar, u, schedule, config).singular


@dataclass
class ClarkeEstimate:
    vertices: List[np.ndarray]
    hull: Polyhedron


def directional_clarke_subdiff(
    source: Source,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> ClarkeEstimate:
    """
    Convex hull of the limiting estimate.

    Raises:
        NotDirectionallyLipschitz: if the limiting estimate is empty or the
            singular estimate has a nonzero ray.
        DimensionOverflow: if the parameter dimension exceeds `config.hull_dim_cap`.
    """
    vf = as_value_function(source, config)
    if vf.dim > config.hull_dim_cap:
        raise DimensionOverflow(
            f"Clarke hulls support n up to {config.hull_dim_cap}, got {vf.dim}"
        )
    sweep = subgradient_sweep(vf, x_bar, u, schedule, config)
    if sweep.singular.rays:
        raise NotDirectionallyLipschitz(
            f"singular estimate has rays {[r.tolist() for r in sweep.singular.rays]}"
        )
    if not sweep.limiting.points:
        raise NotDirectionallyLipschitz("limiting estimate is empty")
    hull = v_to_h(sweep.limiting.points, dim=vf.dim, dim_cap=config.hv_dim_cap)
    vertices, _ = h_to_v(hull, config.hv_dim_cap)
    return ClarkeEstimate(vertices, hull)


@dataclass
class LipschitzVerdict:
    status: LipschitzStatus
    modulus: Optional[float] = None
    witness: Optional[dict] = None


def _pair(x_bar: np.ndarray, v0: float, s: ShellSample) -> dict:
    dist = float(np.linalg.norm(s.point - x_bar))
    return {
        "a": x_bar.tolist(),
        "b": s.point.tolist(),
        "quotient": abs(s.value - v0) / dist if dist > 0 else math.inf,
        "t": s.t,
    }


def lipschitz_verdict(
    source: Source,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> LipschitzVerdict:
    """
    Decide directional Lipschitz continuity of V at x_bar.

    NotLipschitz when the singular estimate has a ray or the difference
    quotients |V(x_k) - V(x_bar)| / |x_k - x_bar| blow up; the witness is the
    pair (x_bar, x_k) with the largest quotient. Lipschitz with the largest
    sampled subgradient norm as modulus when every sequence converged.

    Raises:
        ValueAtBaseInfinite: if V(x_bar) is infinite.
    """
    vf = as_value_function(source, config)
    x_bar = _vec(x_bar, vf.dim)
    sweep = subgradient_sweep(vf, x_bar, u, schedule, config)
    v0 = sweep.base_value

    for j in sorted(sweep.tracks):
        tail = sweep.tracks[j][-config.tail:]
        t = [s.t for s in tail]
        q = [
            abs(s.value - v0) / float(np.linalg.norm(s.point - x_bar))
            if math.isfinite(s.value)
            else math.inf
            for s in tail
        ]
        if len(tail) >= 2 and divergence_sign(t, q, config) > 0:
            return LipschitzVerdict(
                LipschitzStatus.NOT_LIPSCHITZ, witness=_pair(x_bar, v0, tail[-1])
            )
    if sweep.singular.rays:
        j = min(sweep.witnesses)
        return LipschitzVerdict(
            LipschitzStatus.NOT_LIPSCHITZ, witness=_pair(x_bar, v0, sweep.witnesses[j][-1])
        )
    modulus = sweep.max_subgradient_norm
    if not sweep.limiting.converged or modulus is None:
        return LipschitzVerdict(LipschitzStatus.INCONCLUSIVE, modulus=modulus)
    return LipschitzVerdict(LipschitzStatus.LIPSCHITZ, modulus=modulus)


@dataclass
class ContinuityVerdict:
    """
    Directional continuity of V at x_bar.

    Attributes:
        status: Continuity verdict from the shell gaps.
        lower_semicontinuous: Verdict on liminf V(x_k) >= V(x_bar), tested on
            downward gaps only.
        witness: Last shell sample of the offending sequence when discontinuous.
    """

    status: ContinuityStatus
    lower_semicontinuous: Verdict
    witness: Optional[dict] = None


def continuity_diagnostic(
    source: Source,
    x_bar: Sequence[float],
    u: Sequence[float],
    schedule: SequenceSchedule = SequenceSchedule(),
    config: AnalysisConfig = DEFAULT_CONFIG,
) -> ContinuityVerdict:
    """
    Test max_j |V(x_k,j) - V(x_bar)| -> 0 over the shells.

    Discontinuous when a gap of at least `config.gap_tol` persists over the
    last `config.tail` shells.

    Raises:
        ValueAtBaseInfinite: if V(x_bar) is infinite.
    """
    vf = as_value_function(source, config)
    x_bar, u = _vec(x_bar, vf.dim), _vec(u, vf.dim)
    v0 = _base_value(vf, x_bar)
    N = DirectionalNeighborhood(x_bar, u, config.epsilon, config.delta)
    samples = list(iter_dir_neighborhood(N, schedule, shrink=True, seed=config.seed))
    values = _map(vf.value, [s.point for s in samples], config.workers)

    shells: Dict[int, List[Tuple[float, float, np.ndarray, float]]] = {}
    for s, v in zip(samples, values):
        gap = abs(v - v0) if math.isfinite(v) else math.inf
        down = max(v0 - v, 0.0)
        shells.setdefault(s.k, []).append((gap, down, s.point, v))

    ks = sorted(shells)[-config.tail:]
    t = schedule.steps[ks]
    gaps = np.array([max(g for g, _, _, _ in shells[k]) for k in ks])
    downs = np.array([max(d for _, d, _, _ in shells[k]) for k in ks])

    def verdict(d: np.ndarray) -> Optional[bool]:
        if d.size < 2:
            return None
        return decays(t, d, config.gap_tol)

    cont = verdict(gaps)
    lsc = verdict(downs)
    witness = None
    if cont is False:
        k = ks[-1]
        gap, _, point, v = max(shells[k], key=lambda item: item[0])
        witness = {"k": k, "t": float(schedule.steps[k]), "x": point.tolist(), "value": v, "base_value": v0, "gap": gap}
    status = {
        True: ContinuityStatus.CONTINUOUS,
        False: ContinuityStatus.DISCONTINUOUS,
        None: ContinuityStatus.INCONCLUSIVE,
    }[cont]
    lsc_verdict = {True: Verdict.HOLDS, False: Verdict.FAILS, None: Verdict.INCONCLUSIVE}[lsc]
    return ContinuityVerdict(status, lsc_verdict, witness)
