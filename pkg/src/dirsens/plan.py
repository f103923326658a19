"""
Analysis plans: parsing and orchestration.

A plan file uses the same line-oriented format as problem files::

    plan cubic
    problem cubic.dsp      # relative to the plan file
    point 0
    direction 0
    direction 1
    checks Stability, Dini, Subdiff, Cones, Thm3_1, Thm3_2, Thm3_3
    schedule K=12 angular_count=8
    tol conv_tol=1e-4 grid_points=401
    variant iii                # optional, otherwise auto-selected
    seed 7
    workers 2
"""

import dataclasses
import logging
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .engine import (
    DEFAULT_CONFIG,
    VARIANT_PREFERENCE,
    AbadieStatus,
    AnalysisConfig,
    Certification,
    Check,
    LipschitzStatus,
    RegularityStatus,
    Variant,
    Verdict,
    Which,
    execute_callbacks,
)
from .errors import (
    DimensionOverflow,
    DirsensError,
    NotDirectionallyLipschitz,
    ParseError,
    PlanError,
    StabilityPrereqFailed,
)
from .expressions.parser import parse_problem
from .expressions.problem import ParametricProblem
from .geometry.neighborhood import SequenceSchedule
from .multipliers.theorems import (
    AnalysisContext,
    InclusionVerdict,
    ModelProvider,
    abadie_check,
    check_lipschitz_sufficient,
    check_upper_estimate,
    danskin_sets,
    foscms_from_model,
    probe_direction,
)
from .oracle.base import DiniEstimate
from .oracle.subdiff import directional_clarke_subdiff
from .report import (
    AnalysisReport,
    CheckRecord,
    EstimateModel,
    MultiplierSetModel,
    PlanModel,
    PolyhedronModel,
    ShellRow,
    jsonable,
)
from .utils import format_vector, is_zero_direction, parse_vector

logger = logging.getLogger(__name__)

# Execution order within one direction
CHECK_ORDER = (
    Check.STABILITY,
    Check.DINI,
    Check.SUBDIFF,
    Check.CONES,
    Check.FOSCMS,
    Check.ABADIE,
    Check.DANSKIN,
    Check.THM3_1,
    Check.THM3_2,
    Check.THM3_3,
)

CHECK_PREREQUISITES: Dict[Check, Tuple[Check, ...]] = {
    Check.CONES: (Check.DINI,),
    Check.DANSKIN: (Check.SUBDIFF,),
    Check.THM3_1: (Check.SUBDIFF, Check.STABILITY),
    Check.THM3_2: (Check.SUBDIFF, Check.STABILITY),
    Check.THM3_3: (Check.SUBDIFF, Check.STABILITY),
}

# Solution points examined by the per-point checks
MAX_RECORD_POINTS = 5

_STATEMENT = re.compile(
    r"^(plan|problem|point|direction|checks|schedule|tol|variant|seed|workers)\b\s*(.*)$"
)
_ASSIGN = re.compile(r"^([A-Za-z_]\w*)=(\S+)$")


@dataclass(frozen=True)
class AnalysisPlan:
    """
    Everything needed to analyze one problem at one base point.

    Attributes:
        problem_path (Path): Problem file.
        base_point (Tuple[float, ...]): x_bar.
        directions (Tuple[Tuple[float, ...], ...]): Directions u; u = 0 is the nondirectional analysis.
        checks (Tuple[Check, ...]): Requested checks.
        schedule (SequenceSchedule): Shell schedule.
        config (AnalysisConfig): Tolerances.
        variant (Optional[Variant]): Forced theorem variant; None auto-selects.
        name (str): Label used in reports.
    """

    problem_path: Path
    base_point: Tuple[float, ...]
    directions: Tuple[Tuple[float, ...], ...]
    checks: Tuple[Check, ...]
    schedule: SequenceSchedule = SequenceSchedule()
    config: AnalysisConfig = DEFAULT_CONFIG
    variant: Optional[Variant] = None
    name: str = "plan"

    def __post_init__(self):
        if not self.directions:
            raise PlanError("plan needs at least one direction")
        if not self.base_point:
            raise PlanError("plan needs a base point")
        dim = len(self.base_point)
        for u in self.directions:
            if len(u) != dim:
                raise PlanError(f"direction {list(u)} does not match base point dimension {dim}")
        if not self.checks:
            raise PlanError("plan requests no checks")
        requested = set(self.checks)
        for check in self.checks:
            missing = [c for c in CHECK_PREREQUISITES.get(check, ()) if c not in requested]
            if missing:
                raise PlanError(
                    f"check {check.value} requires {', '.join(c.value for c in missing)}"
                )

    @property
    def ordered_checks(self) -> List[Check]:
        return [c for c in CHECK_ORDER if c in self.checks]

    def with_overrides(
        self,
        seed: Optional[int] = None,
        grid: Optional[int] = None,
        shells: Optional[int] = None,
    ) -> "AnalysisPlan":
        """Apply command-line overrides on top of the plan file."""
        config, schedule = self.config, self.schedule
        try:
            if seed is not None:
                config = dataclasses.replace(config, seed=seed)
            if grid is not None:
                config = dataclasses.replace(config, grid_points=grid)
            if shells is not None:
                schedule = dataclasses.replace(schedule, K=shells)
        except ValueError as e:
            raise PlanError(str(e)) from e
        return dataclasses.replace(self, config=config, schedule=schedule)


def _coerce(name: str, text: str, current: Any) -> Any:
    try:
        if isinstance(current, bool):
            return text.lower() in ("1", "true", "yes")
        if isinstance(current, int) or current is None:
            value = float(text)
            if not value.is_integer():
                raise ValueError
            return int(value)
        return float(text)
    except ValueError:
        raise ValueError(f"invalid value {text!r} for {name}")


def _overrides(target: Any, body: str, lineno: int, col: int) -> Any:
    names = {f.name for f in dataclasses.fields(target)}
    changes = {}
    for token in body.split():
        am = _ASSIGN.match(token)
        if not am:
            raise ParseError(f"expected name=value, got {token!r}", lineno, col)
        name, text = am.groups()
        if name not in names:
            raise PlanError(f"unknown {type(target).__name__} field {name!r} on line {lineno}")
        try:
            changes[name] = _coerce(name, text, getattr(target, name))
        except ValueError as e:
            raise ParseError(str(e), lineno, col)
    try:
        return dataclasses.replace(target, **changes)
    except ValueError as e:
        raise PlanError(f"line {lineno}: {e}") from e


def _vector(body: str, lineno: int, col: int) -> Tuple[float, ...]:
    try:
        return tuple(parse_vector(body).tolist())
    except ValueError as e:
        raise ParseError(str(e), lineno, col)


def parse_plan(text: str, base_dir: Union[str, Path, None] = None) -> AnalysisPlan:
    """
    Parse a plan file.

    Args:
        text: Plan file contents.
        base_dir: Directory that relative problem paths are resolved against.

    Raises:
        ParseError: malformed statements, with line and column.
        PlanError: unknown override names, missing statements or missing
            check prerequisites.
    """
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    name = "plan"
    problem_path: Optional[Path] = None
    point: Tuple[float, ...] = ()
    directions: List[Tuple[float, ...]] = []
    checks: List[Check] = []
    schedule = SequenceSchedule()
    config = DEFAULT_CONFIG
    variant: Optional[Variant] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        sm = _STATEMENT.match(line.strip())
        if not sm:
            raise ParseError(f"unknown statement {line.split()[0]!r}", lineno, indent + 1)
        key, body = sm.group(1), sm.group(2).strip()
        col = indent + len(line.strip()) - len(body) + 1
        if not body:
            raise ParseError(f"{key} needs a value", lineno, col)

        if key == "plan":
            name = body
        elif key == "problem":
            path = Path(body)
            problem_path = path if path.is_absolute() else base_dir / path
        elif key == "point":
            point = _vector(body, lineno, col)
        elif key == "direction":
            directions.append(_vector(body, lineno, col))
        elif key == "checks":
            for item in (s.strip() for s in body.split(",")):
                try:
                    check = Check(item)
                except ValueError:
                    raise ParseError(f"unknown check {item!r}", lineno, col)
                if check not in checks:
                    checks.append(check)
        elif key == "schedule":
            schedule = _overrides(schedule, body, lineno, col)
        elif key == "tol":
            config = _overrides(config, body, lineno, col)
        elif key == "variant":
            try:
                variant = Variant(body)
            except ValueError:
                raise ParseError(f"unknown variant {body!r}", lineno, col)
        else:
            config = _overrides(config, f"{key}={body}", lineno, col)

    if problem_path is None:
        raise PlanError("plan has no problem statement")
    return AnalysisPlan(
        problem_path=problem_path,
        base_point=point,
        directions=tuple(directions),
        checks=tuple(checks),
        schedule=schedule,
        config=config,
        variant=variant,
        name=name,
    )


def load_plan(path: Union[str, Path]) -> AnalysisPlan:
    """
    Read and parse a plan file; relative problem paths resolve against its directory.

    Raises:
        PlanError: if the file cannot be read.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise PlanError(f"cannot read plan {path}: {e}") from e
    return parse_plan(text, path.parent)


def load_problem(path: Union[str, Path]) -> ParametricProblem:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise PlanError(f"cannot read problem {path}: {e}") from e
    return parse_problem(text)


def select_variant(ctx: AnalysisContext, u: np.ndarray) -> Variant:
    """
    The strongest variant whose stability prerequisite does not empirically fail.

    Raises:
        StabilityPrereqFailed: if every prerequisite fails.
    """
    stability = ctx.stability(u)
    for variant in VARIANT_PREFERENCE:
        if stability[variant.prerequisite].verdict != Verdict.FAILS:
            return variant
    raise StabilityPrereqFailed(f"every stability prerequisite fails along u={u.tolist()}")


def _sample(points: Sequence[np.ndarray]) -> List[np.ndarray]:
    if len(points) <= MAX_RECORD_POINTS:
        return list(points)
    idx = np.linspace(0, len(points) - 1, MAX_RECORD_POINTS).round().astype(int)
    return [points[i] for i in sorted(set(idx.tolist()))]


def _shell_index(schedule: SequenceSchedule, t: float) -> int:
    return int(np.argmin(np.abs(schedule.steps - t)))


def _derivative_values(d: DiniEstimate) -> Dict[str, Any]:
    return {"kind": d.kind, "lower": d.lower, "upper": d.upper}


class _Runner:
    """Builds the record fields of each check for one direction."""

    def __init__(self, ctx: AnalysisContext, plan: AnalysisPlan):
        self.ctx = ctx
        self.plan = plan

    def variant(self, u: np.ndarray) -> Variant:
        return self.plan.variant or select_variant(self.ctx, u)

    def points(self, u: np.ndarray) -> List[np.ndarray]:
        return _sample(self.ctx.solutions(u).points)

    def stability(self, u: np.ndarray) -> Dict[str, Any]:
        verdicts = self.ctx.stability(u)
        values = {
            prop.value: {
                "verdict": v.verdict.value,
                "kappa": v.kappa_estimate,
                "point": None if v.point is None else np.asarray(v.point).tolist(),
            }
            for prop, v in verdicts.items()
        }
        failing = next((v for v in verdicts.values() if v.witnesses), None)
        try:
            variant = self.variant(u)
            verdict = f"variant ({variant.value})"
        except StabilityPrereqFailed:
            variant, verdict = None, "no variant"
        values["variant"] = None if variant is None else variant.value
        return {
            "verdict": verdict,
            "values": values,
            "witness": {"sequence": failing.witnesses[0]} if failing else None,
        }

    def dini(self, u: np.ndarray) -> Dict[str, Any]:
        d = self.ctx.derivative(u)
        values = _derivative_values(d)
        if d.kind == "dini":
            values["finite"] = math.isfinite(d.lower) and math.isfinite(d.upper)
        shells = [
            ShellRow(k=_shell_index(self.ctx.schedule, t), j=0, t=t, value=q)
            for t, q in d.samples
            if d.kind == "dini"
        ]
        return {"values": values, "shells": shells}

    def subdiff(self, u: np.ndarray) -> Dict[str, Any]:
        ctx = self.ctx
        sweep = ctx.sweep(u)
        lip = ctx.lipschitz(u)
        cont = ctx.continuity(u)
        polyhedra = {}
        values: Dict[str, Any] = {
            "base_value": sweep.base_value,
            "lipschitz": lip.status.value,
            "modulus": lip.modulus,
            "continuity": cont.status.value,
            "lower_semicontinuous": cont.lower_semicontinuous.value,
        }
        try:
            clarke = directional_clarke_subdiff(
                ctx.value_function, ctx.x_bar, u, ctx.schedule, ctx.config
            )
            polyhedra["clarke"] = PolyhedronModel.from_polyhedron(clarke.hull)
            values["clarke_vertices"] = [v.tolist() for v in clarke.vertices]
        except (NotDirectionallyLipschitz, DimensionOverflow) as e:
            values["clarke"] = str(e)
        history = sorted(
            sweep.limiting.shell_history or sweep.singular.shell_history,
            key=lambda row: (row["k"], row["j"]),
        )
        return {
            "verdict": lip.status.value,
            "values": values,
            "witness": lip.witness or cont.witness,
            "estimates": {
                "limiting": EstimateModel.from_estimate(sweep.limiting),
                "singular": EstimateModel.from_estimate(sweep.singular),
            },
            "polyhedra": polyhedra,
            "shells": [
                ShellRow(k=r["k"], j=r["j"], t=r["t"], value=r["value"], norm=r["norm"])
                for r in history
            ],
        }

    def cones(self, u: np.ndarray) -> Dict[str, Any]:
        ctx = self.ctx
        ctx.require_smooth()
        d = ctx.derivative(u)
        polyhedra, empty = {}, []
        points = self.points(u)
        for i, y in enumerate(points):
            spec = ctx.critical_cone(ctx.model(y), u)
            polyhedra[f"linearization[{i}]"] = PolyhedronModel.from_polyhedron(spec.base)
            polyhedra[f"critical[{i}]"] = PolyhedronModel.from_polyhedron(spec.cone)
            empty.append(spec.is_empty)
        return {
            "values": {
                "derivative": _derivative_values(d),
                "solutions": [y.tolist() for y in points],
                "critical_empty": empty,
            },
            "polyhedra": polyhedra,
        }

    def foscms(self, u: np.ndarray) -> Dict[str, Any]:
        ctx = self.ctx
        ctx.require_smooth()
        points = self.points(u)
        statuses, witness = [], None
        for y in points:
            model = ctx.model(y)
            reg = foscms_from_model(model, u, probe_direction(model, u))
            statuses.append(reg.status.value)
            if reg.witness is not None and witness is None:
                witness = {"y": y.tolist(), **reg.witness}
        certified = bool(points) and witness is None
        status = RegularityStatus.CERTIFIED if certified else RegularityStatus.NOT_CERTIFIED
        values = {"solutions": [y.tolist() for y in points], "per_point": statuses}
        if not points:
            values["reason"] = "no solution points"
        return {"verdict": status.value, "values": values, "witness": witness}

    def abadie(self, u: np.ndarray) -> Dict[str, Any]:
        ctx = self.ctx
        ctx.require_smooth()
        rank = {AbadieStatus.EQUAL: 0, AbadieStatus.INCONCLUSIVE: 1, AbadieStatus.STRICT_INCLUSION: 2}
        worst, witness, per_point = AbadieStatus.EQUAL, None, []
        points = self.points(u)
        for y in points:
            v = abadie_check(ctx.prob, ctx.x_bar, y, ctx.schedule, ctx.config, model=ctx.model(y))
            per_point.append(
                {"y": y.tolist(), "status": v.status.value, "generators": [g.tolist() for g in v.generators]}
            )
            if rank[v.status] > rank[worst]:
                worst, witness = v.status, {"y": y.tolist(), **(v.witness or {})}
        if not points:
            worst = AbadieStatus.INCONCLUSIVE
        return {"verdict": worst.value, "values": {"points": per_point}, "witness": witness}

    def danskin(self, u: np.ndarray) -> Dict[str, Any]:
        ctx = self.ctx
        result = danskin_sets(ctx.prob, ctx.x_bar, u, ctx.schedule, ctx.config, context=ctx)
        fields = _inclusion_fields(result.inclusion)
        fields["values"]["gradient_set"] = [g.tolist() for g in result.gradient_set]
        fields["polyhedra"]["hull"] = PolyhedronModel.from_polyhedron(result.hull)
        return fields

    def upper_estimate(self, which: Which) -> Callable[[np.ndarray], Dict[str, Any]]:
        def run(u: np.ndarray) -> Dict[str, Any]:
            ctx = self.ctx
            v = check_upper_estimate(
                ctx.prob, ctx.x_bar, u, which, self.variant(u), ctx.schedule, ctx.config, context=ctx
            )
            return _inclusion_fields(v)

        return run

    def lipschitz_sufficient(self, u: np.ndarray) -> Dict[str, Any]:
        ctx = self.ctx
        variant = self.variant(u)
        cert = check_lipschitz_sufficient(
            ctx.prob, ctx.x_bar, u, variant, ctx.schedule, ctx.config, context=ctx
        )
        oracle = ctx.lipschitz(u)
        provenance = jsonable(cert.provenance)
        if cert.status == Certification.CERTIFIED and oracle.status == LipschitzStatus.NOT_LIPSCHITZ:
            provenance["inconsistent_with_oracle"] = True
            logger.warning(
                f"Lipschitz certificate at u={format_vector(u)} contradicts the oracle verdict"
            )
        return {
            "verdict": cert.status.value,
            "witness": cert.witness,
            "values": {"reason": cert.reason, "oracle_lipschitz": oracle.status.value},
            "polyhedra": {
                f"singular_zeta[{i}]": PolyhedronModel.from_polyhedron(p)
                for i, p in enumerate(cert.pieces)
            },
            "provenance": provenance,
        }

    def table(self) -> Dict[Check, Callable[[np.ndarray], Dict[str, Any]]]:
        return {
            Check.STABILITY: self.stability,
            Check.DINI: self.dini,
            Check.SUBDIFF: self.subdiff,
            Check.CONES: self.cones,
            Check.FOSCMS: self.foscms,
            Check.ABADIE: self.abadie,
            Check.DANSKIN: self.danskin,
            Check.THM3_1: self.upper_estimate(Which.LIMITING),
            Check.THM3_2: self.upper_estimate(Which.SINGULAR),
            Check.THM3_3: self.lipschitz_sufficient,
        }


def _inclusion_fields(v: InclusionVerdict) -> Dict[str, Any]:
    provenance = jsonable(v.provenance)
    if v.variant is not None:
        provenance["variant"] = v.variant.value
    return {
        "verdict": v.status.value,
        "witness": v.witness,
        "values": {"distances": v.distances},
        "estimates": {"lhs": EstimateModel.from_estimate(v.lhs)},
        "polyhedra": {f"rhs[{i}]": PolyhedronModel.from_polyhedron(p) for i, p in enumerate(v.rhs)},
        "sets": [MultiplierSetModel.from_set(s) for s in v.multiplier_sets],
        "provenance": provenance,
    }


def _run_direction(runner: _Runner, index: int, u: np.ndarray) -> List[CheckRecord]:
    table = runner.table()
    records = []
    direction = u.tolist()
    for check in runner.plan.ordered_checks:
        start = time.perf_counter()
        try:
            fields = table[check](u)
            fields["values"] = jsonable(fields.get("values", {}))
            if fields.get("witness") is not None:
                fields["witness"] = jsonable(fields["witness"])
            record = CheckRecord(direction_index=index, direction=direction, check=check, **fields)
        except DirsensError as e:
            logger.warning(f"{check.value} failed along u={format_vector(u)}: {e}")
            record = CheckRecord(
                direction_index=index,
                direction=direction,
                check=check,
                status="error",
                message=str(e),
                provenance={"error": type(e).__name__},
            )
        record.wall_time = time.perf_counter() - start
        logger.info(
            f"{check.value} u={format_vector(u)}: {record.verdict or record.status} "
            f"({record.wall_time:.2f}s)"
        )
        execute_callbacks(record)
        records.append(record)
    return records


def _plan_model(plan: AnalysisPlan) -> PlanModel:
    return PlanModel(
        name=plan.name,
        problem=str(plan.problem_path),
        base_point=list(plan.base_point),
        directions=[list(u) for u in plan.directions],
        checks=plan.ordered_checks,
        variant=None if plan.variant is None else plan.variant.value,
        schedule=jsonable(dataclasses.asdict(plan.schedule)),
        config=jsonable(dataclasses.asdict(plan.config)),
    )


def run_plan(
    plan: AnalysisPlan,
    problem: Optional[ParametricProblem] = None,
    model_at: Optional[ModelProvider] = None,
) -> AnalysisReport:
    """
    Execute every requested check along every direction of the plan.

    Directions run concurrently on `plan.config.workers` threads and share one
    context, so solves and sweeps are computed once. Library errors are kept
    on their record; the rest of the plan still runs.

    Args:
        plan: The plan to run.
        problem: Parsed problem; read from `plan.problem_path` when omitted.
        model_at: Optional y -> LocalModel override for hard-coded Gamma data.

    Raises:
        ParseError: if the problem file is malformed.
        PlanError: if the problem file cannot be read or the base point has the wrong dimension.
    """
    if problem is None:
        problem = load_problem(plan.problem_path)
    if len(plan.base_point) != problem.n:
        raise PlanError(f"base point has {len(plan.base_point)} coordinates, problem has n={problem.n}")
    ctx = AnalysisContext(problem, plan.base_point, plan.schedule, plan.config, model_at)
    runner = _Runner(ctx, plan)
    directions = [np.asarray(u, dtype=float) for u in plan.directions]
    zero = [is_zero_direction(u, plan.config.zero_direction_tol) for u in directions]
    logger.info(
        f"running plan {plan.name!r}: {len(directions)} directions "
        f"({sum(zero)} zero), checks {[c.value for c in plan.ordered_checks]}"
    )

    workers = max(1, min(plan.config.workers, len(directions)))
    if workers == 1:
        batches = [_run_direction(runner, i, u) for i, u in enumerate(directions)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_direction, runner, i, u) for i, u in enumerate(directions)]
            batches = [f.result() for f in futures]

    order = {c: i for i, c in enumerate(CHECK_ORDER)}
    records = sorted(
        (r for batch in batches for r in batch),
        key=lambda r: (r.direction_index, order[r.check]),
    )
    return AnalysisReport(plan=_plan_model(plan), records=records)


__all__ = [
    "CHECK_ORDER",
    "CHECK_PREREQUISITES",
    "AnalysisPlan",
    "load_plan",
    "load_problem",
    "parse_plan",
    "run_plan",
    "select_variant",
]
