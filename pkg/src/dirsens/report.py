"""
Report models and writers.

Reports are pydantic models so that the JSON output validates back into the
same structure. Non-finite numbers are written as the strings "inf", "-inf"
and "nan"; wall times stay on the records but are left out of the JSON so
that reruns of a plan produce identical files.
"""

import csv
import io
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, BeforeValidator, Field, PlainSerializer
from typing_extensions import Annotated

from .engine import Check
from .errors import ReportIOError
from .geometry.polyhedron import Polyhedron
from .multipliers.sets import MultiplierSet
from .oracle.base import SetEstimate
from .utils import format_float, format_vector

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"

_NONFINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def _read_float(value: Any) -> Any:
    if isinstance(value, str) and value in _NONFINITE:
        return _NONFINITE[value]
    return value


def _write_float(value: float) -> Union[float, str]:
    if math.isfinite(value):
        return value
    return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")


Num = Annotated[
    float,
    BeforeValidator(_read_float),
    PlainSerializer(_write_float, return_type=Union[float, str], when_used="json"),
]


def jsonable(obj: Any) -> Any:
    """Convert numpy values, enums and non-finite floats to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _write_float(float(obj))
    return obj


class PolyhedronModel(BaseModel):
    """H-representation {x | A x <= b, E x = f}."""

    dim: int
    A: List[List[Num]] = Field(default_factory=list)
    b: List[Num] = Field(default_factory=list)
    E: List[List[Num]] = Field(default_factory=list)
    f: List[Num] = Field(default_factory=list)
    empty: bool = False

    @classmethod
    def from_polyhedron(cls, P: Polyhedron) -> "PolyhedronModel":
        if P.is_empty:
            return cls(dim=P.dim, empty=True)
        return cls(dim=P.dim, A=P.A.tolist(), b=P.b.tolist(), E=P.E.tolist(), f=P.f.tolist())

    def to_polyhedron(self) -> Polyhedron:
        if self.empty:
            return Polyhedron.empty(self.dim)
        return Polyhedron(self.dim, A=self.A, b=self.b, E=self.E, f=self.f)


class PieceModel(BaseModel):
    pattern: List[int]
    polyhedron: PolyhedronModel
    zeta: PolyhedronModel
    representative_v: Optional[List[Num]] = None


class MultiplierSetModel(BaseModel):
    alpha: int
    kind: str
    direction_mode: Optional[str] = None
    pieces: List[PieceModel] = Field(default_factory=list)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_set(cls, s: MultiplierSet) -> "MultiplierSetModel":
        return cls(
            alpha=s.alpha,
            kind=s.kind.value,
            direction_mode=s.direction_mode.value if s.direction_mode else None,
            pieces=[
                PieceModel(
                    pattern=list(p.pattern),
                    polyhedron=PolyhedronModel.from_polyhedron(p.polyhedron),
                    zeta=PolyhedronModel.from_polyhedron(p.zeta),
                    representative_v=None if p.representative_v is None else p.representative_v.tolist(),
                )
                for p in s.pieces
            ],
            provenance=jsonable(s.provenance),
        )


class EstimateModel(BaseModel):
    points: List[List[Num]] = Field(default_factory=list)
    rays: List[List[Num]] = Field(default_factory=list)
    rates: List[Optional[Num]] = Field(default_factory=list)
    converged: bool = True
    contains_origin: bool = False

    @classmethod
    def from_estimate(cls, est: SetEstimate) -> "EstimateModel":
        return cls(
            points=[p.tolist() for p in est.points],
            rays=[r.tolist() for r in est.rays],
            rates=list(est.rates),
            converged=est.converged,
            contains_origin=est.contains_origin,
        )


class ShellRow(BaseModel):
    """One sampled point of a sweep, flattened for plotting."""

    k: int
    j: int = 0
    t: Num
    value: Optional[Num] = None
    norm: Optional[Num] = None


class CheckRecord(BaseModel):
    """
    The result of one check along one direction.

    `status` is "ok" or "error"; errors keep the exception message and leave
    the verdict empty.
    """

    direction_index: int
    direction: List[Num]
    check: Check
    status: Literal["ok", "error"] = "ok"
    verdict: Optional[str] = None
    message: str = ""
    witness: Optional[Dict[str, Any]] = None
    values: Dict[str, Any] = Field(default_factory=dict)
    estimates: Dict[str, EstimateModel] = Field(default_factory=dict)
    polyhedra: Dict[str, PolyhedronModel] = Field(default_factory=dict)
    sets: List[MultiplierSetModel] = Field(default_factory=list)
    provenance: Dict[str, Any] = Field(default_factory=dict)
    shells: List[ShellRow] = Field(default_factory=list)
    wall_time: float = Field(default=0.0, exclude=True)


class PlanModel(BaseModel):
    name: str
    problem: str
    base_point: List[Num]
    directions: List[List[Num]]
    checks: List[Check]
    variant: Optional[str] = None
    schedule: Dict[str, Any]
    config: Dict[str, Any]


class AnalysisReport(BaseModel):
    schema_version: Literal["1.0"] = SCHEMA_VERSION
    plan: PlanModel
    records: List[CheckRecord] = Field(default_factory=list)

    @property
    def violated(self) -> bool:
        return any(r.verdict == "Violated" for r in self.records)

    @property
    def errors(self) -> List[CheckRecord]:
        return [r for r in self.records if r.status == "error"]

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


class ReportFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


CSV_COLUMNS = (
    "row_type",
    "direction_index",
    "direction",
    "check",
    "k",
    "j",
    "t",
    "value",
    "norm",
    "status",
    "verdict",
)


def render_csv(report: AnalysisReport) -> str:
    """Shell rows sorted by (direction index, k, j), then one row per record."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    shells = [
        (r, s) for r in report.records for s in r.shells
    ]
    shells.sort(key=lambda item: (item[0].direction_index, item[1].k, item[1].j, item[0].check.value))
    for r, s in shells:
        writer.writerow(
            {
                "row_type": "shell",
                "direction_index": r.direction_index,
                "direction": format_vector(r.direction),
                "check": r.check.value,
                "k": s.k,
                "j": s.j,
                "t": format_float(s.t),
                "value": "" if s.value is None else format_float(s.value),
                "norm": "" if s.norm is None else format_float(s.norm),
            }
        )
    for r in report.records:
        writer.writerow(
            {
                "row_type": "verdict",
                "direction_index": r.direction_index,
                "direction": format_vector(r.direction),
                "check": r.check.value,
                "status": r.status,
                "verdict": r.verdict or "",
            }
        )
    return buf.getvalue()


def render_text(report: AnalysisReport) -> str:
    """Human-readable verdict table."""
    plan = report.plan
    lines = [
        f"dirsens report {plan.name} (schema {report.schema_version})",
        f"problem: {plan.problem}",
        f"base point: {format_vector(plan.base_point)}",
        "",
    ]
    header = f"{'dir':>4}  {'direction':<18} {'check':<10} {'verdict':<24} {'time':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for r in report.records:
        verdict = r.verdict or ("error" if r.status == "error" else "-")
        lines.append(
            f"{r.direction_index:>4}  {format_vector(r.direction):<18} {r.check.value:<10} "
            f"{verdict:<24} {r.wall_time:>7.2f}s"
        )
        if r.status == "error":
            lines.append(f"{'':>6}{r.message}")
    certs = [r for r in report.records if r.check == Check.THM3_3 and r.verdict]
    if certs:
        lines.append("")
        lines.append("Lipschitz sufficient condition:")
        for r in certs:
            reason = r.values.get("reason") or ""
            suffix = f" ({reason})" if reason else ""
            lines.append(f"  u = {format_vector(r.direction)}: {r.verdict}{suffix}")
    return "\n".join(lines) + "\n"


def emit(
    report: AnalysisReport,
    formats: Sequence[Union[ReportFormat, str]],
    out_dir: Union[str, Path],
    stem: str = "report",
) -> List[Path]:
    """
    Write the report in each requested format to `out_dir`.

    Raises:
        ReportIOError: if a file cannot be written.
    """
    out_dir = Path(out_dir)
    renderers = {
        ReportFormat.JSON: (".json", AnalysisReport.to_json),
        ReportFormat.CSV: (".csv", render_csv),
        ReportFormat.TEXT: (".txt", render_text),
    }
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for fmt in formats:
            suffix, render = renderers[ReportFormat(fmt)]
            path = out_dir / f"{stem}{suffix}"
            path.write_text(render(report), encoding="utf-8")
            written.append(path)
    except OSError as e:
        raise ReportIOError(f"cannot write report to {out_dir}: {e}") from e
    logger.info(f"wrote {', '.join(str(p) for p in written)}")
    return written


def load_report(path: Union[str, Path]) -> AnalysisReport:
    """
    Read and validate a JSON report.

    Raises:
        ReportIOError: if the file cannot be read.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ReportIOError(f"cannot read report {path}: {e}") from e
    return AnalysisReport.model_validate_json(text)

