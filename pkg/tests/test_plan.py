import dataclasses

import numpy as np
import pytest

from dirsens.engine import Check, Variant, set_record_callback
from dirsens.errors import ParseError, PlanError
from dirsens.geometry import SequenceSchedule
from dirsens.multipliers import AnalysisContext
from dirsens.plan import AnalysisPlan, load_plan, parse_plan, run_plan, select_variant


def _plan_text(problem: str, checks: str, *extra: str, directions=("1",)) -> str:
    lines = ["plan test", f"problem {problem}", "point 0"]
    lines += [f"direction {u}" for u in directions]
    lines += [f"checks {checks}", "schedule K=12", "seed 7", *extra]
    return "\n".join(lines) + "\n"


def test_parse_plan(data_dir):
    text = (
        "plan demo   # comment\n"
        "problem cubic.dsp\n"
        "point 0\n"
        "direction 0\n"
        "direction -1\n"
        "checks Thm3_2, Subdiff, Stability, Subdiff\n"
        "schedule K=8 angular_count=4\n"
        "tol conv_tol=1e-4 grid_points=101\n"
        "variant iii\n"
        "seed 3\n"
        "workers 2\n"
    )
    plan = parse_plan(text, data_dir)
    assert plan.name == "demo"
    assert plan.problem_path == data_dir / "cubic.dsp"
    assert plan.base_point == (0.0,)
    assert plan.directions == ((0.0,), (-1.0,))
    assert plan.checks == (Check.THM3_2, Check.SUBDIFF, Check.STABILITY)
    assert plan.ordered_checks == [Check.STABILITY, Check.SUBDIFF, Check.THM3_2]
    assert plan.schedule == SequenceSchedule(K=8, angular_count=4)
    assert plan.config.conv_tol == 1e-4
    assert plan.config.grid_points == 101
    assert plan.config.seed == 3
    assert plan.config.workers == 2
    assert plan.variant == Variant.INNER_SEMICONTINUOUS


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("plan x\nproblem p.dsp\npoint\n", 3, 6),
        ("problem p.dsp\npoint 0\ndirection 1\nchecks Dini, Foo\n", 4, 8),
        ("problem p.dsp\nfrobnicate 1\n", 2, 1),
        ("problem p.dsp\npoint 0\ndirection 1\nchecks Dini\nschedule K=abc\n", 5, 10),
        ("problem p.dsp\npoint 0\ndirection 1\nchecks Dini\nschedule K\n", 5, 10),
        ("problem p.dsp\npoint 0\ndirection 1\nchecks Dini\nvariant v\n", 5, 9),
        ("problem p.dsp\npoint (0, x)\n", 2, 7),
    ],
)
def test_parse_plan_errors(text, line, column):
    with pytest.raises(ParseError) as exc:
        parse_plan(text)
    assert (exc.value.line, exc.value.column) == (line, column)


@pytest.mark.parametrize(
    "text, match",
    [
        ("point 0\ndirection 1\nchecks Dini\n", "no problem"),
        ("problem p.dsp\npoint 0\nchecks Dini\n", "at least one direction"),
        ("problem p.dsp\ndirection 1\nchecks Dini\n", "base point"),
        ("problem p.dsp\npoint 0\ndirection 1, 2\nchecks Dini\n", "dimension"),
        ("problem p.dsp\npoint 0\ndirection 1\n", "no checks"),
        ("problem p.dsp\npoint 0\ndirection 1\nchecks Thm3_1\n", "requires Subdiff, Stability"),
        ("problem p.dsp\npoint 0\ndirection 1\nchecks Cones\n", "requires Dini"),
        ("problem p.dsp\npoint 0\ndirection 1\nchecks Dini\ntol frobnicate=1\n", "unknown AnalysisConfig field"),
        ("problem p.dsp\npoint 0\ndirection 1\nchecks Dini\nschedule K=0\n", "K must be at least 1"),
    ],
)
def test_plan_errors(text, match):
    with pytest.raises(PlanError, match=match):
        parse_plan(text)


def test_with_overrides(data_dir):
    plan = load_plan(data_dir / "danskin.plan")
    changed = plan.with_overrides(seed=11, grid=51, shells=6)
    assert (changed.config.seed, changed.config.grid_points, changed.schedule.K) == (11, 51, 6)
    assert plan.with_overrides() == plan
    with pytest.raises(PlanError):
        plan.with_overrides(shells=0)


def test_load_plan_missing(tmp_path):
    with pytest.raises(PlanError):
        load_plan(tmp_path / "missing.plan")


def test_select_variant(cubic, schedule, config):
    ctx = AnalysisContext(cubic, [0.0], schedule, config)
    assert select_variant(ctx, np.array([1.0])) == Variant.INNER_SEMICONTINUOUS


def test_run_danskin_plan(data_dir):
    seen = []
    set_record_callback(seen.append)
    report = run_plan(load_plan(data_dir / "danskin.plan"))

    assert report.plan.name == "danskin"
    assert [r.check for r in report.records] == [Check.SUBDIFF, Check.DANSKIN]
    assert seen == report.records
    subdiff, danskin = report.records
    assert subdiff.status == "ok"
    assert subdiff.verdict == "Lipschitz"
    assert subdiff.values["continuity"] == "EmpiricallyContinuous"
    assert subdiff.estimates["limiting"].points == [pytest.approx([-1.0], abs=1e-3)]
    assert danskin.verdict == "Holds"
    assert danskin.values["gradient_set"] == [pytest.approx([-1.0], abs=1e-6)]
    assert not report.violated
    assert all(r.wall_time >= 0.0 for r in report.records)


def test_run_plan_keeps_errors_on_records(data_dir):
    plan = parse_plan(_plan_text("mfcq.dsp", "Subdiff, Danskin"), data_dir)
    report = run_plan(plan)
    subdiff, danskin = report.records
    assert subdiff.status == "ok"
    assert danskin.status == "error"
    assert danskin.verdict is None
    assert danskin.provenance == {"error": "ConstraintDependsOnParameter"}
    assert report.errors == [danskin]


def test_run_plan_checks_dimension(data_dir, danskin):
    plan = AnalysisPlan(
        problem_path=data_dir / "danskin.dsp",
        base_point=(0.0, 0.0),
        directions=((1.0, 0.0),),
        checks=(Check.DINI,),
    )
    with pytest.raises(PlanError):
        run_plan(plan, problem=danskin)


def test_run_plan_missing_problem(tmp_path):
    plan = parse_plan(_plan_text("missing.dsp", "Dini"), tmp_path)
    with pytest.raises(PlanError):
        run_plan(plan)


def test_workers_do_not_change_records(data_dir):
    text = _plan_text("danskin.dsp", "Dini, Subdiff", directions=("1", "-1", "0"))
    plan = parse_plan(text, data_dir)
    serial = run_plan(plan)
    threaded = run_plan(dataclasses.replace(plan, config=dataclasses.replace(plan.config, workers=3)))
    assert [(r.direction_index, r.check) for r in threaded.records] == [
        (i, c) for i in range(3) for c in (Check.DINI, Check.SUBDIFF)
    ]
    assert [r.model_dump(mode="json") for r in threaded.records] == [
        r.model_dump(mode="json") for r in serial.records
    ]


def test_run_cubic_plan(data_dir):
    report = run_plan(load_plan(data_dir / "cubic.plan"))
    assert len(report.records) == 16
    along_u = [r for r in report.records if r.direction_index == 1]
    assert [r.check for r in along_u] == [
        Check.STABILITY,
        Check.DINI,
        Check.SUBDIFF,
        Check.CONES,
        Check.FOSCMS,
        Check.THM3_1,
        Check.THM3_2,
        Check.THM3_3,
    ]
    assert all(r.status == "ok" for r in along_u)
    by_check = {r.check: r for r in along_u}
    assert by_check[Check.STABILITY].verdict == "variant (iii)"
    assert by_check[Check.DINI].values["upper"] == "inf"
    assert by_check[Check.SUBDIFF].verdict == "NotLipschitz"
    assert by_check[Check.THM3_3].verdict == "NotCertified"
    assert by_check[Check.THM3_3].provenance["variant"] == "iii"
