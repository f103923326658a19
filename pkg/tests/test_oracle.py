import math

import numpy as np
import pytest

from dirsens.engine import AnalysisConfig, ContinuityStatus, LipschitzStatus, Verdict
from dirsens.errors import DimensionOverflow, NotDirectionallyLipschitz, ValueAtBaseInfinite
from dirsens.oracle import (
    AnalyticValueFunction,
    DiniEstimate,
    ProblemValueFunction,
    as_value_function,
    continuity_diagnostic,
    dini,
    directional_clarke_subdiff,
    directional_limiting_subdiff,
    directional_singular_subdiff,
    divergence_sign,
    frechet_subgradients,
    hadamard,
    lipschitz_verdict,
)

cube_root = AnalyticValueFunction(lambda x: np.cbrt(x[0]), name="cbrt")
minus_abs = AnalyticValueFunction(lambda x: -abs(x[0]), name="-|x|")
plus_abs = AnalyticValueFunction(lambda x: abs(x[0]), name="|x|")


def test_analytic_value_function():
    assert cube_root.dim == 1
    assert cube_root.value(8.0) == pytest.approx(2.0)
    assert AnalyticValueFunction(lambda x: math.log(x[0])).value([-1.0]) == math.inf
    assert AnalyticValueFunction(lambda x: np.nan).value([0.0]) == math.inf
    with pytest.raises(ValueError):
        AnalyticValueFunction(lambda x: 0.0, dim=0)


def test_as_value_function(cubic):
    wrapped = as_value_function(cubic)
    assert isinstance(wrapped, ProblemValueFunction)
    assert wrapped.dim == 1
    assert as_value_function(plus_abs) is plus_abs
    with pytest.raises(TypeError):
        as_value_function("cubic")


def test_dini_estimate_validation():
    with pytest.raises(ValueError):
        DiniEstimate(upper=0.0, lower=1.0)
    assert DiniEstimate(1.0, 1.0).converged
    assert not DiniEstimate(math.inf, 0.0).finite


def test_divergence_sign():
    t = 0.1 * 0.5 ** np.arange(5)
    assert divergence_sign(t, t ** (-2 / 3)) == 1
    assert divergence_sign(t, -(t ** (-2 / 3))) == -1
    assert divergence_sign(t, np.ones(5)) == 0
    assert divergence_sign(t, [1.0, -2.0, 3.0, -4.0, 5.0]) == 0
    assert divergence_sign(t, [1.0, 2.0, math.inf]) == 1
    assert divergence_sign([], []) == 0


def test_dini_cube_root(schedule):
    est = dini(cube_root, [0.0], [1.0], schedule)
    assert est.upper == est.lower == math.inf
    assert est.kind == "dini"
    assert len(est.samples) == schedule.K

    est = dini(cube_root, [0.0], [-1.0], schedule)
    assert est.upper == est.lower == -math.inf


def test_dini_finite(schedule):
    est = dini(minus_abs, [0.0], [1.0], schedule)
    assert est.converged
    assert est.upper == pytest.approx(-1.0)
    # positively homogeneous in u
    assert dini(minus_abs, [0.0], [2.0], schedule).upper == pytest.approx(-2.0)


def test_dini_zero_direction(schedule):
    est = dini(cube_root, [0.0], [0.0], schedule)
    assert (est.lower, est.upper) == (0.0, 0.0)
    assert est.samples == []


def test_dini_on_problems(cubic, danskin, schedule, config):
    assert dini(cubic, [0.0], [1.0], schedule, config).upper == math.inf
    est = dini(danskin, [0.0], [1.0], schedule, config)
    assert est.lower == pytest.approx(-1.0, abs=1e-6)
    assert est.upper == pytest.approx(-1.0, abs=1e-6)


def test_dini_infinite_base(jump, schedule):
    with pytest.raises(ValueAtBaseInfinite):
        dini(jump, [0.5], [1.0], schedule)


def test_hadamard(schedule):
    est = hadamard(plus_abs, [0.0], [1.0], schedule)
    assert est.kind == "hadamard"
    assert est.lower == pytest.approx(1.0)
    assert est.upper == pytest.approx(1.0)


def test_hadamard_zero_direction(schedule):
    est = hadamard(plus_abs, [0.0], [0.0], schedule)
    assert (est.lower, est.upper) == (0.0, 0.0)

    est = hadamard(cube_root, [0.0], [0.0], schedule)
    assert est.upper == math.inf
    assert est.lower == -math.inf


def test_frechet_subgradients():
    assert [g.tolist() for g in frechet_subgradients(plus_abs, [0.0], 0.1)] == [
        pytest.approx([0.0], abs=1e-12)
    ]
    assert frechet_subgradients(minus_abs, [0.0], 0.1) == []
    assert frechet_subgradients(minus_abs, [2.0], 0.1)[0][0] == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        frechet_subgradients(plus_abs, [0.0], 0.0)


def test_limiting_subdiff_one_sided(schedule):
    est = directional_limiting_subdiff(minus_abs, [0.0], [1.0], schedule)
    assert est.converged
    assert [p.tolist() for p in est.points] == [pytest.approx([-1.0])]
    assert est.shell_history

    est = directional_limiting_subdiff(minus_abs, [0.0], [-1.0], schedule)
    assert [p.tolist() for p in est.points] == [pytest.approx([1.0])]


def test_limiting_subdiff_zero_direction(schedule):
    est = directional_limiting_subdiff(plus_abs, [0.0], [0.0], schedule)
    assert sorted(p[0] for p in est.points) == pytest.approx([-1.0, 1.0])


def test_singular_subdiff(schedule):
    est = directional_singular_subdiff(cube_root, [0.0], [1.0], schedule)
    assert est.contains_origin
    assert [r.tolist() for r in est.rays] == [pytest.approx([1.0])]

    est = directional_singular_subdiff(minus_abs, [0.0], [1.0], schedule)
    assert est.rays == []
    assert not est.is_empty


def test_danskin_limiting_subdiff(danskin, schedule, config):
    est = directional_limiting_subdiff(danskin, [0.0], [1.0], schedule, config)
    assert len(est.points) == 1
    assert est.points[0][0] == pytest.approx(-1.0, abs=1e-3)


def test_clarke_hull(schedule):
    est = directional_clarke_subdiff(plus_abs, [0.0], [0.0], schedule)
    assert sorted(v[0] for v in est.vertices) == pytest.approx([-1.0, 1.0])
    assert est.hull.contains([0.0])
    assert not est.hull.contains([1.5])

    est = directional_clarke_subdiff(minus_abs, [0.0], [1.0], schedule)
    assert [v.tolist() for v in est.vertices] == [pytest.approx([-1.0])]


def test_clarke_hull_errors(schedule):
    with pytest.raises(NotDirectionallyLipschitz):
        directional_clarke_subdiff(cube_root, [0.0], [1.0], schedule)
    wide = AnalyticValueFunction(lambda x: float(np.sum(x)), dim=4)
    with pytest.raises(DimensionOverflow):
        directional_clarke_subdiff(wide, np.zeros(4), np.ones(4), schedule, AnalysisConfig(hull_dim_cap=3))


ANALYTIC_LIPSCHITZ_CASES = [
    # value function, direction, Lipschitz near 0, modulus
    (AnalyticValueFunction(lambda x: 1.0, name="1"), [1.0], True, 0.0),
    (plus_abs, [1.0], True, 1.0),
    (minus_abs, [1.0], True, 1.0),
    (AnalyticValueFunction(lambda x: x[0] ** 2, name="x^2"), [1.0], True, None),
    (cube_root, [1.0], False, None),
    (AnalyticValueFunction(lambda x: max(x[0], 0.0), name="max(x,0)"), [1.0], True, 1.0),
    (AnalyticValueFunction(lambda x: min(x[0], 0.0), name="min(x,0)"), [1.0], True, 0.0),
    (AnalyticValueFunction(lambda x: 3 * x[0] if x[0] > 0 else -x[0], name="kink"), [1.0], True, 3.0),
]


@pytest.mark.parametrize(
    "vf, u, lipschitz, modulus",
    ANALYTIC_LIPSCHITZ_CASES,
    ids=[case[0].name for case in ANALYTIC_LIPSCHITZ_CASES],
)
def test_lipschitz_verdicts(vf, u, lipschitz, modulus, schedule):
    verdict = lipschitz_verdict(vf, [0.0], u, schedule)
    expected = LipschitzStatus.LIPSCHITZ if lipschitz else LipschitzStatus.NOT_LIPSCHITZ
    assert verdict.status == expected
    if modulus is not None:
        assert verdict.modulus == pytest.approx(modulus, rel=1e-6, abs=1e-9)
    if not lipschitz:
        assert verdict.witness["a"] == [0.0]
        assert verdict.witness["quotient"] > 10.0

    singular = directional_singular_subdiff(vf, [0.0], u, schedule)
    if singular.converged:
        assert (singular.rays == []) == lipschitz


def test_lipschitz_modulus_of_square(schedule):
    square = ANALYTIC_LIPSCHITZ_CASES[3][0]
    verdict = lipschitz_verdict(square, [0.0], [1.0], schedule)
    # subgradients 2x shrink with the shells
    assert verdict.modulus < 0.5


def test_lipschitz_on_problem(cubic, schedule, config):
    verdict = lipschitz_verdict(cubic, [0.0], [1.0], schedule, config)
    assert verdict.status == LipschitzStatus.NOT_LIPSCHITZ


def test_continuity(schedule):
    verdict = continuity_diagnostic(plus_abs, [0.0], [1.0], schedule)
    assert verdict.status == ContinuityStatus.CONTINUOUS
    assert verdict.lower_semicontinuous == Verdict.HOLDS
    assert verdict.witness is None

    step_up = AnalyticValueFunction(lambda x: 1.0 if x[0] > 0 else 0.0)
    verdict = continuity_diagnostic(step_up, [0.0], [1.0], schedule)
    assert verdict.status == ContinuityStatus.DISCONTINUOUS
    assert verdict.lower_semicontinuous == Verdict.HOLDS
    assert verdict.witness["gap"] == pytest.approx(1.0)

    step_down = AnalyticValueFunction(lambda x: -1.0 if x[0] > 0 else 0.0)
    verdict = continuity_diagnostic(step_down, [0.0], [1.0], schedule)
    assert verdict.status == ContinuityStatus.DISCONTINUOUS
    assert verdict.lower_semicontinuous == Verdict.FAILS


def test_continuity_jump_to_infeasible(jump, schedule, config):
    verdict = continuity_diagnostic(jump, [0.0], [1.0], schedule, config)
    assert verdict.status == ContinuityStatus.DISCONTINUOUS
    assert verdict.lower_semicontinuous == Verdict.HOLDS
    assert verdict.witness["gap"] == math.inf
    # feasible side
    assert continuity_diagnostic(jump, [0.0], [-1.0], schedule, config).status == ContinuityStatus.CONTINUOUS
