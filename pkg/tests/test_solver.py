import math

import numpy as np
import pytest

from dirsens.engine import AnalysisConfig, StabilityProperty, Verdict
from dirsens.errors import DimensionOverflow, ValueAtBaseInfinite
from dirsens.expressions import parse_problem
from dirsens.solver import (
    ValueSolver,
    decays,
    directional_solutions,
    restore_feasible_point,
    search_directions,
    solve_value,
    stability_diagnostics,
)


def test_search_directions():
    assert search_directions(1).tolist() == [[-1.0], [1.0]]
    assert len(search_directions(2)) == 8
    assert len(search_directions(3)) == 26
    # signed axes plus signed pairs
    assert len(search_directions(4)) == 8 + 6 * 4


def test_cube_root_value(cubic):
    res = solve_value(cubic, [0.008])
    assert res.feasible
    assert res.value == pytest.approx(0.2, abs=1e-6)
    assert len(res.argmins) == 1
    assert res.argmins[0][0] == pytest.approx(0.2, abs=1e-5)

    res = solve_value(cubic, [-0.001])
    assert res.value == pytest.approx(-0.1, abs=1e-6)


def test_danskin_values(danskin):
    res = solve_value(danskin, [1.0])
    assert res.value == pytest.approx(-1.0)
    assert [a.tolist() for a in res.argmins] == [pytest.approx([-1.0], abs=1e-6)]

    res = solve_value(danskin, [0.0])
    assert res.value == pytest.approx(0.0)
    ys = sorted(float(a[0]) for a in res.argmins)
    assert ys[0] == pytest.approx(-1.0, abs=1e-6)
    assert ys[-1] == pytest.approx(1.0, abs=1e-6)
    assert len(ys) > 10


def test_infeasible_parameter(jump):
    res = solve_value(jump, [0.5])
    assert not res.feasible
    assert res.value == math.inf
    assert res.argmins == ()
    assert res.distance_to(np.zeros(1)) == math.inf
    assert solve_value(jump, [0.0]).value == pytest.approx(-1.0)


def test_two_dimensional_decisions(lp):
    res = solve_value(lp, [1.0])
    assert res.value == pytest.approx(1.0, abs=1e-6)
    for a in res.argmins:
        assert a.sum() == pytest.approx(1.0, abs=1e-4)
        assert (a >= -1e-9).all()


def test_decision_dimension_cap(lp):
    with pytest.raises(DimensionOverflow):
        solve_value(lp, [0.0], config=AnalysisConfig(max_decision_dim=1))


def test_value_solver_caches(cubic):
    solver = ValueSolver(cubic)
    first = solver.solve([0.008])
    assert solver.solve(np.array([0.008])) is first
    assert solver.cache_size == 1
    assert solver.value([0.0]) == pytest.approx(0.0, abs=1e-6)
    assert solver.cache_size == 2


def test_decays():
    t = 0.1 * 0.5 ** np.arange(5)
    assert decays(t, t ** (1 / 3), 1e-6) is True
    assert decays(t, np.full(5, 0.5), 1e-3) is False
    assert decays(t, np.full(5, 1e-4), 1e-3) is True
    assert decays(t, [math.inf] * 5, 1e-3) is False


def test_directional_solutions_zero_direction(cubic, schedule, config):
    est = directional_solutions(cubic, [0.0], [0.0], schedule, config)
    assert len(est.points) == 1
    assert est.points[0][0] == pytest.approx(0.0, abs=1e-5)
    assert est.shell_history == []


def test_directional_solutions_cube_root(cubic, schedule, config):
    est = directional_solutions(cubic, [0.0], [1.0], schedule, config)
    assert est.converged
    assert len(est.points) == 1
    assert est.points[0][0] == pytest.approx(0.0, abs=1e-5)
    # |S(t) - 0| = t^(1/3)
    assert 0.25 < est.rates[0] < 0.45
    assert est.shell_history


def test_directional_solutions_select_branch(danskin, schedule, config):
    est = directional_solutions(danskin, [0.0], [1.0], schedule, config)
    assert est.points
    assert all(abs(p[0] + 1.0) <= 1e-3 for p in est.points)

    est = directional_solutions(danskin, [0.0], [-1.0], schedule, config)
    assert est.points
    assert all(abs(p[0] - 1.0) <= 1e-3 for p in est.points)


def test_directional_solutions_infinite_base(jump, schedule, config):
    with pytest.raises(ValueAtBaseInfinite):
        directional_solutions(jump, [0.5], [1.0], schedule, config)


def test_stability_cube_root(cubic, schedule, config):
    verdicts = {v.property: v for v in stability_diagnostics(cubic, [0.0], [1.0], schedule, config)}
    assert list(verdicts) == [
        StabilityProperty.RESTRICTED_INF_COMPACT,
        StabilityProperty.INNER_SEMICONTINUOUS,
        StabilityProperty.INNER_CALM,
        StabilityProperty.INNER_CALM_STAR,
    ]
    assert verdicts[StabilityProperty.RESTRICTED_INF_COMPACT].verdict == Verdict.HOLDS
    assert verdicts[StabilityProperty.INNER_SEMICONTINUOUS].verdict == Verdict.HOLDS
    assert verdicts[StabilityProperty.INNER_CALM].verdict == Verdict.FAILS
    assert verdicts[StabilityProperty.INNER_CALM].witnesses
    assert verdicts[StabilityProperty.INNER_CALM_STAR].verdict == Verdict.FAILS
    lo, hi = verdicts[StabilityProperty.RESTRICTED_INF_COMPACT].omega
    assert lo[0] < 0.0 < hi[0]


def test_stability_lipschitz_solutions(mfcq, schedule, config):
    for v in stability_diagnostics(mfcq, [0.0], [1.0], schedule, config):
        assert v.verdict == Verdict.HOLDS, v.property
    calm = stability_diagnostics(mfcq, [0.0], [-1.0], schedule, config)[2]
    assert calm.kappa_estimate == pytest.approx(1.0, rel=1e-3)


ESCAPING = """\
problem escaping
params  n=2
vars    m=1
box     y1 in [-1, 1]
min     log(1 + (y1 - 1000*x2)^2) / 100
"""


def test_restricted_inf_compactness_checks_every_sequence(schedule, config):
    # along u itself x2 = 0 and the argmin stays put; off-axis it leaves the box
    prob = parse_problem(ESCAPING)
    ric = stability_diagnostics(prob, [0.0, 0.0], [1.0, 0.0], schedule, config)[0]
    assert ric.property == StabilityProperty.RESTRICTED_INF_COMPACT
    assert ric.verdict == Verdict.FAILS
    assert ric.witnesses
    assert all(w["j"] != 0 for w in ric.witnesses)
    assert all(w["wider_value"] < w["value"] for w in ric.witnesses)


def test_restore_feasible_point(cubic):
    z = np.array([0.0, 0.5])
    assert restore_feasible_point(cubic, z, 0.1) is z
    restored = restore_feasible_point(cubic, np.array([0.001, 0.0]), 0.2)
    assert restored is not None
    assert cubic.P(restored[:1], restored[1:])[0] <= 0.0
    assert np.max(np.abs(restored - [0.001, 0.0])) <= 0.2
