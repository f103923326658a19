import math

import numpy as np
import pytest

from dirsens.engine import AnalysisConfig, DirectionMode
from dirsens.errors import NonSmoothModel, PatternOverflow, PointNotFeasible
from dirsens.expressions import parse_problem
from dirsens.geometry import GeneratorCone, Polyhedron
from dirsens.multipliers import (
    LocalModel,
    SetKind,
    classical_multipliers,
    critical_cone,
    critical_cone_from,
    directional_multipliers,
    graphical_derivative,
    linearization_cone,
    linearization_from_tangent,
    multipliers_from_model,
)
from dirsens.multipliers.sets import nonzero_point
from dirsens.oracle import DiniEstimate

UNBOUNDED = DiniEstimate(upper=math.inf, lower=-math.inf, samples=[], kind="hadamard")


def _problem(st: str, objective: str = "y1"):
    return parse_problem(
        f"problem inline\nparams n=1\nvars m=1\nbox y1 in [-1, 1]\nmin {objective}\nst {st}\n"
    )


def test_local_model_shapes(cube_root_model):
    assert (cube_root_model.n, cube_root_model.m, cube_root_model.p) == (1, 1, 2)
    assert cube_root_model.n_patterns == 1
    assert cube_root_model.graphical_derivative([1.0], [2.0]).tolist() == [1.0, 2.0]
    with pytest.raises(ValueError):
        LocalModel.from_arrays(
            x=[0.0], y=[0.0], grad_x=[0.0], grad_y=[1.0],
            J_x=[[1.0]], J_y=[[1.0]],
            tangent=Polyhedron.whole(2), normal=GeneratorCone.zero(1),
        )


def test_local_model_at(cubic):
    model = LocalModel.at(cubic, [0.0], [0.0])
    assert model.J_x.tolist() == [[1.0]]
    assert model.J_y.tolist() == [[0.0]]
    assert model.grad_y.tolist() == [1.0]
    assert model.normal.contains([1.0]) and not model.normal.contains([-1.0])
    with pytest.raises(PointNotFeasible):
        LocalModel.at(cubic, [1.0], [0.0])


def test_local_model_rejects_nonsmooth():
    with pytest.raises(NonSmoothModel):
        LocalModel.at(_problem("abs(y1) - 1 in NonPositive"), [0.0], [0.0])


def test_local_model_unconstrained(unconstrained):
    model = LocalModel.at(unconstrained, [1.0], [1.0])
    assert model.p == 1
    assert model.normal.is_zero
    sigma = multipliers_from_model(model, 1)
    assert sigma.contains([0.0])


def test_graphical_derivative(cubic):
    assert graphical_derivative(cubic, [0.0], [1.0], [1.0], [2.0]).tolist() == [-5.0]
    with pytest.raises(NonSmoothModel):
        graphical_derivative(_problem("abs(y1) - x1 in NonPositive"), [0.0], [0.5], [1.0], [0.0])


def test_linearization_cones(cube_root_model, cubic):
    T, J_x, J_y = cube_root_model.tangent, cube_root_model.J_x, cube_root_model.J_y
    assert linearization_from_tangent(T, J_x, J_y, [1.0]).is_empty
    assert linearization_from_tangent(T, J_x, J_y, [0.0]).same_set(Polyhedron.whole(1))

    assert linearization_cone(cubic, [0.0], [0.0], [1.0]).is_empty
    assert linearization_cone(cubic, [0.0], [0.0], [-1.0]).same_set(Polyhedron.whole(1))


def test_critical_cone_at_zero_direction(cube_root_model):
    base = linearization_from_tangent(
        cube_root_model.tangent, cube_root_model.J_x, cube_root_model.J_y, [0.0]
    )
    spec = critical_cone_from(base, cube_root_model.grad_x, cube_root_model.grad_y, [0.0], UNBOUNDED)
    assert spec.slab == []
    assert spec.cone.same_set(Polyhedron.whole(1))

    # finite bounds collapse to 0 without padding
    spec = critical_cone_from(
        base, cube_root_model.grad_x, cube_root_model.grad_y, [0.0], DiniEstimate(0.5, -0.5)
    )
    assert spec.pad == 0.0
    assert spec.cone.same_set(Polyhedron.origin(1))


def test_critical_cone_padding(additive):
    spec = critical_cone(additive, [0.0], [0.0], [1.0], DiniEstimate(0.0, 0.0))
    assert spec.pad == AnalysisConfig().slab_pad
    assert spec.cone.contains([1.0])
    assert not spec.cone.contains([0.5])
    assert not spec.is_empty


@pytest.mark.parametrize("bound", [-math.inf, math.inf])
def test_critical_cone_empty_for_unreachable_derivative(additive, bound):
    spec = critical_cone(additive, [0.0], [0.0], [-1.0], DiniEstimate(bound, bound))
    assert spec.is_empty
    assert directional_multipliers(additive, [0.0], [0.0], [-1.0], spec, 0).is_empty


def test_classical_sets_cube_root_model(cube_root_model):
    assert multipliers_from_model(cube_root_model, 1).is_empty
    singular = multipliers_from_model(cube_root_model, 0)
    assert singular.kind == SetKind.CLASSICAL
    assert singular.contains([2.0, 0.0])
    assert not singular.contains([-1.0, 0.0])
    assert not singular.contains([0.0, 1.0])
    assert singular.contains_zeta([3.0])
    assert not singular.contains_zeta([-1.0])


def test_directional_sets_cube_root_model(cube_root_model):
    base = linearization_from_tangent(
        cube_root_model.tangent, cube_root_model.J_x, cube_root_model.J_y, [1.0]
    )
    spec = critical_cone_from(
        base, cube_root_model.grad_x, cube_root_model.grad_y, [1.0], DiniEstimate(math.inf, math.inf)
    )
    assert spec.is_empty
    for alpha in (0, 1):
        assert multipliers_from_model(cube_root_model, alpha, spec, [1.0]).is_empty

    base = linearization_from_tangent(
        cube_root_model.tangent, cube_root_model.J_x, cube_root_model.J_y, [0.0]
    )
    spec = critical_cone_from(base, cube_root_model.grad_x, cube_root_model.grad_y, [0.0], UNBOUNDED)
    sphere = DirectionMode.DIR0_SPHERE
    assert multipliers_from_model(cube_root_model, 1, spec, mode=sphere).is_empty

    singular = multipliers_from_model(cube_root_model, 0, spec, mode=sphere)
    assert singular.kind == SetKind.DIRECTIONAL
    assert singular.direction_mode == sphere
    assert singular.provenance["mode"] == "Dir0Sphere"
    assert len(singular.pieces) == 1
    piece = singular.pieces[0]
    assert np.linalg.norm(piece.representative_v) == pytest.approx(1.0)
    assert singular.contains([1.0, 0.0])
    assert singular.contains_zeta([1.0])
    assert not singular.contains_zeta([-1.0])


def test_alpha_must_be_binary(cube_root_model):
    with pytest.raises(ValueError):
        multipliers_from_model(cube_root_model, 2)


def test_one_sided_constraint_multipliers():
    prob = _problem("-y1 in NonPositive")
    sigma = classical_multipliers(prob, [0.0], [0.0], 1)
    assert sigma.contains([1.0])
    assert not sigma.contains([0.5])
    singular = classical_multipliers(prob, [0.0], [0.0], 0)
    assert singular.contains([0.0])
    assert not singular.contains([1.0])


def test_two_sided_constraint_multipliers():
    prob = _problem("(-y1, y1) in NonPositive(2)")
    sigma = classical_multipliers(prob, [0.0], [0.0], 1)
    assert sigma.contains([1.0, 0.0])
    assert sigma.contains([3.0, 2.0])
    assert not sigma.contains([0.0, 0.0])
    singular = classical_multipliers(prob, [0.0], [0.0], 0)
    assert singular.contains([0.0, 0.0])
    assert singular.contains([5.0, 5.0])
    assert not singular.contains([1.0, 0.0])


def test_directional_multipliers_select_active_piece(mfcq):
    spec = critical_cone(mfcq, [0.0], [0.0], [1.0], DiniEstimate(1.0, 1.0))
    assert spec.cone.contains([1.0])
    assert not spec.cone.contains([0.9])

    sigma = directional_multipliers(mfcq, [0.0], [0.0], [1.0], spec, 1)
    assert len(sigma.pieces) == 1
    assert sigma.contains([1.0, 0.0])
    assert not sigma.contains([0.0, 1.0])
    assert sigma.contains_zeta([1.0])
    assert sigma.pieces[0].representative_v[0] == pytest.approx(1.0)

    singular = directional_multipliers(mfcq, [0.0], [0.0], [1.0], spec, 0)
    assert singular.contains([0.0, 0.0])
    assert not singular.contains([1.0, 0.0])


def test_pattern_overflow(lp):
    with pytest.raises(PatternOverflow):
        classical_multipliers(lp, [0.0], [0.0, 0.0], 1, AnalysisConfig(pattern_cap=2))


def test_nonzero_point():
    assert nonzero_point(Polyhedron.origin(2)) is None
    ray = Polyhedron.from_rows(2, [([-1.0, 0.0], 0.0)], [([0.0, 1.0], 0.0)])
    v = nonzero_point(ray)
    assert v.tolist() == pytest.approx([1.0, 0.0])


def _random_smooth_problem(seed: int):
    """Inequality constraints through (0, 0), some active, some slack."""
    rng = np.random.default_rng(seed)
    n, m, p = int(rng.integers(1, 3)), int(rng.integers(1, 3)), int(rng.integers(1, 4))
    xs = [f"x{i + 1}" for i in range(n)]
    ys = [f"y{i + 1}" for i in range(m)]

    def linear(names):
        return " + ".join(f"({int(c)})*{v}" for c, v in zip(rng.integers(-2, 3, len(names)), names))

    rows = []
    for i in range(p):
        offset = 0 if i == 0 or rng.random() < 0.6 else -1
        rows.append(f"{linear(xs)} + {linear(ys)} + ({int(rng.integers(-1, 2))})*y1^2 + ({offset})")
    objective = f"{linear(xs)}*y1 + {linear(ys)} + y1^2"
    constraint = rows[0] if p == 1 else f"({', '.join(rows)})"
    kind = "NonPositive" if p == 1 else f"NonPositive({p})"
    box = "\n".join(f"box {y} in [-1, 1]" for y in ys)
    text = (
        f"problem random{seed}\nparams n={n}\nvars m={m}\n{box}\n"
        f"min {objective}\nst {constraint} in {kind}\n"
    )
    return parse_problem(text), n, m


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("alpha", [0, 1])
def test_zero_direction_recovers_classical_multipliers(seed, alpha):
    prob, n, m = _random_smooth_problem(seed)
    x_bar, y = [0.0] * n, [0.0] * m
    zero = [0.0] * n
    spec = critical_cone(prob, x_bar, y, zero, DiniEstimate(0.0, 0.0, kind="hadamard"))
    classical = classical_multipliers(prob, x_bar, y, alpha)

    union = []
    for mode in (DirectionMode.DIR_U, DirectionMode.DIR0_SPHERE):
        union += directional_multipliers(prob, x_bar, y, zero, spec, alpha, mode).pieces

    if classical.is_empty:
        assert union == []
        return
    (full,) = classical.pieces
    for piece in union:
        assert full.polyhedron.includes(piece.polyhedron)
        assert full.zeta.includes(piece.zeta)
    assert any(piece.polyhedron.same_set(full.polyhedron) for piece in union)
    assert any(piece.zeta.same_set(full.zeta) for piece in union)
