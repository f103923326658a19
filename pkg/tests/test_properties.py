import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dirsens.expressions import format_expr, grad, parse_expression
from dirsens.expressions.nodes import evaluate
from dirsens.geometry import Polyhedron, h_to_v, normal_cone, tangent_cone, v_to_h

coords = st.integers(min_value=-5, max_value=5)
points_2d = st.lists(st.tuples(coords, coords), min_size=3, max_size=7, unique=True)
coefficients = st.floats(min_value=-3, max_value=3, allow_nan=False).map(lambda c: round(c, 3))

PROPERTY_SETTINGS = settings(max_examples=30, deadline=None)


@PROPERTY_SETTINGS
@given(points_2d)
def test_hull_round_trip(points):
    V = np.array(points, dtype=float)
    assume(np.linalg.matrix_rank(V[1:] - V[0]) == 2)
    hull = v_to_h(V)
    assert all(hull.contains(v, tol=1e-7) for v in V)

    vertices, cone = h_to_v(hull)
    assert cone.is_zero
    for vertex in vertices:
        assert np.min(np.max(np.abs(V - vertex), axis=1)) < 1e-7
    assert v_to_h(vertices).same_set(hull)


@PROPERTY_SETTINGS
@given(st.lists(st.tuples(coords, st.integers(min_value=1, max_value=4)), min_size=1, max_size=3))
def test_box_vertices(bounds):
    lower = [float(lo) for lo, _ in bounds]
    upper = [float(lo + width) for lo, width in bounds]
    box = Polyhedron.box(lower, upper)
    vertices, cone = h_to_v(box)
    assert len(vertices) == 2 ** len(bounds)
    assert cone.is_zero
    assert v_to_h(vertices).same_set(box)


@PROPERTY_SETTINGS
@given(
    st.lists(st.tuples(coords, st.integers(min_value=1, max_value=4)), min_size=2, max_size=2),
    st.lists(st.floats(min_value=0, max_value=1), min_size=2, max_size=2),
    st.lists(st.floats(min_value=-1, max_value=1), min_size=2, max_size=2),
)
def test_tangent_normal_polarity(bounds, where, d):
    lower = np.array([lo for lo, _ in bounds], dtype=float)
    upper = lower + np.array([w for _, w in bounds], dtype=float)
    # snap to a face when close so active constraints appear
    x = np.where(np.array(where) < 0.3, lower, np.where(np.array(where) > 0.7, upper, (lower + upper) / 2))
    box = Polyhedron.box(lower, upper)
    T = tangent_cone(box, x)
    N = normal_cone(box, x)
    if T.contains(d):
        assert all(float(np.dot(g, d)) <= 1e-9 for g in N.generators())
    if all(float(np.dot(g, d)) <= 0 for g in N.generators()):
        assert T.contains(d, tol=1e-7)


@PROPERTY_SETTINGS
@given(coefficients, coefficients, coefficients, st.floats(-2, 2), st.floats(-2, 2))
def test_gradient_matches_central_differences(a, b, c, x1, y1):
    e = parse_expression(f"{a}*x1^2 + {b}*x1*y1 + {c}*sin(y1) + exp(x1/4)")
    g = grad(e, {"x1": x1, "y1": y1}, ["x1", "y1"])
    h = 1e-6
    for i, name in enumerate(("x1", "y1")):
        plus = {"x1": x1, "y1": y1}
        minus = dict(plus)
        plus[name] += h
        minus[name] -= h
        fd = (evaluate(e, plus) - evaluate(e, minus)) / (2 * h)
        assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-5)


@PROPERTY_SETTINGS
@given(coefficients, coefficients, st.integers(min_value=1, max_value=4))
def test_format_round_trip(a, b, n):
    e = parse_expression(f"-({a})*x1^{n} - max(y1, {b}) / (1 + abs(x1))")
    assert parse_expression(format_expr(e)) == e
