import math

import numpy as np
import pytest

from dirsens.utils import (
    cluster_points,
    format_float,
    format_vector,
    is_zero_direction,
    loglog_slope,
    parse_vector,
    unit,
)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1, -2", [1.0, -2.0]),
        ("(0 1)", [0.0, 1.0]),
        ("[0.5]", [0.5]),
        ("−3", [-3.0]),
        ("inf, -inf", [math.inf, -math.inf]),
    ],
)
def test_parse_vector_strings(text, expected):
    assert parse_vector(text).tolist() == expected


def test_parse_vector_numbers_and_sequences():
    assert parse_vector(2).tolist() == [2.0]
    assert parse_vector((1, 2)).tolist() == [1.0, 2.0]
    assert parse_vector(np.array([[1.0], [2.0]])).tolist() == [1.0, 2.0]


def test_parse_vector_invalid():
    with pytest.raises(ValueError):
        parse_vector("one, two")
    with pytest.raises(ValueError):
        parse_vector("()")
    with pytest.raises(ValueError):
        parse_vector("1, 2", dim=3)
    with pytest.raises(TypeError):
        parse_vector({"x": 1})


def test_format_round_trip():
    v = [0.1, -2.0, math.inf]
    assert format_vector(v) == "(0.1, -2.0, inf)"
    assert parse_vector(format_vector(v)).tolist() == v
    assert format_float(-math.inf) == "-inf"


def test_zero_direction_and_unit():
    assert is_zero_direction(np.zeros(2))
    assert not is_zero_direction(np.array([1e-6, 0.0]))
    assert np.allclose(unit(np.array([3.0, 4.0])), [0.6, 0.8])
    assert unit(np.zeros(2)).tolist() == [0.0, 0.0]


def test_loglog_slope_recovers_power():
    t = 0.1 * 0.5 ** np.arange(8)
    assert loglog_slope(t, t ** (-2 / 3)) == pytest.approx(-2 / 3)
    assert loglog_slope(t, 3.0 * t) == pytest.approx(1.0)
    assert loglog_slope([0.1], [1.0]) == 0.0


def test_cluster_points_in_input_order():
    pts = [np.array([0.0]), np.array([0.0005]), np.array([1.0]), np.array([0.9995])]
    clusters = cluster_points(pts, 1e-3)
    assert [members for _, members in clusters] == [[0, 1], [2, 3]]
    assert clusters[0][0].tolist() == [0.0]
