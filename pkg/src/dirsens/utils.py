import math
import re
from typing import Iterable, Sequence, Union

import numpy as np

VectorInput = Union[np.ndarray, Sequence[float], str, int, float]

_SPLIT = re.compile(r"[\s,;]+")


def parse_vector(value: VectorInput, dim: int | None = None) -> np.ndarray:
    """
    Parse input into a 1-D float array.

    Supports:
    - numpy arrays and sequences of numbers
    - str ("1, -2", "(0 1)", "[0.5]"; "inf"/"-inf" accepted)
    - int/float (a one-dimensional vector)
    """
    if isinstance(value, np.ndarray):
        arr = value.astype(float).ravel()
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        arr = np.array([float(value)])
    elif isinstance(value, str):
        body = value.strip().strip("()[]")
        parts = [p for p in _SPLIT.split(body) if p]
        if not parts:
            raise ValueError(f"Invalid vector string: {value!r}")
        try:
            arr = np.array([float(p.replace("−", "-")) for p in parts])
        except ValueError:
            raise ValueError(f"Invalid vector string: {value!r}")
    elif isinstance(value, (list, tuple)):
        try:
            arr = np.array([float(v) for v in value])
        except (TypeError, ValueError):
            raise ValueError(f"Invalid vector entries: {value!r}")
    else:
        raise TypeError(f"Unsupported vector type: {type(value)}")

    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"Expected a vector of length {dim}, got {arr.shape[0]}")
    return arr


def format_vector(v: Iterable[float]) -> str:
    """Format a vector the way parse_vector reads it back (repr floats)."""
    return "(" + ", ".join(format_float(x) for x in v) + ")"


def format_float(x: float) -> str:
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def is_zero_direction(u: np.ndarray, tol: float = 1e-12) -> bool:
    return float(np.linalg.norm(u)) < tol


def unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    return v / n if n > 0 else v


def loglog_slope(t: Sequence[float], q: Sequence[float]) -> float:
    """
    Least-squares slope of log|q| against log t.

    A sequence behaving like t^a has slope a; zero entries are floored at 1e-300.
    """
    lt = np.log(np.asarray(t, dtype=float))
    lq = np.log(np.maximum(np.abs(np.asarray(q, dtype=float)), 1e-300))
    if lt.size < 2 or np.ptp(lt) == 0:
        return 0.0
    slope, _ = np.polyfit(lt, lq, 1)
    return float(slope)


def cluster_points(
    points: Sequence[np.ndarray], tol: float
) -> list[tuple[np.ndarray, list[int]]]:
    """
    Greedy clustering in input order.

    Returns (representative, member indices) pairs; a point joins the first
    cluster whose representative lies within `tol` (infinity norm).
    """
    clusters: list[tuple[np.ndarray, list[int]]] = []
    for i, p in enumerate(points):
        for rep, members in clusters:
            if float(np.max(np.abs(rep - p))) <= tol:
                members.append(i)
                break
        else:
            clusters.append((np.asarray(p, dtype=float), [i]))
    return clusters
