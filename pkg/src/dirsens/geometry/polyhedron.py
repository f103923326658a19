"""
Polyhedra in H-representation and cones in V-representation.

Conversions use double description (`h_to_v`, `v_to_h`); projections use
Fourier-Motzkin elimination followed by LP redundancy pruning (`fm_project`).
Every LP goes through `lpsolve`, a thin wrapper around scipy's HiGHS backend.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from ..errors import DimensionOverflow

logger = logging.getLogger(__name__)

# Absolute tolerance used by LP-based comparisons
ABS_TOL = 1e-7

FM_ROW_CAP = 20_000
HV_DIM_CAP = 8


@dataclass(frozen=True)
class LPResult:
    status: int
    x: Optional[np.ndarray]
    fun: Optional[float]

    @property
    def optimal(self) -> bool:
        return self.status == 0

    @property
    def infeasible(self) -> bool:
        return self.status == 2

    @property
    def unbounded(self) -> bool:
        return self.status == 3


def lpsolve(
    c: np.ndarray,
    A_ub: Optional[np.ndarray] = None,
    b_ub: Optional[np.ndarray] = None,
    A_eq: Optional[np.ndarray] = None,
    b_eq: Optional[np.ndarray] = None,
    bounds=(None, None),
) -> LPResult:
    """Minimize c^T x; variables are free unless `bounds` says otherwise."""
    c = np.asarray(c, dtype=float)
    if A_ub is not None and len(A_ub) == 0:
        A_ub, b_ub = None, None
    if A_eq is not None and len(A_eq) == 0:
        A_eq, b_eq = None, None
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs"
    )
    if res.status not in (0, 2, 3):
        logger.debug(f"linprog returned status {res.status}: {res.message}")
    x = np.asarray(res.x, dtype=float) if res.x is not None else None
    fun = float(res.fun) if res.fun is not None else None
    return LPResult(status=int(res.status), x=x, fun=fun)


def _as_matrix(rows, dim: int) -> np.ndarray:
    if rows is None:
        return np.zeros((0, dim))
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        return np.zeros((0, dim))
    return arr.reshape(-1, dim)


def _as_vector(values, count: int) -> np.ndarray:
    if values is None:
        return np.zeros(count)
    return np.asarray(values, dtype=float).reshape(count)


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """
    Convex polyhedron {x | A x <= b, E x = f} in R^dim.

    A cone is a polyhedron whose offsets are all zero. The representation
    may be empty; emptiness is decided by an LP feasibility test.
    """

    dim: int
    A: np.ndarray = field(default=None)
    b: np.ndarray = field(default=None)
    E: np.ndarray = field(default=None)
    f: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        A = _as_matrix(self.A, self.dim)
        E = _as_matrix(self.E, self.dim)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", _as_vector(self.b, A.shape[0]))
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "f", _as_vector(self.f, E.shape[0]))

    @classmethod
    def from_rows(
        cls,
        dim: int,
        ineqs: Sequence[Tuple[Sequence[float], float]] = (),
        eqs: Sequence[Tuple[Sequence[float], float]] = (),
    ) -> "Polyhedron":
        for a, _ in list(ineqs) + list(eqs):
            if len(a) != dim:
                raise ValueError(f"Row {list(a)} does not have length {dim}")
        return cls(
            dim,
            A=[a for a, _ in ineqs],
            b=[b for _, b in ineqs],
            E=[e for e, _ in eqs],
            f=[f for _, f in eqs],
        )

    @classmethod
    def whole(cls, dim: int) -> "Polyhedron":
        return cls(dim)

    @classmethod
    def empty(cls, dim: int) -> "Polyhedron":
        return cls(dim, A=np.zeros((1, dim)), b=np.array([-1.0]))

    @classmethod
    def origin(cls, dim: int) -> "Polyhedron":
        return cls(dim, E=np.eye(dim), f=np.zeros(dim))

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "Polyhedron":
        lo = np.asarray(lower, dtype=float)
        hi = np.asarray(upper, dtype=float)
        dim = lo.shape[0]
        return cls(dim, A=np.vstack([np.eye(dim), -np.eye(dim)]), b=np.r_[hi, -lo])

    @property
    def n_ineqs(self) -> int:
        return self.A.shape[0]

    @property
    def n_eqs(self) -> int:
        return self.E.shape[0]

    @property
    def is_cone(self) -> bool:
        return not np.any(self.b) and not np.any(self.f)

    @cached_property
    def feasible_point(self) -> Optional[np.ndarray]:
        res = lpsolve(np.zeros(self.dim), self.A, self.b, self.E, self.f)
        return res.x if res.optimal else None

    @property
    def is_empty(self) -> bool:
        return self.feasible_point is None

    def _scale(self, rows: np.ndarray, x: np.ndarray) -> np.ndarray:
        return 1.0 + np.linalg.norm(rows, axis=1) * float(np.linalg.norm(x))

    def contains(self, x: Sequence[float], tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if self.n_ineqs and np.any(self.A @ x - self.b > tol * self._scale(self.A, x)):
            return False
        if self.n_eqs and np.any(
            np.abs(self.E @ x - self.f) > tol * self._scale(self.E, x)
        ):
            return False
        return True

    def active_rows(self, x: Sequence[float], tol: float = 1e-9) -> np.ndarray:
        """Indices of inequalities tight at x."""
        x = np.asarray(x, dtype=float)
        if not self.n_ineqs:
            return np.zeros(0, dtype=int)
        gap = np.abs(self.A @ x - self.b)
        return np.flatnonzero(gap <= tol * self._scale(self.A, x))

    def maximize(self, c: Sequence[float]) -> LPResult:
        """Maximize c^T x over the polyhedron; `fun` is the maximum."""
        res = lpsolve(-np.asarray(c, dtype=float), self.A, self.b, self.E, self.f)
        if res.optimal:
            return LPResult(status=0, x=res.x, fun=-res.fun)
        return res

    def includes(self, other: "Polyhedron", tol: float = ABS_TOL) -> bool:
        """Whether `other` is a subset of self, one LP per row of self."""
        if other.dim != self.dim:
            raise ValueError("Cannot compare polyhedra of different dimension")
        if other.is_empty:
            return True
        # other is nonempty, so a missing optimum means unbounded
        for a, b in zip(self.A, self.b):
            res = other.maximize(a)
            if not res.optimal or res.fun > b + tol * (1 + abs(b)):
                return False
        for e, f in zip(self.E, self.f):
            for sign in (1.0, -1.0):
                res = other.maximize(sign * e)
                if not res.optimal or res.fun > sign * f + tol * (1 + abs(f)):
                    return False
        return True

    def same_set(self, other: "Polyhedron", tol: float = ABS_TOL) -> bool:
        return self.includes(other, tol) and other.includes(self, tol)

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        if other.dim != self.dim:
            raise ValueError("Cannot intersect polyhedra of different dimension")
        return Polyhedron(
            self.dim,
            A=np.vstack([self.A, other.A]),
            b=np.r_[self.b, other.b],
            E=np.vstack([self.E, other.E]),
            f=np.r_[self.f, other.f],
        )

    def product(self, other: "Polyhedron") -> "Polyhedron":
        """Cartesian product self x other."""
        d1, d2 = self.dim, other.dim

        def block(M1, M2):
            return np.block(
                [
                    [M1, np.zeros((M1.shape[0], d2))],
                    [np.zeros((M2.shape[0], d1)), M2],
                ]
            )

        return Polyhedron(
            d1 + d2,
            A=block(self.A, other.A),
            b=np.r_[self.b, other.b],
            E=block(self.E, other.E),
            f=np.r_[self.f, other.f],
        )

    def with_inequality(self, a: Sequence[float], b: float) -> "Polyhedron":
        return Polyhedron(
            self.dim,
            A=np.vstack([self.A, np.asarray(a, dtype=float)]),
            b=np.r_[self.b, b],
            E=self.E,
            f=self.f,
        )

    def with_equality(self, e: Sequence[float], f: float) -> "Polyhedron":
        return Polyhedron(
            self.dim,
            A=self.A,
            b=self.b,
            E=np.vstack([self.E, np.asarray(e, dtype=float)]),
            f=np.r_[self.f, f],
        )

    def scaled(self, c: float) -> "Polyhedron":
        """The image {c x | x in self} for c > 0."""
        if c <= 0:
            raise ValueError("scale factor must be positive")
        return Polyhedron(self.dim, A=self.A, b=c * self.b, E=self.E, f=c * self.f)

    def affine_image_preimage(self, M: np.ndarray, c: np.ndarray) -> "Polyhedron":
        """The preimage {z | M z + c in self}."""
        M = np.asarray(M, dtype=float).reshape(self.dim, -1)
        c = np.asarray(c, dtype=float)
        return Polyhedron(
            M.shape[1],
            A=self.A @ M,
            b=self.b - self.A @ c,
            E=self.E @ M,
            f=self.f - self.E @ c,
        )

    def distance_inf(self, x: Sequence[float]) -> float:
        """Infinity-norm distance from x to the polyhedron (inf when empty)."""
        x = np.asarray(x, dtype=float)
        d = self.dim
        # variables (z, s): minimize s with -s <= x - z <= s
        c = np.r_[np.zeros(d), 1.0]
        A_ub = [np.c_[self.A, np.zeros(self.n_ineqs)]] if self.n_ineqs else []
        b_ub = [self.b] if self.n_ineqs else []
        A_ub.append(np.c_[-np.eye(d), -np.ones(d)])
        b_ub.append(-x)
        A_ub.append(np.c_[np.eye(d), -np.ones(d)])
        b_ub.append(x)
        A_eq = np.c_[self.E, np.zeros(self.n_eqs)] if self.n_eqs else None
        res = lpsolve(
            c,
            np.vstack(A_ub),
            np.concatenate(b_ub),
            A_eq,
            self.f if self.n_eqs else None,
        )
        if not res.optimal:
            return float("inf")
        return max(float(res.fun), 0.0)

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            top = self.maximize(e)
            bottom = self.maximize(-e)
            hi[i] = top.fun if top.optimal else np.inf
            lo[i] = -bottom.fun if bottom.optimal else -np.inf
        return lo, hi

    def canonical(self) -> "Polyhedron":
        """Rows scaled to unit normals, duplicates removed, trivial rows dropped."""
        if self.is_empty:
            return Polyhedron.empty(self.dim)
        A, b = _normalize_rows(self.A, self.b)
        E, f = _normalize_rows(self.E, self.f, sign_fix=True)
        return Polyhedron(self.dim, A=A, b=b, E=E, f=f)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Polyhedron):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.E, other.E)
            and np.array_equal(self.f, other.f)
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.A.tobytes(), self.b.tobytes()))

    def __repr__(self) -> str:
        return f"Polyhedron(dim={self.dim}, ineqs={self.n_ineqs}, eqs={self.n_eqs})"


def _normalize_rows(M: np.ndarray, v: np.ndarray, sign_fix: bool = False):
    rows: List[np.ndarray] = []
    rhs: List[float] = []
    seen = set()
    for a, b in zip(M, v):
        n = float(np.linalg.norm(a))
        if n < 1e-12:
            continue
        a, b = a / n, b / n
        if sign_fix:
            lead = a[np.flatnonzero(np.abs(a) > 1e-12)[0]]
            if lead < 0:
                a, b = -a, -b
        key = tuple(np.round(np.r_[a, b], 9))
        if key in seen:
            continue
        seen.add(key)
        rows.append(a)
        rhs.append(b)
    dim = M.shape[1]
    return (np.array(rows).reshape(-1, dim), np.array(rhs))


@dataclass(frozen=True, eq=False)
class GeneratorCone:
    """
    cone(rays) + span(lineality), or the empty set when `empty` is set.

    Rays are stored with unit Euclidean norm in lexicographic order.
    """

    dim: int
    rays: np.ndarray = field(default=None)
    lineality: np.ndarray = field(default=None)
    empty: bool = False

    def __post_init__(self):
        rays = _unit_rows(_as_matrix(self.rays, self.dim))
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "lineality", _as_matrix(self.lineality, self.dim))

    @classmethod
    def empty_set(cls, dim: int) -> "GeneratorCone":
        return cls(dim, empty=True)

    @classmethod
    def zero(cls, dim: int) -> "GeneratorCone":
        return cls(dim)

    @classmethod
    def from_polyhedron(cls, cone: Polyhedron) -> "GeneratorCone":
        if cone.is_empty:
            return cls.empty_set(cone.dim)
        rays, lineality = cone_h_to_v(cone.A, cone.E)
        return cls(cone.dim, rays=rays, lineality=lineality)

    @property
    def is_zero(self) -> bool:
        return not self.empty and not len(self.rays) and not len(self.lineality)

    def to_polyhedron(self) -> Polyhedron:
        if self.empty:
            return Polyhedron.empty(self.dim)
        return v_to_h([np.zeros(self.dim)], self.rays, self.lineality, self.dim)

    def contains(self, g: Sequence[float], tol: float = ABS_TOL) -> bool:
        g = np.asarray(g, dtype=float)
        if self.empty:
            return False
        k, l = len(self.rays), len(self.lineality)
        if k + l == 0:
            return float(np.linalg.norm(g)) <= tol
        M = np.vstack([self.rays, self.lineality]).T
        bounds = [(0, None)] * k + [(None, None)] * l
        # minimize the residual of g = M mu in the infinity norm
        c = np.r_[np.zeros(k + l), 1.0]
        A_ub = np.vstack(
            [np.c_[M, -np.ones(self.dim)], np.c_[-M, -np.ones(self.dim)]]
        )
        b_ub = np.r_[g, -g]
        res = lpsolve(c, A_ub, b_ub, bounds=bounds + [(0, None)])
        scale = 1.0 + float(np.linalg.norm(g))
        return res.optimal and res.fun <= tol * scale

    def includes(self, other: "GeneratorCone", tol: float = ABS_TOL) -> bool:
        if other.empty:
            return True
        if self.empty:
            return False
        gens = list(other.rays) + list(other.lineality) + [-l for l in other.lineality]
        return all(self.contains(g, tol) for g in gens)

    def same_set(self, other: "GeneratorCone", tol: float = ABS_TOL) -> bool:
        return self.includes(other, tol) and other.includes(self, tol)

    def generators(self) -> List[np.ndarray]:
        """Unit vectors generating the cone as a pointed-plus-lineality union."""
        out = [r for r in self.rays]
        for l in _unit_rows(self.lineality):
            out.extend([l, -l])
        return out

    def __repr__(self) -> str:
        if self.empty:
            return f"GeneratorCone(dim={self.dim}, empty)"
        return (
            f"GeneratorCone(dim={self.dim}, rays={len(self.rays)}, "
            f"lineality={len(self.lineality)})"
        )


def _unit_rows(M: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Normalize rows, drop zero rows and duplicates, sort lexicographically."""
    if M.shape[0] == 0:
        return M
    norms = np.linalg.norm(M, axis=1)
    M = M[norms > tol] / norms[norms > tol][:, None]
    unique: List[np.ndarray] = []
    for r in M:
        if not any(np.max(np.abs(r - u)) <= 1e-9 for u in unique):
            unique.append(r)
    if not unique:
        return np.zeros((0, M.shape[1]))
    unique.sort(key=lambda r: tuple(np.round(r, 12)))
    return np.array(unique)


def _basis(M: np.ndarray, dim: int) -> np.ndarray:
    """Columns spanning the null space of M (identity when M has no rows)."""
    if M.shape[0] == 0:
        return np.eye(dim)
    return null_space(M)


def cone_h_to_v(
    G: np.ndarray, H: Optional[np.ndarray] = None, tol: float = 1e-10
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generators of the cone {z | G z <= 0, H z = 0}.

    Returns (rays, lineality) as row arrays. The pointed part is computed by
    incremental double description with a combinatorial adjacency test.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    D = G.shape[1]
    H = np.zeros((0, D)) if H is None else np.asarray(H, dtype=float).reshape(-1, D)

    N = _basis(H, D)  # z = N w
    r = N.shape[1]
    if r == 0:
        return np.zeros((0, D)), np.zeros((0, D))
    Gw = G @ N
    Gw = Gw[np.linalg.norm(Gw, axis=1) > tol] if Gw.shape[0] else Gw

    L = _basis(Gw, r)  # lineality in w-space
    Q = _basis(L.T, r) if L.shape[1] else np.eye(r)
    lineality = (N @ L).T
    s = Q.shape[1]
    if s == 0:
        return np.zeros((0, D)), lineality

    Gs = Gw @ Q
    rays_s = _double_description(Gs, tol)
    rays = (N @ Q @ rays_s.T).T if len(rays_s) else np.zeros((0, D))
    return _unit_rows(rays), lineality


def _double_description(G: np.ndarray, tol: float) -> np.ndarray:
    """Extreme rays of the pointed cone {s | G s <= 0}, G of full column rank."""
    m, s = G.shape
    # pick s linearly independent rows greedily
    basis_rows: List[int] = []
    for i in range(m):
        trial = basis_rows + [i]
        if np.linalg.matrix_rank(G[trial], tol=1e-9) == len(trial):
            basis_rows = trial
            if len(basis_rows) == s:
                break
    if len(basis_rows) < s:
        raise ValueError("cone is not pointed")

    B = G[basis_rows]
    rays = list((-np.linalg.inv(B)).T)
    rays = [ray / np.linalg.norm(ray) for ray in rays]
    processed = list(basis_rows)

    for i in range(m):
        if i in basis_rows:
            continue
        g = G[i]
        gnorm = float(np.linalg.norm(g))
        vals = [float(g @ ray) for ray in rays]
        pos = [k for k, v in enumerate(vals) if v > tol * gnorm]
        neg = [k for k, v in enumerate(vals) if v < -tol * gnorm]
        zero = [k for k, v in enumerate(vals) if abs(v) <= tol * gnorm]

        zsets = [
            frozenset(
                j
                for j in processed
                if abs(float(G[j] @ ray)) <= tol * float(np.linalg.norm(G[j]))
            )
            for ray in rays
        ]

        new_rays = [rays[k] for k in neg + zero]
        for p in pos:
            for n in neg:
                common = zsets[p] & zsets[n]
                if len(common) < s - 2:
                    continue
                adjacent = all(
                    not common <= zsets[k] for k in range(len(rays)) if k not in (p, n)
                )
                if not adjacent:
                    continue
                ray = vals[p] * rays[n] - vals[n] * rays[p]
                norm = float(np.linalg.norm(ray))
                if norm > tol:
                    new_rays.append(ray / norm)
        rays = _dedupe_rays(new_rays)
        processed.append(i)
        if not rays:
            break

    if not rays:
        return np.zeros((0, s))
    return np.array(rays)


def _dedupe_rays(rays: List[np.ndarray]) -> List[np.ndarray]:
    out: List[np.ndarray] = []
    for ray in rays:
        if not any(np.max(np.abs(ray - r)) <= 1e-9 for r in out):
            out.append(ray)
    return out


def h_to_v(
    S: Polyhedron, dim_cap: int = HV_DIM_CAP
) -> Tuple[List[np.ndarray], GeneratorCone]:
    """
    Minkowski decomposition S = conv(vertices) + cone.

    Empty polyhedra return no vertices and the empty cone.
    """
    if S.dim > dim_cap:
        raise DimensionOverflow(
            f"h_to_v supports dimension up to {dim_cap}, got {S.dim}"
        )
    if S.is_empty:
        return [], GeneratorCone.empty_set(S.dim)

    d = S.dim
    # homogenize: (x, t) with A x - b t <= 0, E x - f t = 0, -t <= 0
    G = np.vstack(
        [np.c_[S.A, -S.b] if S.n_ineqs else np.zeros((0, d + 1)), np.r_[np.zeros(d), -1.0]]
    )
    H = np.c_[S.E, -S.f] if S.n_eqs else None
    rays, lineality = cone_h_to_v(G, H)

    vertices: List[np.ndarray] = []
    recession: List[np.ndarray] = []
    for ray in rays:
        t = ray[-1]
        if t > 1e-10:
            vertex = ray[:-1] / t
            if not any(np.max(np.abs(vertex - v)) <= 1e-9 for v in vertices):
                vertices.append(vertex)
        else:
            recession.append(ray[:-1])
    vertices.sort(key=lambda v: tuple(np.round(v, 12)))
    cone = GeneratorCone(
        d,
        rays=np.array(recession).reshape(-1, d),
        lineality=lineality[:, :-1] if len(lineality) else np.zeros((0, d)),
    )
    return vertices, cone


def v_to_h(
    vertices: Sequence[Sequence[float]],
    rays: Sequence[Sequence[float]] = (),
    lineality: Sequence[Sequence[float]] = (),
    dim: Optional[int] = None,
    dim_cap: int = HV_DIM_CAP,
) -> Polyhedron:
    """H-representation of conv(vertices) + cone(rays) + span(lineality)."""
    V = np.asarray(vertices, dtype=float)
    if dim is None:
        if V.size == 0:
            raise ValueError("dim is required when no vertices are given")
        dim = V.reshape(len(V), -1).shape[1]
    if V.size == 0:
        return Polyhedron.empty(dim)
    if dim > dim_cap:
        raise DimensionOverflow(
            f"v_to_h supports dimension up to {dim_cap}, got {dim}"
        )
    V = V.reshape(-1, dim)
    R = _as_matrix(rays, dim)
    L = _as_matrix(lineality, dim)

    # dual cone of the homogenized generators: (a, beta) with a.v + beta <= 0
    G = np.vstack([np.c_[V, np.ones(len(V))], np.c_[R, np.zeros(len(R))]])
    H = np.c_[L, np.zeros(len(L))] if len(L) else None
    dual_rays, dual_lineality = cone_h_to_v(G, H)

    A, b, E, f = [], [], [], []
    for y in dual_rays:
        a, beta = y[:-1], y[-1]
        if np.linalg.norm(a) > 1e-10:
            A.append(a)
            b.append(-beta)
    for y in dual_lineality:
        a, beta = y[:-1], y[-1]
        if np.linalg.norm(a) > 1e-10:
            E.append(a)
            f.append(-beta)
    return Polyhedron(dim, A=A, b=b, E=E, f=f)


def _row_key(a: np.ndarray, b: float) -> tuple:
    scale = float(np.max(np.abs(np.r_[a, b])))
    if scale == 0:
        scale = 1.0
    return tuple(np.round(np.r_[a, b] / scale, 10))


def _dedupe(A: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    seen = set()
    keep = []
    for i, (a, bi) in enumerate(zip(A, b)):
        key = _row_key(a, bi)
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return A[keep], b[keep]


def reduce(S: Polyhedron, abs_tol: float = ABS_TOL) -> Polyhedron:
    """
    Remove redundant inequalities, one LP per row.

    A row is redundant when maximizing its normal over the remaining rows,
    with the row itself relaxed, does not exceed its offset.
    """
    if S.is_empty:
        return Polyhedron.empty(S.dim)
    A, b = S.A.copy(), S.b.copy()
    keep = list(range(A.shape[0]))
    for k in range(A.shape[0]):
        others = [i for i in keep if i != k]
        relaxed_A = np.vstack([A[others], A[k]]) if others else A[[k]]
        relaxed_b = np.r_[b[others], b[k] + 1.0] if others else np.array([b[k] + 1.0])
        res = lpsolve(-A[k], relaxed_A, relaxed_b, S.E, S.f)
        if res.optimal and -res.fun <= b[k] + abs_tol * (1 + abs(b[k])):
            keep.remove(k)
    return Polyhedron(S.dim, A=A[keep], b=b[keep], E=S.E, f=S.f)


def fm_project(
    S: Polyhedron, keep: Sequence[int], row_cap: int = FM_ROW_CAP
) -> Polyhedron:
    """
    Coordinate projection of S onto the indices in `keep` (in that order).

    Equalities are used as pivots first; the remaining coordinates are
    removed by Fourier-Motzkin elimination, then redundant rows are pruned.
    """
    keep = list(keep)
    if not keep or any(k < 0 or k >= S.dim for k in keep):
        raise ValueError(f"keep must be a nonempty subset of 0..{S.dim - 1}")
    if S.is_empty:
        return Polyhedron.empty(len(keep))

    A, b = S.A.copy(), S.b.copy()
    E, f = S.E.copy(), S.f.copy()
    eliminate = [j for j in range(S.dim) if j not in keep]

    for j in eliminate:
        pivot = None
        if E.shape[0]:
            cand = np.flatnonzero(np.abs(E[:, j]) > 1e-12 * (1 + np.abs(E).max()))
            if cand.size:
                pivot = int(cand[np.argmax(np.abs(E[cand, j]))])
        if pivot is not None:
            e, fe = E[pivot] / E[pivot, j], f[pivot] / E[pivot, j]
            if A.shape[0]:
                coef = A[:, j].copy()
                A = A - np.outer(coef, e)
                b = b - coef * fe
                A[:, j] = 0.0
            others = [i for i in range(E.shape[0]) if i != pivot]
            coef = E[others, j].copy()
            E = E[others] - np.outer(coef, e)
            f = f[others] - coef * fe
            if E.shape[0]:
                E[:, j] = 0.0
            continue

        if not A.shape[0]:
            continue
        col = A[:, j]
        scale = np.abs(A).max(axis=1)
        pos = np.flatnonzero(col > 1e-12 * scale)
        neg = np.flatnonzero(col < -1e-12 * scale)
        zero = np.setdiff1d(np.arange(A.shape[0]), np.r_[pos, neg])
        if len(zero) + len(pos) * len(neg) > row_cap:
            raise DimensionOverflow(
                f"Fourier-Motzkin step exceeds {row_cap} rows while eliminating coordinate {j}"
            )
        rows = [A[zero]]
        rhs = [b[zero]]
        if len(pos) and len(neg):
            # |a_n,j| * row_p + a_p,j * row_n cancels coordinate j
            cp = col[pos][:, None]
            cn = -col[neg][None, :]
            newA = (cn[..., None] * A[pos][:, None, :]) + (cp[..., None] * A[neg][None, :, :])
            newb = cn * b[pos][:, None] + cp * b[neg][None, :]
            rows.append(newA.reshape(-1, S.dim))
            rhs.append(newb.reshape(-1))
        A = np.vstack(rows)
        b = np.concatenate(rhs)
        A[:, j] = 0.0
        A, b = _dedupe(A, b)
        logger.debug(f"fm_project eliminated {j}: {A.shape[0]} rows")

    A = A[:, keep] if A.shape[0] else np.zeros((0, len(keep)))
    E = E[:, keep] if E.shape[0] else np.zeros((0, len(keep)))

    # rows that lost all their coefficients are either trivial or infeasible
    def split_trivial(M, v, equality):
        nz = np.linalg.norm(M, axis=1) > 1e-12 if M.shape[0] else np.zeros(0, bool)
        trivial_rhs = v[~nz]
        bad = (
            np.any(np.abs(trivial_rhs) > 1e-9 * (1 + np.abs(trivial_rhs)))
            if equality
            else np.any(trivial_rhs < -1e-9)
        )
        return M[nz], v[nz], bad

    A, b, bad_ineq = split_trivial(A, b, equality=False)
    E, f, bad_eq = split_trivial(E, f, equality=True)
    if bad_ineq or bad_eq:
        return Polyhedron.empty(len(keep))
    if A.shape[0]:
        A, b = _dedupe(A, b)
    return reduce(Polyhedron(len(keep), A=A, b=b, E=E, f=f))


def hull_of_union(pieces: Sequence[Polyhedron]) -> Polyhedron:
    """Closed convex hull of a union of polyhedra of equal dimension."""
    if not pieces:
        raise ValueError("hull_of_union needs at least one piece")
    dim = pieces[0].dim
    vertices: List[np.ndarray] = []
    rays: List[np.ndarray] = []
    lineality: List[np.ndarray] = []
    for piece in pieces:
        vs, cone = h_to_v(piece)
        if not vs:
            continue
        vertices.extend(vs)
        rays.extend(cone.rays)
        lineality.extend(cone.lineality)
    if not vertices:
        return Polyhedron.empty(dim)
    return v_to_h(vertices, rays, lineality, dim)
