import numpy as np
import pytest

from dirsens.errors import DimensionOverflow, PointNotInSet
from dirsens.geometry import (
    FactorKind,
    GammaFactor,
    GeneratorCone,
    Polyhedron,
    SequenceSchedule,
    directional_normal_cone,
    fm_project,
    gamma_polyhedron,
    h_to_v,
    hull_of_union,
    normal_cone,
    reduce,
    restrict_normal_cone,
    sphere_directions,
    tangent_cone,
    v_to_h,
)
from dirsens.geometry.neighborhood import (
    DirectionalNeighborhood,
    iter_dir_neighborhood,
    sample_dir_neighborhood,
)


def square():
    return Polyhedron.box([0.0, 0.0], [1.0, 1.0])


def test_polyhedron_membership_and_emptiness():
    S = square()
    assert S.contains([0.5, 1.0])
    assert not S.contains([1.5, 0.0])
    assert not S.is_empty
    assert Polyhedron.empty(2).is_empty
    assert Polyhedron.whole(3).contains([1e6, -1e6, 0.0])
    assert Polyhedron.origin(2).contains([0.0, 0.0])


def test_polyhedron_rejects_bad_dimension():
    with pytest.raises(ValueError):
        Polyhedron(0)
    with pytest.raises(ValueError):
        Polyhedron.from_rows(2, [([1.0], 0.0)])


def test_active_rows_and_maximize():
    S = square()
    assert S.active_rows([1.0, 0.5]).tolist() == [0]
    res = S.maximize([1.0, 2.0])
    assert res.optimal and res.fun == pytest.approx(3.0)
    assert Polyhedron.empty(1).maximize([1.0]).infeasible


def test_inclusion_and_same_set():
    S = square()
    big = Polyhedron.box([-1.0, -1.0], [2.0, 2.0])
    assert big.includes(S)
    assert not S.includes(big)
    assert S.includes(Polyhedron.empty(2))
    doubled = Polyhedron.from_rows(
        2, [([2.0, 0.0], 2.0), ([0.0, 1.0], 1.0), ([-1.0, 0.0], 0.0), ([0.0, -3.0], 0.0)]
    )
    assert S.same_set(doubled)
    assert S.canonical().same_set(S)


def test_set_operations():
    S = square()
    I = S.intersect(Polyhedron.from_rows(2, [([1.0, 1.0], 1.0)]))
    assert I.contains([0.5, 0.5]) and not I.contains([0.9, 0.9])
    P = Polyhedron.box([0.0], [1.0]).product(Polyhedron.origin(1))
    assert P.dim == 2 and P.contains([0.3, 0.0]) and not P.contains([0.3, 0.1])
    assert S.scaled(2.0).contains([2.0, 2.0])
    with pytest.raises(ValueError):
        S.scaled(0.0)
    line = S.with_equality([1.0, -1.0], 0.0)
    assert line.contains([0.2, 0.2]) and not line.contains([0.2, 0.3])
    assert S.with_inequality([1.0, 0.0], -1.0).is_empty


def test_affine_preimage():
    # {z | 2 z + 1 in [0, 1]} = [-1/2, 0]
    P = Polyhedron.box([0.0], [1.0]).affine_image_preimage(np.array([[2.0]]), np.array([1.0]))
    lo, hi = P.bounding_box()
    assert lo[0] == pytest.approx(-0.5) and hi[0] == pytest.approx(0.0)


def test_distance_inf():
    S = square()
    assert S.distance_inf([0.5, 0.5]) == pytest.approx(0.0)
    assert S.distance_inf([3.0, 0.5]) == pytest.approx(2.0)
    assert Polyhedron.empty(2).distance_inf([0.0, 0.0]) == np.inf


def test_bounding_box_unbounded():
    H = Polyhedron.from_rows(2, [([0.0, -1.0], 0.0)])
    lo, hi = H.bounding_box()
    assert lo[1] == pytest.approx(0.0)
    assert np.isinf(hi[1]) and np.isinf(lo[0]) and np.isinf(hi[0])


def test_h_to_v_square():
    vertices, cone = h_to_v(square())
    assert sorted(tuple(np.round(v, 9)) for v in vertices) == [
        (0.0, 0.0),
        (0.0, 1.0),
        (1.0, 0.0),
        (1.0, 1.0),
    ]
    assert cone.is_zero


def test_h_to_v_orthant_and_halfplane():
    vertices, cone = h_to_v(Polyhedron.from_rows(2, [([-1.0, 0.0], 0.0), ([0.0, -1.0], 0.0)]))
    assert len(vertices) == 1 and np.allclose(vertices[0], 0.0)
    assert cone.same_set(GeneratorCone(2, rays=[[1.0, 0.0], [0.0, 1.0]]))

    vertices, cone = h_to_v(Polyhedron.from_rows(2, [([0.0, -1.0], 0.0)]))
    assert len(cone.lineality) == 1
    assert cone.contains([-5.0, 1.0]) and not cone.contains([0.0, -1.0])


def test_h_to_v_empty():
    vertices, cone = h_to_v(Polyhedron.empty(2))
    assert vertices == [] and cone.empty


def test_v_to_h_triangle():
    T = v_to_h([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert T.contains([0.25, 0.25])
    assert not T.contains([0.75, 0.75])
    assert T.same_set(
        Polyhedron.from_rows(2, [([-1.0, 0.0], 0.0), ([0.0, -1.0], 0.0), ([1.0, 1.0], 1.0)])
    )


def test_v_to_h_with_rays_and_lineality():
    P = v_to_h([[0.0, 0.0]], rays=[[1.0, 0.0]], lineality=[[0.0, 1.0]])
    assert P.same_set(Polyhedron.from_rows(2, [([-1.0, 0.0], 0.0)]))
    assert v_to_h([], dim=2).is_empty
    with pytest.raises(DimensionOverflow):
        v_to_h([[0.0] * 3], dim_cap=2)


def test_generator_cone_round_trip():
    C = GeneratorCone(3, rays=[[1.0, 0.0, 0.0], [1.0, 1.0, 0.0]], lineality=[[0.0, 0.0, 1.0]])
    back = GeneratorCone.from_polyhedron(C.to_polyhedron())
    assert back.same_set(C)
    assert all(np.isclose(np.linalg.norm(r), 1.0) for r in back.rays)
    assert GeneratorCone.empty_set(2).to_polyhedron().is_empty
    assert GeneratorCone.zero(2).contains([0.0, 0.0])
    assert not GeneratorCone.zero(2).contains([1.0, 0.0])


def test_reduce_drops_redundant_rows():
    S = square().with_inequality([1.0, 1.0], 5.0)
    R = reduce(S)
    assert R.n_ineqs == 4
    assert R.same_set(square())


def test_fm_project_triangle():
    # {(x, y) | x >= 0, y >= 0, x + y <= 1} projected on x is [0, 1]
    T = Polyhedron.from_rows(2, [([-1.0, 0.0], 0.0), ([0.0, -1.0], 0.0), ([1.0, 1.0], 1.0)])
    P = fm_project(T, [0])
    assert P.same_set(Polyhedron.box([0.0], [1.0]))


def test_fm_project_uses_equalities():
    S = Polyhedron(3, A=[[0.0, 0.0, -1.0]], b=[0.0], E=[[1.0, 0.0, -2.0], [0.0, 1.0, 1.0]], f=[0.0, 0.0])
    P = fm_project(S, [0, 1])
    # x = 2t, y = -t, t >= 0
    assert P.contains([2.0, -1.0])
    assert not P.contains([2.0, 1.0])
    assert not P.contains([-2.0, 1.0])
    with pytest.raises(ValueError):
        fm_project(S, [3])


def test_hull_of_union_of_points():
    pieces = [Polyhedron.box([x], [x]) for x in (-1.0, 2.0)]
    H = hull_of_union(pieces)
    assert H.same_set(Polyhedron.box([-1.0], [2.0]))
    with pytest.raises(ValueError):
        hull_of_union([])


def test_tangent_and_normal_cone_at_corner():
    S = square()
    T = tangent_cone(S, [1.0, 1.0])
    assert T.contains([-1.0, -2.0]) and not T.contains([1.0, 0.0])
    N = normal_cone(S, [1.0, 1.0])
    assert N.same_set(GeneratorCone(2, rays=[[1.0, 0.0], [0.0, 1.0]]))
    with pytest.raises(PointNotInSet):
        tangent_cone(S, [2.0, 2.0])


def test_normal_cone_interior_is_zero():
    assert normal_cone(square(), [0.5, 0.5]).is_zero
    assert tangent_cone(square(), [0.5, 0.5]).same_set(Polyhedron.whole(2))


def test_directional_normal_cone():
    S = square()
    x = [1.0, 1.0]
    # tangent direction along the top edge keeps only the top normal
    N = directional_normal_cone(S, x, [-1.0, 0.0])
    assert N.same_set(GeneratorCone(2, rays=[[0.0, 1.0]]))
    assert directional_normal_cone(S, x, [1.0, 0.0]).empty
    assert directional_normal_cone(S, x, [0.0, 0.0]).same_set(normal_cone(S, x))
    assert directional_normal_cone(S, x, [-1.0, -1.0]).is_zero


def _random_polytope(rng):
    dim = int(rng.integers(1, 5))
    while True:
        points = rng.integers(-3, 4, size=(dim + 3, dim)).astype(float)
        if np.linalg.matrix_rank(points[1:] - points[0]) == dim:
            return v_to_h(points)


def _limiting_normals(S, x_bar, d, others, steps):
    """Unit normals active at x_bar + t_k d_k over the last shells of several sequences."""
    found = []
    for e in [d, *others]:
        for t in steps[-3:]:
            d_k = (1.0 - t) * d + t * e
            x_k = x_bar + t * d_k
            norms = np.linalg.norm(S.A, axis=1)
            residual = (S.b - S.A @ x_k) / norms
            for a in S.A[residual <= 1e-10]:
                found.append(a / np.linalg.norm(a))
    return found


def _hausdorff(P, Q):
    if not len(P) and not len(Q):
        return 0.0
    if not len(P) or not len(Q):
        return np.inf
    D = np.linalg.norm(np.asarray(P)[:, None, :] - np.asarray(Q)[None, :, :], axis=2)
    return max(D.min(axis=1).max(), D.min(axis=0).max())


@pytest.mark.parametrize("seed", range(50))
def test_directional_normal_cone_matches_sampled_limit(seed):
    rng = np.random.default_rng(seed)
    S = _random_polytope(rng)
    vertices, _ = h_to_v(S)
    x_bar = vertices[int(rng.integers(len(vertices)))]
    edges = [v - x_bar for v in vertices if np.max(np.abs(v - x_bar)) > 1e-9]
    # a feasible direction on a random face through x_bar
    weights = (0.5 + rng.random(len(edges))) * (rng.random(len(edges)) < 0.5)
    if not weights.any():
        weights[int(rng.integers(len(edges)))] = 1.0
    d = (weights / weights.sum()) @ np.asarray(edges)
    others = [edges[i] for i in rng.choice(len(edges), size=min(3, len(edges)), replace=False)]

    steps = SequenceSchedule(t0=0.1, rho=0.5, K=8).steps
    sampled = _limiting_normals(S, x_bar, d, others, steps)
    formula = directional_normal_cone(S, x_bar, d)
    assert not formula.empty
    assert _hausdorff(list(formula.rays), sampled) <= 1e-6

    if S.dim >= 2:
        keep = range(S.dim - 1)
        projected = v_to_h([v[: S.dim - 1] for v in vertices])
        assert fm_project(S, keep).same_set(projected)


def test_restrict_normal_cone_for_hard_coded_data():
    # cones of the set {(a, b) | a <= b^3} at the origin
    T = Polyhedron(2, E=[[1.0, 0.0]], f=[0.0])
    N = GeneratorCone(2, rays=[[1.0, 0.0]])
    assert restrict_normal_cone(N, T, [0.0, 1.0]).same_set(N)
    assert restrict_normal_cone(N, T, [1.0, 0.0]).empty
    assert restrict_normal_cone(N, T, [0.0, 0.0]) is N


def test_gamma_factors():
    G = gamma_polyhedron(
        [GammaFactor.nonpositive(1), GammaFactor.zero(1), GammaFactor.polyhedral(Polyhedron.box([-1.0], [1.0]))]
    )
    assert G.dim == 3
    assert G.contains([-4.0, 0.0, 0.5])
    assert not G.contains([1.0, 0.0, 0.0])
    assert not G.contains([0.0, 0.0, 2.0])
    assert GammaFactor.zero(2).kind == FactorKind.ZERO
    with pytest.raises(ValueError):
        gamma_polyhedron([])


def test_schedule_validation():
    s = SequenceSchedule(t0=1.0, rho=0.5, K=3)
    assert s.steps.tolist() == [1.0, 0.5, 0.25]
    with pytest.raises(ValueError):
        SequenceSchedule(rho=1.0)
    with pytest.raises(ValueError):
        SequenceSchedule(K=0)
    with pytest.raises(ValueError):
        SequenceSchedule(t0=-1.0)


def test_sphere_directions_are_unit():
    dirs = sphere_directions(3, 10, seed=1)
    assert len(dirs) == 10
    assert dirs[0].tolist() == [1.0, 0.0, 0.0]
    assert all(np.isclose(np.linalg.norm(d), 1.0) for d in dirs)
    assert [d.tolist() for d in sphere_directions(1, 8)] == [[1.0], [-1.0]]


def test_directional_neighborhood_membership():
    N = DirectionalNeighborhood(np.zeros(2), np.array([1.0, 0.0]), eps=1.0, delta=0.1)
    assert N.contains([0.5, 0.0])
    assert N.contains([0.5, 0.04])
    assert not N.contains([0.5, 0.5])
    assert not N.contains([2.0, 0.0])
    ball = DirectionalNeighborhood(np.zeros(2), np.zeros(2), eps=1.0)
    assert ball.contains([0.0, -0.9])


def test_neighborhood_samples_stay_inside():
    N = DirectionalNeighborhood(np.array([1.0, 1.0]), np.array([0.0, 2.0]), eps=1.0, delta=0.2)
    schedule = SequenceSchedule(K=5, angular_count=6)
    samples = list(iter_dir_neighborhood(N, schedule, shrink=True, seed=3))
    assert samples
    assert all(N.contains(s.point) for s in samples)
    assert {s.k for s in samples} == set(range(5))
    assert len(sample_dir_neighborhood(N, schedule, True, 3)) == len(samples)
