import math
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np
from scipy.linalg import null_space
from scipy.stats import norm, qmc


@dataclass(frozen=True)
class SequenceSchedule:
    """
    Geometric sampling plan t_k = t0 * rho**k, k = 0..K-1.

    Attributes:
        t0 (float): First step length.
        rho (float): Contraction factor in (0, 1).
        K (int): Number of shells.
        angular_count (int): Directions per shell.
    """

    t0: float = 0.1
    rho: float = 0.5
    K: int = 20
    angular_count: int = 8

    def __post_init__(self):
        if not self.t0 > 0:
            raise ValueError("t0 must be positive")
        if not (0.0 < self.rho < 1.0):
            raise ValueError("rho must be between 0.0 and 1.0")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.angular_count < 1:
            raise ValueError("angular_count must be at least 1")

    @property
    def steps(self) -> np.ndarray:
        return self.t0 * self.rho ** np.arange(self.K)


@dataclass(frozen=True, eq=False)
class DirectionalNeighborhood:
    """
    The set center + {z | ||z|| <= eps, || ||d|| z - ||z|| d || <= delta ||z|| ||d||}.

    With a zero direction this is the eps-ball around the center.
    """

    center: np.ndarray
    direction: np.ndarray
    eps: float = 1.0
    delta: float = 0.1

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).ravel()
        direction = np.asarray(self.direction, dtype=float).ravel()
        if center.shape != direction.shape:
            raise ValueError("center and direction must have the same length")
        if not self.eps > 0 or not self.delta >= 0:
            raise ValueError("eps must be positive and delta nonnegative")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "direction", direction)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains_offset(self, z: np.ndarray, tol: float = 1e-12) -> bool:
        z = np.asarray(z, dtype=float)
        nz = float(np.linalg.norm(z))
        nd = float(np.linalg.norm(self.direction))
        if nz > self.eps * (1 + tol):
            return False
        if nd == 0.0 or nz == 0.0:
            return True
        gap = float(np.linalg.norm(nd * z - nz * self.direction))
        return gap <= self.delta * nz * nd * (1 + tol) + tol * nz * nd

    def contains(self, point: np.ndarray, tol: float = 1e-12) -> bool:
        return self.contains_offset(np.asarray(point, dtype=float) - self.center, tol)


@dataclass(frozen=True, eq=False)
class NeighborhoodSample:
    """One sampled point center + t * u_k, indexed by shell k and direction j."""

    k: int
    j: int
    t: float
    direction: np.ndarray
    point: np.ndarray


def _cap_slack(delta: float) -> float:
    """Largest orthogonal offset s keeping (u + s w)/||u + s w|| within delta of u."""
    if delta <= 0:
        return 0.0
    c = 1.0 - delta**2 / 2.0
    if c <= 0:
        return 1e6
    return 0.999 * math.sqrt(max(1.0 / c**2 - 1.0, 0.0))


def _halton(dim: int, count: int, seed: Optional[int]) -> np.ndarray:
    sampler = qmc.Halton(d=dim, scramble=seed is not None, seed=seed)
    if seed is None:
        sampler.fast_forward(1)
    return sampler.random(count)


def sphere_directions(dim: int, count: int, seed: Optional[int] = None) -> List[np.ndarray]:
    """Unit directions: the signed axes first, then low-discrepancy points."""
    out: List[np.ndarray] = []
    for i in range(dim):
        for sign in (1.0, -1.0):
            e = np.zeros(dim)
            e[i] = sign
            out.append(e)
    if dim == 1 or count <= len(out):
        return out
    extra = count - len(out)
    pts = norm.ppf(np.clip(_halton(dim, extra + 4, seed), 1e-12, 1 - 1e-12))
    for p in pts:
        n = float(np.linalg.norm(p))
        if n > 1e-9:
            out.append(p / n)
        if len(out) == count:
            break
    return out


def cap_directions(
    u: np.ndarray, count: int, delta: float, seed: Optional[int] = None
) -> List[np.ndarray]:
    """Unit directions within angular distance delta of u/||u||, u itself first."""
    uhat = u / np.linalg.norm(u)
    dim = u.shape[0]
    s = _cap_slack(delta)
    if dim == 1 or count == 1 or s == 0.0:
        return [uhat]
    basis = null_space(uhat[None, :])  # dim x (dim - 1)
    offsets = 2.0 * _halton(dim - 1, count - 1, seed) - 1.0
    offsets /= math.sqrt(dim - 1)
    out = [uhat]
    for c in offsets:
        e = uhat + s * (basis @ c)
        out.append(e / np.linalg.norm(e))
    return out


def iter_dir_neighborhood(
    N: DirectionalNeighborhood,
    schedule: SequenceSchedule,
    shrink: bool = False,
    seed: Optional[int] = None,
) -> Iterator[NeighborhoodSample]:
    """
    Walk the shells of a directional neighborhood.

    Each sample is center + t_k * u_k with u_k = ||d|| e_j for cap directions
    e_j (unit directions e_j when d = 0). With `shrink` the angular slack
    decays like sqrt(t_k / t0) so that u_k tends to d along every index j.
    Points outside the neighborhood are skipped.
    """
    d = N.direction
    dnorm = float(np.linalg.norm(d))
    for k, t in enumerate(schedule.steps):
        if dnorm == 0.0:
            dirs = sphere_directions(N.dim, max(schedule.angular_count, 2 * N.dim), seed)
            scale = 1.0
        else:
            delta = N.delta * math.sqrt(t / schedule.t0) if shrink else N.delta
            dirs = cap_directions(d, schedule.angular_count, delta, seed)
            scale = dnorm
        for j, e in enumerate(dirs):
            u_k = scale * e
            z = t * u_k
            if not N.contains_offset(z):
                continue
            yield NeighborhoodSample(k=k, j=j, t=float(t), direction=u_k, point=N.center + z)


def sample_dir_neighborhood(
    N: DirectionalNeighborhood,
    schedule: SequenceSchedule,
    shrink: bool = False,
    seed: Optional[int] = None,
) -> List[np.ndarray]:
    """Points x + t_k u_k of the directional neighborhood, shell by shell."""
    return [s.point for s in iter_dir_neighborhood(N, schedule, shrink, seed)]
