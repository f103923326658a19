import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, List, Optional

# Global callbacks fired by run_plan after every finished record
_RECORD_CALLBACKS: List[Callable[[Any], None]] = []


def set_record_callback(callback: Callable[[Any], None]) -> None:
    """Register a callback receiving each finished `CheckRecord`."""
    if callback:
        _RECORD_CALLBACKS.append(callback)


def get_record_callbacks() -> List[Callable[[Any], None]]:
    return _RECORD_CALLBACKS


def clear_record_callbacks() -> None:
    _RECORD_CALLBACKS.clear()


def execute_callbacks(record: Any) -> None:
    """Run every registered callback; failures are logged and swallowed."""
    for callback in get_record_callbacks():
        try:
            callback(record)
        except Exception as e:
            name = getattr(callback, "__name__", repr(callback))
            logging.getLogger("dirsens").error(
                f"Record callback failed on call to <{name}>: {e}"
            )


class Verdict(str, Enum):
    """Outcome of an empirical stability diagnostic."""

    HOLDS = "EmpiricallyHolds"
    FAILS = "EmpiricallyFails"
    INCONCLUSIVE = "Inconclusive"


class StabilityProperty(str, Enum):
    RESTRICTED_INF_COMPACT = "RestrictedInfCompact"
    INNER_SEMICONTINUOUS = "InnerSemicontinuous"
    INNER_CALM = "InnerCalm"
    INNER_CALM_STAR = "InnerCalmStar"


class Variant(str, Enum):
    """Hypothesis variant of the upper-estimate theorems, keyed by its stability prerequisite."""

    RESTRICTED_INF_COMPACT = "i"
    INNER_CALM_STAR = "ii"
    INNER_SEMICONTINUOUS = "iii"
    INNER_CALM = "iv"

    @property
    def prerequisite(self) -> StabilityProperty:
        return _VARIANT_PREREQUISITE[self]

    @property
    def uses_sphere_term(self) -> bool:
        """Whether the M_0 (sphere) term enters the right-hand side."""
        return self in (Variant.RESTRICTED_INF_COMPACT, Variant.INNER_SEMICONTINUOUS)

    @property
    def uses_whole_directional_solution_set(self) -> bool:
        return self in (Variant.RESTRICTED_INF_COMPACT, Variant.INNER_CALM_STAR)


_VARIANT_PREREQUISITE = {
    Variant.RESTRICTED_INF_COMPACT: StabilityProperty.RESTRICTED_INF_COMPACT,
    Variant.INNER_CALM_STAR: StabilityProperty.INNER_CALM_STAR,
    Variant.INNER_SEMICONTINUOUS: StabilityProperty.INNER_SEMICONTINUOUS,
    Variant.INNER_CALM: StabilityProperty.INNER_CALM,
}

# Strongest first
VARIANT_PREFERENCE = (
    Variant.INNER_CALM,
    Variant.INNER_SEMICONTINUOUS,
    Variant.INNER_CALM_STAR,
    Variant.RESTRICTED_INF_COMPACT,
)


class Which(str, Enum):
    LIMITING = "Thm3_1"
    SINGULAR = "Thm3_2"


class DirectionMode(str, Enum):
    DIR_U = "DirU"
    DIR0_SPHERE = "Dir0Sphere"


class InclusionStatus(str, Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"


class Certification(str, Enum):
    CERTIFIED = "Certified"
    NOT_CERTIFIED = "NotCertified"


class RegularityStatus(str, Enum):
    CERTIFIED = "RegularityCertified"
    NOT_CERTIFIED = "NotCertified"


class LipschitzStatus(str, Enum):
    LIPSCHITZ = "Lipschitz"
    NOT_LIPSCHITZ = "NotLipschitz"
    INCONCLUSIVE = "Inconclusive"


class ContinuityStatus(str, Enum):
    CONTINUOUS = "EmpiricallyContinuous"
    DISCONTINUOUS = "Discontinuous"
    INCONCLUSIVE = "Inconclusive"


class AbadieStatus(str, Enum):
    EQUAL = "Equal"
    STRICT_INCLUSION = "StrictInclusion"
    INCONCLUSIVE = "Inconclusive"


class Check(str, Enum):
    CONES = "Cones"
    DINI = "Dini"
    SUBDIFF = "Subdiff"
    THM3_1 = "Thm3_1"
    THM3_2 = "Thm3_2"
    THM3_3 = "Thm3_3"
    FOSCMS = "FOSCMS"
    ABADIE = "Abadie"
    DANSKIN = "Danskin"
    STABILITY = "Stability"


@dataclass(frozen=True)
class AnalysisConfig:
    """
    Tolerances and sizes shared by every analysis stage.

    Attributes:
        activity_tol (float): Relative tolerance for active constraints and set membership.
        zero_direction_tol (float): Directions shorter than this are treated as zero.
        grid_points (int): Grid points per decision coordinate when m = 1.
        max_grid_total (int): Cap on the total number of grid points for m >= 2.
        max_decision_dim (int): Largest supported decision dimension m.
        n_starts (int): Best grid cells refined by pattern search.
        cluster_tol (float): Radius used when clustering argmins and limit points.
        value_tol (float): Relative value tolerance separating near-optimal points.
        argmin_tol (float): Absolute value gap for a refined point to count as an argmin.
        eq_tol (float): Feasibility tolerance for equality rows.
        max_argmins (int): Cap on reported argmins per solve.
        conv_tol (float): Cauchy tolerance for shell sequences.
        gap_tol (float): Value gap marking a discontinuity.
        divergence_threshold (float): Magnitude beyond which a sequence is divergent.
        tail (int): Number of trailing shells inspected by every limit test.
        frechet_radius_ratio (float): Frechet sampling radius as a fraction of t_k.
        slack_factor (float): Minorant slack as a multiple of conv_tol.
        slab_pad (float): Widening of the critical-cone Dini slab.
        incl_tol (float): Distance tolerance for inclusion verdicts.
        pattern_cap (int): Largest active set enumerated by complementarity patterns.
        fm_row_cap (int): Row cap during Fourier-Motzkin elimination.
        hv_dim_cap (int): Largest dimension handled by double description.
        hull_dim_cap (int): Largest parameter dimension for exact Clarke hulls.
        arc_tol (float): Relative radius within which a feasible arc must be found.
        box_inflation (float): Relative inflation of the compact box Omega_u.
        delta (float): Angular slack of the directional neighborhood.
        epsilon (float): Radius of the directional neighborhood.
        seed (Optional[int]): Scrambling seed for low-discrepancy directions; None is unscrambled.
        workers (int): Thread workers used by run_plan across directions.
    """

    activity_tol: float = 1e-9
    zero_direction_tol: float = 1e-12
    grid_points: int = 201
    max_grid_total: int = 250_000
    max_decision_dim: int = 3
    n_starts: int = 5
    cluster_tol: float = 1e-3
    value_tol: float = 1e-6
    argmin_tol: float = 1e-10
    eq_tol: float = 1e-9
    max_argmins: int = 1000
    conv_tol: float = 1e-3
    gap_tol: float = 1e-4
    divergence_threshold: float = 1e6
    tail: int = 5
    frechet_radius_ratio: float = 0.01
    slack_factor: float = 10.0
    slab_pad: float = 1e-3
    incl_tol: float = 1e-3
    pattern_cap: int = 12
    fm_row_cap: int = 20_000
    hv_dim_cap: int = 8
    hull_dim_cap: int = 3
    arc_tol: float = 0.1
    box_inflation: float = 0.1
    delta: float = 0.1
    epsilon: float = 1.0
    seed: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        positive = (
            "activity_tol",
            "zero_direction_tol",
            "cluster_tol",
            "value_tol",
            "argmin_tol",
            "eq_tol",
            "conv_tol",
            "gap_tol",
            "divergence_threshold",
            "frechet_radius_ratio",
            "slack_factor",
            "incl_tol",
            "arc_tol",
            "delta",
            "epsilon",
        )
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

        if self.slab_pad < 0 or self.box_inflation < 0:
            raise ValueError("slab_pad and box_inflation cannot be negative")

        if self.grid_points < 3:
            raise ValueError("grid_points must be at least 3")

        if self.tail < 2:
            raise ValueError("tail must be at least 2")

        if not (1 <= self.max_decision_dim <= 3):
            raise ValueError("max_decision_dim must be between 1 and 3")

        for name in (
            "max_grid_total",
            "n_starts",
            "max_argmins",
            "pattern_cap",
            "fm_row_cap",
            "hv_dim_cap",
            "hull_dim_cap",
            "workers",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")

        if self.delta >= 2:
            raise ValueError("delta must be smaller than 2")

    @property
    def frechet_slack(self) -> float:
        return self.slack_factor * self.conv_tol


DEFAULT_CONFIG = AnalysisConfig()
