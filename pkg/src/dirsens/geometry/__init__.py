from .polyhedron import (
    GeneratorCone,
    LPResult,
    Polyhedron,
    fm_project,
    h_to_v,
    hull_of_union,
    lpsolve,
    reduce,
    v_to_h,
)
from .cones import (
    FactorKind,
    GammaFactor,
    directional_normal_cone,
    gamma_polyhedron,
    normal_cone,
    restrict_normal_cone,
    tangent_cone,
)
from .neighborhood import (
    DirectionalNeighborhood,
    NeighborhoodSample,
    SequenceSchedule,
    iter_dir_neighborhood,
    sample_dir_neighborhood,
    sphere_directions,
)

__all__ = [
    "GeneratorCone",
    "LPResult",
    "Polyhedron",
    "fm_project",
    "h_to_v",
    "hull_of_union",
    "lpsolve",
    "reduce",
    "v_to_h",
    "FactorKind",
    "GammaFactor",
    "directional_normal_cone",
    "gamma_polyhedron",
    "normal_cone",
    "restrict_normal_cone",
    "tangent_cone",
    "DirectionalNeighborhood",
    "NeighborhoodSample",
    "SequenceSchedule",
    "iter_dir_neighborhood",
    "sample_dir_neighborhood",
    "sphere_directions",
]
