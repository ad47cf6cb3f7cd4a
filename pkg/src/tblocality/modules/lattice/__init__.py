"""Atomic configurations, point defects and displacement seminorms."""

from tblocality.modules.lattice.configuration import (
    Configuration,
    Displacement,
    LatticeCell,
    LatticeError,
    UndefinedQuantityError,
    as_displacement_array,
    build_chain,
    build_multilattice,
    noninterpenetration_constant,
    pair_distances,
    pair_vectors,
)
from tblocality.modules.lattice.defects import (
    ConfigurationMismatchError,
    Interstitial,
    Substitution,
    Vacancy,
    apply_point_defect,
    distance_to_defect,
    far_field_mask,
    match_far_field,
)
from tblocality.modules.lattice.seminorm import (
    StencilWeights,
    stencil_energy,
    stencil_seminorm,
)
from tblocality.modules.lattice.serialization import (
    dump_configuration,
    load_configuration,
)

__all__ = [
    "Configuration",
    "ConfigurationMismatchError",
    "Displacement",
    "Interstitial",
    "LatticeCell",
    "LatticeError",
    "StencilWeights",
    "Substitution",
    "UndefinedQuantityError",
    "Vacancy",
    "apply_point_defect",
    "as_displacement_array",
    "build_chain",
    "build_multilattice",
    "distance_to_defect",
    "dump_configuration",
    "far_field_mask",
    "load_configuration",
    "match_far_field",
    "noninterpenetration_constant",
    "pair_distances",
    "pair_vectors",
    "stencil_energy",
    "stencil_seminorm",
]
