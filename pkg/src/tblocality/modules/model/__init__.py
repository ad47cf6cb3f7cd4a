"""Two-centre tight-binding Hamiltonians with a bounded on-site nonlinearity."""

from tblocality.modules.model.hamiltonian import (
    GeometryError,
    Hamiltonian,
    assemble,
    gershgorin_interval,
    hamiltonian_derivative,
    hamiltonian_second_derivative,
    linear_hamiltonian,
    spectral_bound_estimate,
)
from tblocality.modules.model.hopping import (
    HoppingModel,
    ModelError,
    OnsiteKind,
    OnsiteModel,
)
from tblocality.modules.model.images import lattice_translations, pair_images
from tblocality.modules.model.repulsion import PairRepulsion
from tblocality.modules.model.tight_binding import TightBindingModel

__all__ = [
    "GeometryError",
    "Hamiltonian",
    "HoppingModel",
    "ModelError",
    "OnsiteKind",
    "OnsiteModel",
    "PairRepulsion",
    "TightBindingModel",
    "assemble",
    "gershgorin_interval",
    "hamiltonian_derivative",
    "hamiltonian_second_derivative",
    "lattice_translations",
    "linear_hamiltonian",
    "pair_images",
    "spectral_bound_estimate",
]
