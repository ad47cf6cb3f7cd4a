"""Self-consistent densities and the stability operator."""

from tblocality.modules.scf.errors import ConvergenceError, ScfError, StabilityError
from tblocality.modules.scf.mixing import AndersonMixer
from tblocality.modules.scf.solver import (
    Density,
    ScfParams,
    density_map,
    evaluate_density_map,
    scf_solve,
)
from tblocality.modules.scf.stability import (
    StabilityOperator,
    spectral_distance,
    stability_margin,
    stability_operator,
)
from tblocality.modules.scf.system import ElectronicState, TightBindingSystem

__all__ = [
    "AndersonMixer",
    "ConvergenceError",
    "Density",
    "ElectronicState",
    "ScfError",
    "ScfParams",
    "StabilityError",
    "StabilityOperator",
    "TightBindingSystem",
    "density_map",
    "evaluate_density_map",
    "scf_solve",
    "spectral_distance",
    "stability_margin",
    "stability_operator",
]
