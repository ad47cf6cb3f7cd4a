"""Grand-potential relaxation and the zero-temperature limit of minimisers."""

from tblocality.modules.relax.beta_limit import BetaLimitResult, beta_limit_experiment
from tblocality.modules.relax.energy import GrandPotential, grand_potential
from tblocality.modules.relax.errors import RelaxationError
from tblocality.modules.relax.optimizer import RelaxParams, RelaxResult, RelaxStep, relax_geometry

__all__ = [
    "BetaLimitResult",
    "GrandPotential",
    "RelaxParams",
    "RelaxResult",
    "RelaxStep",
    "RelaxationError",
    "beta_limit_experiment",
    "grand_potential",
    "relax_geometry",
]
