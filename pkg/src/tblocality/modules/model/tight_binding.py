"""Model bundle passed through the solvers."""

from __future__ import annotations

from dataclasses import dataclass, field

from tblocality.modules.model.hopping import HoppingModel, OnsiteModel
from tblocality.modules.model.repulsion import PairRepulsion

__all__ = ["TightBindingModel"]


@dataclass(frozen=True)
class TightBindingModel:
    """Hopping and on-site models that define 𝓗(u; ρ).

    ``repulsion`` only enters the grand-potential functional, never 𝓗.
    """

    hopping: HoppingModel = field(default_factory=HoppingModel)
    onsite: OnsiteModel = field(default_factory=OnsiteModel)
    repulsion: PairRepulsion = field(default_factory=PairRepulsion)

    @property
    def n_orbitals(self) -> int:
        """Orbitals per site."""
        return self.hopping.n_orbitals
