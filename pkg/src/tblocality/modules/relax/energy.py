"""Renormalised grand potential 𝒢^β(u) = Σ_l (G_l(u) - G_l(u₀)) on a finite cluster."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import structlog

from tblocality.modules.lattice import as_displacement_array
from tblocality.modules.response import ResponseCalculator
from tblocality.modules.spectral import local_observables_spectral

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Displacement
    from tblocality.modules.scf import ElectronicState, TightBindingSystem

__all__ = [
    "GrandPotential",
    "grand_potential",
]

logger = structlog.get_logger()


@dataclass(frozen=True, eq=False)
class GrandPotential:
    """Grand-potential functional renormalised at a baseline geometry.

    Site energies are the 𝔤^β observable plus the pair-repulsion share of each
    site; the repulsion vanishes for the default model.

    Attributes:
        system: System the functional is evaluated for.
        state0: Converged state at the baseline displacement u₀.
        reference: Site energies G_l(u₀).
    """

    system: TightBindingSystem
    state0: ElectronicState
    reference: NDArray[np.float64]

    @classmethod
    def baseline(
        cls,
        system: TightBindingSystem,
        u0: Displacement | ArrayLike | None = None,
        rho0: ArrayLike | None = None,
    ) -> GrandPotential:
        """Solve the baseline state and record its site energies."""
        state0 = system.solve(u0, rho0)
        reference = cls.site_energies_of(state0)
        reference.setflags(write=False)
        return cls(system=system, state0=state0, reference=reference)

    @property
    def u0(self) -> NDArray[np.float64]:
        return self.state0.u

    @staticmethod
    def site_energies_of(state: ElectronicState) -> NDArray[np.float64]:
        """G_l(u) for every site."""
        electronic = local_observables_spectral(state.spectrum, state.system.grand_potential)
        repulsion = state.model.repulsion.site_energies(state.cfg, state.u)
        return np.asarray(electronic + repulsion)

    def solve(self, u: Displacement | ArrayLike | None, rho0: ArrayLike | None = None) -> ElectronicState:
        """Converged state at ``u``, warm-started from the baseline density by default."""
        start = self.state0.rho if rho0 is None else rho0
        return self.system.solve(u, start)

    def value(self, state: ElectronicState) -> float:
        """𝒢^β at a converged state."""
        if state is self.state0:
            return 0.0
        return float(np.sum(self.site_energies_of(state) - self.reference))

    def gradient(self, state: ElectronicState, calculator: ResponseCalculator | None = None) -> NDArray[np.float64]:
        """∇𝒢^β, shape (n, d): summed site gradients of 𝔤^β plus the repulsion force."""
        calc = calculator or ResponseCalculator(state)
        electronic = calc.total_gradient(self.system.grand_potential)
        return np.asarray(electronic + state.model.repulsion.gradient(state.cfg, state.u))

    def hessian(self, state: ElectronicState, calculator: ResponseCalculator | None = None) -> NDArray[np.float64]:
        """∇²𝒢^β over all components, shape (n d, n d)."""
        calc = calculator or ResponseCalculator(state)
        electronic = calc.total_hessian(self.system.grand_potential)
        return np.asarray(electronic + state.model.repulsion.hessian(state.cfg, state.u))


def grand_potential(
    system: TightBindingSystem,
    u: Displacement | ArrayLike | None,
    baseline: GrandPotential | None = None,
) -> float:
    """𝒢^β(u) relative to ``baseline`` (u₀ = 0 when omitted).

    Raises:
        ConvergenceError: If the SCF fails at u or u₀.
        GapError: If a zero-temperature state has no gap.
    """
    functional = baseline or GrandPotential.baseline(system)
    values = as_displacement_array(system.cfg, u)
    if np.array_equal(values, functional.u0):
        return 0.0
    value = functional.value(functional.solve(values))
    logger.debug("grand_potential", value=value)
    return value
