"""A configured tight-binding system and its converged electronic states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from tblocality.modules.lattice import as_displacement_array
from tblocality.modules.scf.solver import Density, ScfParams, evaluate_density_map, scf_solve
from tblocality.modules.scf.stability import StabilityOperator, stability_operator
from tblocality.modules.spectral import Observable, try_build_contour

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Configuration, Displacement
    from tblocality.modules.model import Hamiltonian, TightBindingModel
    from tblocality.modules.spectral import Contour, SpectralCache

__all__ = [
    "ElectronicState",
    "TightBindingSystem",
]


@dataclass(frozen=True)
class TightBindingSystem:
    """Configuration, model, thermodynamics and solver settings.

    Attributes:
        cfg: Reference configuration.
        model: Tight-binding model.
        mu: Chemical potential.
        beta: Inverse temperature, ``math.inf`` for zero temperature.
        params: SCF settings.
        n_quad: Minimum number of contour nodes.
        margin: Clearance of observable-kind contours.
    """

    cfg: Configuration
    model: TightBindingModel
    mu: float = 0.0
    beta: float = math.inf
    params: ScfParams = field(default_factory=ScfParams)
    n_quad: int = 64
    margin: float = 0.5

    @property
    def fermi(self) -> Observable:
        """Occupation observable f(· - μ)."""
        return Observable.occupation(self.mu, self.beta)

    @property
    def grand_potential(self) -> Observable:
        """Grand-potential observable 𝔤^β."""
        return Observable.grand_potential(self.mu, self.beta)

    def contour(self, spectrum: SpectralCache, obs: Observable) -> Contour | None:
        """Contour paired with ``obs`` for ``spectrum``, None when its quadrature is unresolvable."""
        return try_build_contour(spectrum, obs, self.n_quad, margin=self.margin)

    def initial_density(self) -> NDArray[np.float64]:
        """Half filling of every site."""
        return np.full(self.cfg.n_sites, 0.5 * self.model.n_orbitals)

    def solve(
        self,
        u: Displacement | ArrayLike | None = None,
        rho0: ArrayLike | None = None,
    ) -> ElectronicState:
        """Converge the density at displacement ``u``.

        Raises:
            ConvergenceError: If the fixed-point iteration fails.
            GapError: If a zero-temperature iteration loses its gap.
        """
        values = as_displacement_array(self.cfg, u)
        start = self.initial_density() if rho0 is None else np.asarray(rho0, dtype=float)
        density = scf_solve(self.cfg, values, start, self.model, self.fermi, self.params)
        _, h, spectrum = evaluate_density_map(self.cfg, values, density.rho, self.model, self.fermi)
        return ElectronicState(
            system=self,
            u=values,
            density=density,
            hamiltonian=h,
            spectrum=spectrum,
        )


@dataclass(frozen=True, eq=False)
class ElectronicState:
    """Converged density with the Hamiltonian and spectrum it defines.

    Attributes:
        system: System the state belongs to.
        u: Displacement values, shape (n, d).
        density: Converged density.
        hamiltonian: 𝓗(u; ρ*).
        spectrum: Eigenpairs of ``hamiltonian``.
    """

    system: TightBindingSystem
    u: NDArray[np.float64]
    density: Density
    hamiltonian: Hamiltonian
    spectrum: SpectralCache

    @property
    def cfg(self) -> Configuration:
        """Reference configuration."""
        return self.system.cfg

    @property
    def model(self) -> TightBindingModel:
        """Tight-binding model."""
        return self.system.model

    @property
    def rho(self) -> NDArray[np.float64]:
        """Converged density values."""
        return self.density.rho

    @cached_property
    def fermi_contour(self) -> Contour | None:
        """Fermi contour for this spectrum."""
        return self.system.contour(self.spectrum, self.system.fermi)

    @cached_property
    def stability(self) -> StabilityOperator:
        """Stability operator 𝓛(u; ρ*)."""
        return stability_operator(
            self.cfg,
            self.u,
            self.rho,
            self.model,
            self.system.fermi,
            self.fermi_contour,
        )

    def gap(self) -> float:
        """Spectral gap at μ."""
        return self.spectrum.gap(self.system.mu).gap
