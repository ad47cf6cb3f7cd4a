"""Translation-invariant reference crystal and its self-consistent density."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import structlog

from tblocality.modules.bloch.errors import BlochError
from tblocality.modules.lattice import LatticeCell, build_multilattice
from tblocality.modules.scf import ScfParams, TightBindingSystem

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Configuration
    from tblocality.modules.model import TightBindingModel

__all__ = [
    "INVARIANCE_TOL",
    "ReferenceCrystal",
    "basis_density",
    "reference_crystal",
]

logger = structlog.get_logger()

INVARIANCE_TOL = 1e-8


def basis_density(rho: ArrayLike, n_basis: int, tol: float = INVARIANCE_TOL) -> NDArray[np.float64]:
    """Reduce a translation-invariant density to one value per basis site.

    Args:
        rho: Either one value per basis site or a cell-major supercell density.
        n_basis: Sites per unit cell.
        tol: Largest allowed deviation between equivalent sites.

    Raises:
        BlochError: If the length does not fit the basis or the density is
            not translation invariant.
    """
    values = np.asarray(rho, dtype=float).reshape(-1)
    if values.size == 0 or values.size % n_basis:
        raise BlochError(f"Density with {values.size} entries does not fit {n_basis} basis sites")
    per_cell = values.reshape(-1, n_basis)
    mean = per_cell.mean(axis=0)
    spread = float(np.abs(per_cell - mean).max())
    if spread > tol:
        raise BlochError(f"Reference density is not translation invariant (spread {spread:.3e})")
    return mean


@dataclass(frozen=True, eq=False)
class ReferenceCrystal:
    """Unit cell, model and per-basis density of a perfect crystal.

    Attributes:
        cell: Lattice matrix and basis; its repeat counts are ignored.
        species: Species label per basis site.
        model: Tight-binding model.
        rho: Density per basis site.
        mu: Chemical potential.
        beta: Inverse temperature, ``math.inf`` for zero temperature.
    """

    cell: LatticeCell
    species: tuple[str, ...]
    model: TightBindingModel
    rho: NDArray[np.float64]
    mu: float = 0.0
    beta: float = math.inf

    def __post_init__(self) -> None:
        if len(self.species) != self.cell.n_basis:
            raise BlochError(f"Got {len(self.species)} species labels for {self.cell.n_basis} basis sites")
        rho = basis_density(self.rho, self.cell.n_basis)
        n_b = self.model.n_orbitals
        if rho.min() < 0.0 or rho.max() > n_b:
            raise BlochError(f"Reference density outside [0, {n_b}]")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "species", tuple(self.species))

    @property
    def dim(self) -> int:
        return self.cell.dim

    @property
    def n_basis(self) -> int:
        return self.cell.n_basis

    @property
    def size(self) -> int:
        """Dimension #Γ·N_b of a Bloch matrix."""
        return self.n_basis * self.model.n_orbitals

    def repeats(self, count: int | Sequence[int]) -> tuple[int, ...]:
        """Normalise a repeat count to one entry per axis."""
        if isinstance(count, int):
            return (count,) * self.dim
        return tuple(int(c) for c in count)

    def supercell(self, count: int | Sequence[int]) -> Configuration:
        """Periodic supercell of ``count`` cells per axis."""
        return build_multilattice(
            self.cell.matrix,
            self.cell.basis,
            self.repeats(count),
            periodic=True,
            species=self.species,
        )

    def supercell_density(self, count: int | Sequence[int]) -> NDArray[np.float64]:
        """Reference density tiled over a supercell in cell-major order."""
        return np.tile(self.rho, math.prod(self.repeats(count)))

    def wavevectors(self, fractional: ArrayLike) -> NDArray[np.float64]:
        """ξ = 2π A^{-T} f for fractional coordinates f, shape (count, d)."""
        f = np.asarray(fractional, dtype=float).reshape(-1, self.dim)
        return np.asarray(f @ self.cell.reciprocal().T)


def reference_crystal(
    cell: LatticeCell,
    species: Sequence[str],
    model: TightBindingModel,
    *,
    mu: float = 0.0,
    beta: float = math.inf,
    repeats: int = 8,
    params: ScfParams | None = None,
    n_quad: int = 64,
) -> ReferenceCrystal:
    """Solve the periodic supercell SCF and average the density per basis site.

    Raises:
        ConvergenceError: If the supercell SCF fails.
        BlochError: If the converged density breaks translation invariance.
    """
    unit = LatticeCell(cell.matrix, cell.basis, (1,) * cell.dim)
    labels = tuple(species)
    cfg = build_multilattice(unit.matrix, unit.basis, (repeats,) * unit.dim, periodic=True, species=labels)
    system = TightBindingSystem(cfg, model, mu=mu, beta=beta, params=params or ScfParams(), n_quad=n_quad)
    state = system.solve()
    rho = basis_density(state.rho, unit.n_basis)
    logger.info(
        "reference_density",
        repeats=repeats,
        iterations=state.density.iterations,
        rho=rho,
    )
    return ReferenceCrystal(cell=unit, species=labels, model=model, rho=rho, mu=mu, beta=beta)
