"""Bloch-transformed stability operator 𝓛_ξ of the reference crystal.

Entries are lattice sums over a column of the periodic-supercell operator,

    [𝓛_ξ]_{ℓk} = Σ_c 𝓛_sc[(c, ℓ), (0, k)] e^{-i(ℓ - k + Ac)·ξ},

with cell offsets c wrapped to the minimum image of the supercell.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as la
import structlog
from scipy.optimize import linear_sum_assignment

from tblocality.modules.bloch.bands import commensurate_grid
from tblocality.modules.bloch.errors import BlochError
from tblocality.modules.model import assemble
from tblocality.modules.scf import stability_margin, stability_operator
from tblocality.modules.spectral import Observable, diagonalize, try_build_contour

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.bloch.crystal import ReferenceCrystal

__all__ = [
    "SupercellStability",
    "bloch_stability",
    "spectral_mismatch",
    "supercell_stability",
]

logger = structlog.get_logger()


def spectral_mismatch(first: ArrayLike, second: ArrayLike) -> float:
    """Largest pair distance under the optimal matching of two complex multisets."""
    a = np.asarray(first, dtype=complex).reshape(-1)
    b = np.asarray(second, dtype=complex).reshape(-1)
    if a.shape != b.shape:
        raise BlochError(f"Cannot match {a.size} values against {b.size}")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, np.newaxis] - b[np.newaxis, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@dataclass(frozen=True, eq=False)
class SupercellStability:
    """Stability operator of a periodic supercell and its Bloch transform.

    Attributes:
        crystal: Reference crystal.
        repeats: Cells per axis.
        matrix: 𝓛 on the supercell, cell-major site order.
    """

    crystal: ReferenceCrystal
    repeats: tuple[int, ...]
    matrix: NDArray[np.float64]

    @cached_property
    def margin(self) -> float:
        """σ_min(I - 𝓛) on the supercell."""
        return stability_margin(self.matrix)

    @cached_property
    def _offsets(self) -> NDArray[np.float64]:
        reps = np.asarray(self.repeats)
        cells = np.stack(
            [g.reshape(-1) for g in np.meshgrid(*(np.arange(r) for r in self.repeats), indexing="ij")],
            axis=1,
        )
        wrapped = cells - reps * np.round(cells / reps)
        return np.asarray(wrapped @ self.crystal.cell.matrix.T)

    def at(self, xi: ArrayLike) -> NDArray[np.complex128]:
        """𝓛_ξ, shape (n_basis, n_basis)."""
        k = np.asarray(xi, dtype=float).reshape(-1)
        if k.shape != (self.crystal.dim,):
            raise BlochError(f"Wavevector has {k.size} components, expected {self.crystal.dim}")
        nb = self.crystal.n_basis
        offsets = self._offsets
        column = self.matrix[:, :nb].reshape(offsets.shape[0], nb, nb)
        basis = self.crystal.cell.basis
        vectors = (
            basis[np.newaxis, :, np.newaxis, :]
            - basis[np.newaxis, np.newaxis, :, :]
            + offsets[:, np.newaxis, np.newaxis, :]
        )
        return np.asarray((column * np.exp(-1j * (vectors @ k))).sum(axis=0))

    def commensurate_wavevectors(self) -> NDArray[np.float64]:
        if len(set(self.repeats)) != 1:
            raise BlochError(f"Commensurate grid needs equal repeats, got {self.repeats}")
        return self.crystal.wavevectors(commensurate_grid(self.repeats[0], self.crystal.dim))

    def bloch_spectrum(self) -> NDArray[np.complex128]:
        """Union of σ(𝓛_ξ) over the commensurate wavevectors."""
        return np.concatenate([la.eigvals(self.at(xi)) for xi in self.commensurate_wavevectors()])

    def bloch_margin(self) -> float:
        """min over commensurate ξ of σ_min(I - 𝓛_ξ)."""
        eye = np.eye(self.crystal.n_basis)
        return min(float(la.svdvals(eye - self.at(xi))[-1]) for xi in self.commensurate_wavevectors())

    def mismatch(self) -> float:
        """Distance between the Bloch spectra and σ(𝓛) on the supercell."""
        return spectral_mismatch(self.bloch_spectrum(), la.eigvals(self.matrix))


def supercell_stability(
    crystal: ReferenceCrystal,
    repeats: int = 16,
    *,
    n_quad: int = 64,
    margin: float = 0.5,
) -> SupercellStability:
    """Stability operator of the periodic supercell at the reference density.

    Raises:
        GapError: If a zero-temperature reference has no gap at μ.
        ContourError: If the contour cannot clear the spectrum.
    """
    cfg = crystal.supercell(repeats)
    rho = crystal.supercell_density(repeats)
    obs = Observable.occupation(crystal.mu, crystal.beta)
    spectrum = diagonalize(assemble(cfg, None, rho, crystal.model))
    if obs.zero_temperature:
        spectrum.gap(crystal.mu).require(crystal.mu)
    contour = try_build_contour(spectrum, obs, n_quad, margin=margin)
    operator = stability_operator(cfg, None, rho, crystal.model, obs, contour)
    logger.debug("supercell_stability", repeats=repeats, margin=operator.margin)
    return SupercellStability(crystal=crystal, repeats=crystal.repeats(repeats), matrix=operator.matrix)


def bloch_stability(
    crystal: ReferenceCrystal,
    xi: ArrayLike,
    *,
    repeats: int = 16,
    supercell: SupercellStability | None = None,
) -> NDArray[np.complex128]:
    """𝓛_ξ of the reference crystal, from a supercell operator that can be reused."""
    source = supercell or supercell_stability(crystal, repeats)
    return source.at(xi)
