"""Band structures over a rectangular grid of the Brillouin zone."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.linalg as la
import structlog

from tblocality.infrastructure.parallel import ordered_map
from tblocality.modules.bloch.errors import BlochError
from tblocality.modules.bloch.hamiltonian import bloch_hamiltonian
from tblocality.modules.model import assemble

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.bloch.crystal import ReferenceCrystal

__all__ = [
    "MIN_GRID",
    "BandStructure",
    "ContinuityCheck",
    "band_continuity",
    "band_gap",
    "band_structure",
    "commensurate_grid",
    "fractional_grid",
    "supercell_consistency",
    "supercell_spectrum",
]

logger = structlog.get_logger()

MIN_GRID = 8

# Eigenvalues this close to μ close the gap
_LEVEL_TOL = 1e-12


def _mesh(axis: NDArray[np.float64], dim: int) -> NDArray[np.float64]:
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=1)


def fractional_grid(grid: int, dim: int) -> NDArray[np.float64]:
    """Points j/grid - 1/2 per axis, row-major, shape (grid^d, d)."""
    return _mesh(np.arange(grid) / grid - 0.5, dim)


def commensurate_grid(repeats: int, dim: int) -> NDArray[np.float64]:
    """Fractional points j/M that fold onto a periodic supercell of M cells per axis."""
    return _mesh(np.arange(repeats) / repeats, dim)


def band_gap(bands: NDArray[np.float64], mu: float) -> tuple[float, float, float]:
    """(gap, highest level <= μ, lowest level > μ) over all sampled bands.

    The gap is zero when a band crosses μ or a level sits on it.
    """
    values = np.asarray(bands, dtype=float)
    below = values[values <= mu]
    above = values[values > mu]
    lower = float(below.max()) if below.size else -math.inf
    upper = float(above.min()) if above.size else math.inf
    columns = values.reshape(-1, values.shape[-1])
    crossing = bool(np.any((columns.min(axis=0) < mu) & (columns.max(axis=0) > mu)))
    touching = bool(np.any(np.abs(values - mu) <= _LEVEL_TOL))
    gap = 0.0 if crossing or touching else upper - lower
    return gap, lower, upper


@dataclass(frozen=True, eq=False)
class BandStructure:
    """Bands λ_n(ξ) on a grid together with the gap at μ.

    Attributes:
        grid: Points per axis.
        fractional: Fractional coordinates of the grid, shape (count, d).
        xi: Wavevectors, shape (count, d).
        bands: Ascending band energies per wavevector, shape (count, n_bands).
        mu: Chemical potential.
        gap: Reference gap at μ.
        lower: Top of the occupied bands.
        upper: Bottom of the empty bands.
    """

    grid: int
    fractional: NDArray[np.float64]
    xi: NDArray[np.float64]
    bands: NDArray[np.float64]
    mu: float
    gap: float
    lower: float
    upper: float

    @property
    def n_bands(self) -> int:
        return int(self.bands.shape[1])

    def max_adjacent_jump(self) -> float:
        """Largest change of any band between neighbouring grid points, periodic wrap included."""
        dim = self.xi.shape[1]
        shaped = self.bands.reshape((self.grid,) * dim + (self.n_bands,))
        return max(
            float(np.abs(shaped - np.roll(shaped, 1, axis=axis)).max()) for axis in range(dim)
        )

    def rows(self) -> list[dict[str, Any]]:
        """CSV rows: ξ components followed by λ_1..λ_n."""
        rows = []
        for xi, levels in zip(self.xi, self.bands, strict=True):
            row: dict[str, Any] = {f"xi_{i}": float(x) for i, x in enumerate(xi)}
            row.update({f"lambda_{n + 1}": float(v) for n, v in enumerate(levels)})
            rows.append(row)
        return rows

    def as_dict(self) -> dict[str, Any]:
        return {
            "grid": self.grid,
            "n_bands": self.n_bands,
            "mu": self.mu,
            "gap": self.gap,
            "lower": self.lower,
            "upper": self.upper,
            "max_adjacent_jump": self.max_adjacent_jump(),
        }


def _eigenvalues(crystal: ReferenceCrystal, xis: NDArray[np.float64], threads: int) -> NDArray[np.float64]:
    levels = ordered_map(lambda xi: bloch_hamiltonian(crystal, xi).eigenvalues(), list(xis), threads)
    return np.stack(levels)


def band_structure(crystal: ReferenceCrystal, grid: int, *, threads: int = 1) -> BandStructure:
    """Diagonalise H_ξ on a grid^d mesh of [-π, π)^d A^{-T}.

    Args:
        crystal: Reference crystal.
        grid: Points per axis.
        threads: Worker count for the per-ξ eigensolves.

    Raises:
        BlochError: If ``grid`` is below ``MIN_GRID``.
    """
    if grid < MIN_GRID:
        raise BlochError(f"Band grid needs at least {MIN_GRID} points per axis, got {grid}")
    fractional = fractional_grid(grid, crystal.dim)
    xi = crystal.wavevectors(fractional)
    bands = _eigenvalues(crystal, xi, threads)
    gap, lower, upper = band_gap(bands, crystal.mu)
    logger.info("band_structure", grid=grid, n_bands=bands.shape[1], gap=gap)
    return BandStructure(
        grid=grid,
        fractional=fractional,
        xi=xi,
        bands=bands,
        mu=crystal.mu,
        gap=gap,
        lower=lower,
        upper=upper,
    )


@dataclass(frozen=True)
class ContinuityCheck:
    """Largest adjacent band jump on a grid and on its doubling."""

    coarse: float
    fine: float

    @property
    def ratio(self) -> float:
        return self.fine / self.coarse if self.coarse > 0 else 0.0

    @property
    def is_continuous(self) -> bool:
        """Jumps shrink under refinement."""
        return self.coarse <= 1e-10 or self.ratio <= 0.75


def band_continuity(crystal: ReferenceCrystal, grid: int, *, threads: int = 1) -> ContinuityCheck:
    """Compare adjacent jumps at ``grid`` and ``2 * grid`` points per axis."""
    coarse = band_structure(crystal, grid, threads=threads).max_adjacent_jump()
    fine = band_structure(crystal, 2 * grid, threads=threads).max_adjacent_jump()
    return ContinuityCheck(coarse=coarse, fine=fine)


def supercell_spectrum(crystal: ReferenceCrystal, repeats: int) -> NDArray[np.float64]:
    """Eigenvalues of the periodic supercell Hamiltonian at the reference density."""
    cfg = crystal.supercell(repeats)
    h = assemble(cfg, None, crystal.supercell_density(repeats), crystal.model)
    return np.asarray(la.eigvalsh(h.matrix))


def supercell_consistency(crystal: ReferenceCrystal, repeats: int, *, threads: int = 1) -> float:
    """Largest deviation between commensurate Bloch levels and the supercell spectrum.

    Both multisets are sorted, which matches them optimally for real values.
    """
    xi = crystal.wavevectors(commensurate_grid(repeats, crystal.dim))
    folded = np.sort(_eigenvalues(crystal, xi, threads).reshape(-1))
    direct = supercell_spectrum(crystal, repeats)
    if folded.shape != direct.shape:
        raise BlochError(f"Folded {folded.size} levels against {direct.size} supercell levels")
    mismatch = float(np.abs(folded - direct).max())
    logger.debug("supercell_consistency", repeats=repeats, mismatch=mismatch)
    return mismatch
