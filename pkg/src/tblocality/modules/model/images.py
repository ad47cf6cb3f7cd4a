"""Enumerate interacting site pairs, including periodic images."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from tblocality.modules.lattice import as_displacement_array

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Configuration, Displacement

__all__ = [
    "PairImages",
    "lattice_translations",
    "pair_images",
]


@dataclass(frozen=True, eq=False)
class PairImages:
    """Flat list of (l, k, image) pair vectors within a cutoff.

    Attributes:
        rows: Site index l of each entry.
        cols: Site index k of each entry.
        vectors: Pair vectors (l + u_l) - (k + u_k) + translation, shape (p, d).
        distances: Their lengths.
    """

    rows: NDArray[np.intp]
    cols: NDArray[np.intp]
    vectors: NDArray[np.float64]
    distances: NDArray[np.float64]

    @property
    def off_site(self) -> NDArray[np.bool_]:
        """Mask of entries with l != k."""
        return np.asarray(self.rows != self.cols)


def lattice_translations(
    lattice: NDArray[np.float64], cutoff: float, extent: float = 0.0
) -> NDArray[np.float64]:
    """Translations Aγ that can bring a pair within ``cutoff``.

    Args:
        lattice: Matrix with translation vectors as columns.
        cutoff: Interaction radius.
        extent: Largest raw separation between the sites being paired.

    Returns:
        Array of shape (count, d) containing the zero translation.
    """
    # Layer spacing along axis i is 1 / |row i of A^{-1}|
    spacing = 1.0 / np.linalg.norm(np.linalg.inv(lattice), axis=1)
    reach = [math.ceil((cutoff + extent) / s) for s in spacing]
    shifts = [
        lattice @ np.asarray(gamma, dtype=float)
        for gamma in itertools.product(*(range(-n, n + 1) for n in reach))
    ]
    return np.asarray(shifts)


def pair_images(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    cutoff: float,
) -> PairImages:
    """All pairs (l, k, γ) with 0 < |r_lk + Lγ| <= cutoff.

    Finite clusters only use γ = 0. Periodic configurations sum over supercell
    translations, so self-images (l = k, γ != 0) are included.
    """
    pos = cfg.sites + as_displacement_array(cfg, u)
    diff = pos[:, np.newaxis, :] - pos[np.newaxis, :, :]
    supercell = cfg.supercell
    if supercell is None:
        shifts = np.zeros((1, cfg.dim))
    else:
        extent = float(np.abs(diff).max(initial=0.0)) * math.sqrt(cfg.dim)
        shifts = lattice_translations(supercell, cutoff, extent)

    vectors = diff[np.newaxis, :, :, :] + shifts[:, np.newaxis, np.newaxis, :]
    distances = np.linalg.norm(vectors, axis=-1)
    mask = (distances > 0.0) & (distances <= cutoff)
    _, rows, cols = np.nonzero(mask)
    return PairImages(
        rows=rows,
        cols=cols,
        vectors=vectors[mask],
        distances=distances[mask],
    )
