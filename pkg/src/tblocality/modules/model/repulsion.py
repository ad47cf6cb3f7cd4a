"""Short-range pair repulsion φ(r) = A e^{-r/r_rep}.

Added to the site energies of the grand potential so that relaxation
problems have local minimisers. ``strength = 0`` switches it off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from tblocality.modules.model.hopping import ModelError
from tblocality.modules.model.images import pair_images

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Configuration, Displacement

__all__ = ["PairRepulsion"]


@dataclass(frozen=True)
class PairRepulsion:
    """Exponential pair repulsion.

    Attributes:
        strength: Prefactor A (energy).
        length: Decay length r_rep.
    """

    strength: float = 0.0
    length: float = 0.25

    def __post_init__(self) -> None:
        if self.strength < 0 or self.length <= 0:
            raise ModelError(
                f"Repulsion needs strength >= 0 and length > 0, got "
                f"{self.strength}, {self.length}"
            )

    @property
    def enabled(self) -> bool:
        """Whether the repulsion contributes."""
        return self.strength > 0.0

    @property
    def cutoff(self) -> float:
        """Radius where φ drops below 1e-14 A."""
        return self.length * math.log(1e14)

    def _phi(self, r: NDArray[np.float64], order: int) -> NDArray[np.float64]:
        return self.strength * (-1.0 / self.length) ** order * np.exp(-r / self.length)

    def site_energies(self, cfg: Configuration, u: Displacement | ArrayLike | None) -> NDArray[np.float64]:
        """E_l = ½ Σ_k φ(r_lk) per site."""
        out = np.zeros(cfg.n_sites)
        if not self.enabled:
            return out
        images = pair_images(cfg, u, self.cutoff)
        np.add.at(out, images.rows, 0.5 * self._phi(images.distances, 0))
        return out

    def gradient(self, cfg: Configuration, u: Displacement | ArrayLike | None) -> NDArray[np.float64]:
        """∂/∂u(m) of Σ_l E_l, shape (n, d)."""
        out = np.zeros_like(cfg.sites)
        if not self.enabled:
            return out
        images = pair_images(cfg, u, self.cutoff)
        sel = images.off_site
        r = images.distances[sel]
        force = (self._phi(r, 1) / r)[:, np.newaxis] * images.vectors[sel]
        np.add.at(out, images.rows[sel], force)
        return out

    def hessian(self, cfg: Configuration, u: Displacement | ArrayLike | None) -> NDArray[np.float64]:
        """Second derivative of Σ_l E_l, shape (n*d, n*d)."""
        n, d = cfg.sites.shape
        full = np.zeros((n, n, d, d))
        if self.enabled:
            images = pair_images(cfg, u, self.cutoff)
            r = images.distances
            xi = images.vectors
            outer = xi[:, :, np.newaxis] * xi[:, np.newaxis, :]
            eye = np.eye(d)[np.newaxis]
            block = (
                (self._phi(r, 2) / r**2)[:, None, None] * outer
                + (self._phi(r, 1))[:, None, None] * (eye / r[:, None, None] - outer / r[:, None, None] ** 3)
            )
            half = 0.5 * block
            np.add.at(full, (images.rows, images.rows), half)
            np.add.at(full, (images.cols, images.cols), half)
            np.add.at(full, (images.rows, images.cols), -half)
            np.add.at(full, (images.cols, images.rows), -half)
        return full.transpose(0, 2, 1, 3).reshape(n * d, n * d)
