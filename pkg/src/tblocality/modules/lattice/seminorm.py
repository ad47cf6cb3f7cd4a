"""Exponentially weighted finite-difference seminorms of displacements."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from tblocality.modules.lattice.configuration import (
    LatticeError,
    as_displacement_array,
    pair_distances,
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from tblocality.modules.lattice.configuration import Configuration, Displacement

__all__ = [
    "StencilWeights",
    "stencil_energy",
    "stencil_seminorm",
]

# Tail weight e^{-2Υ·cutoff} below this is dropped
_TAIL_WEIGHT = 1e-14


@dataclass(frozen=True)
class StencilWeights:
    """Weights e^{-2Υ|σ|} of the displacement seminorm.

    Attributes:
        upsilon: Decay exponent Υ (inverse length).
        cutoff: Largest stencil length |σ| kept; derived from Υ when omitted.
    """

    upsilon: float = 1.0
    cutoff: float | None = None

    def __post_init__(self) -> None:
        if self.upsilon <= 0:
            raise LatticeError(f"upsilon must be positive, got {self.upsilon}")
        if self.cutoff is not None and self.cutoff <= 0:
            raise LatticeError(f"cutoff must be positive, got {self.cutoff}")

    @property
    def effective_cutoff(self) -> float:
        """Cutoff in length units."""
        if self.cutoff is not None:
            return self.cutoff
        return math.log(1.0 / _TAIL_WEIGHT) / (2.0 * self.upsilon)


def stencil_energy(
    cfg: Configuration,
    u: Displacement | ArrayLike,
    weights: StencilWeights | None = None,
) -> float:
    """Squared seminorm Σ_l Σ_σ e^{-2Υ|σ|} |u(l+σ) - u(l)|².

    The stencil σ runs over reference pair vectors k - l with 0 < |σ| <= cutoff.
    """
    w = weights or StencilWeights()
    values = as_displacement_array(cfg, u)
    if cfg.n_sites < 2:
        return 0.0
    dist = pair_distances(cfg)
    mask = (dist > 0) & (dist <= w.effective_cutoff)
    weight = np.where(mask, np.exp(-2.0 * w.upsilon * dist), 0.0)
    diff = values[np.newaxis, :, :] - values[:, np.newaxis, :]
    return float(np.sum(weight * np.sum(diff**2, axis=-1)))


def stencil_seminorm(
    cfg: Configuration,
    u: Displacement | ArrayLike,
    weights: StencilWeights | None = None,
) -> float:
    """Seminorm ‖Du‖ (square root of :func:`stencil_energy`)."""
    return math.sqrt(stencil_energy(cfg, u, weights))
