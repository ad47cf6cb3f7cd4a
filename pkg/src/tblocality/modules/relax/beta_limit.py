"""Zero-temperature limit of relaxed geometries.

Relaxes at β = ∞ first, then at each finite β warm-started from that
minimiser, and fits log ‖D(ū_β - ū_∞)‖ against β.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog

from tblocality.infrastructure.parallel import ordered_map
from tblocality.modules.lattice import stencil_seminorm
from tblocality.modules.locality import DecayFit, FitError, fit_decay
from tblocality.modules.relax.optimizer import RelaxParams, RelaxResult, relax_geometry

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.lattice import Displacement, StencilWeights
    from tblocality.modules.scf import TightBindingSystem

__all__ = [
    "BetaLimitResult",
    "beta_limit_experiment",
]

logger = structlog.get_logger()

# Gaps below this at the β = ∞ minimiser mark the run as gapless
_GAP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class BetaLimitResult:
    """Deviation of finite-temperature minimisers from the β = ∞ one.

    Attributes:
        betas: Inverse temperatures, ascending.
        deviations: ‖D(ū_β - ū_∞)‖ per β.
        fit: Exponential fit against β; None when no fit was possible.
        reference: β = ∞ relaxation.
        runs: Relaxation per β.
        gap: Gap at μ of the β = ∞ minimiser.
    """

    betas: tuple[float, ...]
    deviations: NDArray[np.float64]
    fit: DecayFit | None
    reference: RelaxResult
    runs: tuple[RelaxResult, ...]
    gap: float

    @property
    def gapped(self) -> bool:
        return self.gap > _GAP_TOL

    @property
    def rate(self) -> float | None:
        """Fitted c in ‖D(ū_β - ū_∞)‖ ≲ e^{-cβ}."""
        return None if self.fit is None else self.fit.eta_hat

    def is_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.deviations) < 0))

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "beta": beta,
                "deviation": float(dev),
                "iterations": run.iterations,
                "energy": run.energy,
            }
            for beta, dev, run in zip(self.betas, self.deviations, self.runs, strict=True)
        ]

    def as_dict(self) -> dict[str, Any]:
        return {
            "betas": list(self.betas),
            "deviations": self.deviations.tolist(),
            "fit": None if self.fit is None else self.fit.as_dict(),
            "gap": self.gap,
            "gapped": self.gapped,
            "decreasing": self.is_decreasing(),
            "reference": self.reference.as_dict(),
        }


def beta_limit_experiment(
    system: TightBindingSystem,
    betas: Sequence[float],
    u_init: Displacement | ArrayLike | None = None,
    free_mask: ArrayLike | None = None,
    *,
    params: RelaxParams | None = None,
    weights: StencilWeights | None = None,
    threads: int = 1,
) -> BetaLimitResult:
    """Relax at β = ∞ and at each β, then fit the decay of the deviation.

    Args:
        system: System template; its β is overridden.
        betas: Finite inverse temperatures in ascending order.
        u_init: Starting displacement of the β = ∞ relaxation.
        free_mask: Per-site flags of the relaxed region.
        params: Optimizer settings shared by every run.
        weights: Stencil weights of the deviation seminorm.
        threads: Worker count for the independent β runs.

    Raises:
        ValueError: If ``betas`` is empty, not ascending or not finite.
        RelaxationError: If any relaxation fails.
    """
    values = tuple(float(b) for b in betas)
    if not values or any(not math.isfinite(b) or b <= 0 for b in values):
        raise ValueError(f"Need positive finite betas, got {values}")
    if any(b2 <= b1 for b1, b2 in zip(values, values[1:], strict=False)):
        raise ValueError(f"Betas must be strictly ascending, got {values}")

    reference = relax_geometry(replace(system, beta=math.inf), u_init, free_mask, params)
    gap = reference.state.gap()

    def run(beta: float) -> RelaxResult:
        return relax_geometry(replace(system, beta=beta), reference.u, free_mask, params)

    runs = tuple(ordered_map(run, values, threads))
    deviations = np.array([stencil_seminorm(system.cfg, r.u - reference.u, weights) for r in runs])

    fit: DecayFit | None
    try:
        fit = fit_decay(values, deviations, min_samples=3, min_ratio=1.0)
    except FitError as e:
        logger.warning("beta_limit_fit_failed", error=str(e))
        fit = None
    if gap <= _GAP_TOL:
        logger.warning("beta_limit_gapless", gap=gap)
    logger.info(
        "beta_limit",
        betas=values,
        deviations=deviations,
        rate=None if fit is None else fit.eta_hat,
    )
    return BetaLimitResult(
        betas=values,
        deviations=deviations,
        fit=fit,
        reference=reference,
        runs=runs,
        gap=gap,
    )
