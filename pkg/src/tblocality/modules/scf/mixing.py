"""Anderson acceleration for the density fixed point ρ = F(ρ)."""

from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from numpy.typing import NDArray

__all__ = ["AndersonMixer"]


class AndersonMixer:
    """Anderson mixing with a Tikhonov-regularised least-squares step.

    Given the pair (ρ_in, ρ_out = F(ρ_in)) with residual r = ρ_out - ρ_in, the
    next input is (ρ_in - ΔX β) + α (r - ΔR β), where β minimises
    ‖r - ΔR β‖² + λ‖β‖² over the stored history differences and α is the
    damping. With fewer than two stored pairs the step is plain linear mixing.
    """

    def __init__(self, depth: int = 5, *, damping: float = 0.5, regularization: float = 1e-10) -> None:
        if depth < 0:
            raise ValueError(f"depth must be >= 0, got {depth}")
        if not 0.0 < damping <= 1.0:
            raise ValueError(f"damping must lie in (0, 1], got {damping}")
        self.depth = depth
        self.damping = damping
        self.regularization = regularization
        self._inputs: deque[NDArray[np.float64]] = deque(maxlen=depth + 1)
        self._residuals: deque[NDArray[np.float64]] = deque(maxlen=depth + 1)

    def reset(self) -> None:
        """Forget the stored history."""
        self._inputs.clear()
        self._residuals.clear()

    def _linear(self, rho_in: NDArray[np.float64], rho_out: NDArray[np.float64]) -> NDArray[np.float64]:
        return (1.0 - self.damping) * rho_in + self.damping * rho_out

    def step(self, rho_in: NDArray[np.float64], rho_out: NDArray[np.float64]) -> NDArray[np.float64]:
        """Next input density.

        Args:
            rho_in: Density fed to the map.
            rho_out: Map output F(rho_in).

        Returns:
            Mixed density for the next iteration.
        """
        if self.depth == 0:
            return self._linear(rho_in, rho_out)

        self._inputs.append(rho_in.copy())
        self._residuals.append(rho_out - rho_in)
        if len(self._inputs) < 2:
            return self._linear(rho_in, rho_out)

        inputs = np.asarray(self._inputs)
        residuals = np.asarray(self._residuals)
        d_x = np.diff(inputs, axis=0).T
        d_r = np.diff(residuals, axis=0).T

        gram = d_r.T @ d_r + self.regularization * np.eye(d_r.shape[1])
        coeffs = np.linalg.solve(gram, d_r.T @ residuals[-1])

        averaged_in = rho_in - d_x @ coeffs
        averaged_residual = residuals[-1] - d_r @ coeffs
        return np.asarray(averaged_in + self.damping * averaged_residual)
