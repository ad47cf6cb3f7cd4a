"""Exponential decay regression on (distance, |value|) samples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from tblocality.modules.locality.errors import FitError

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "DecayFit",
    "asymptotic_window",
    "envelope",
    "fit_decay",
]

VALUE_FLOOR = 1e-14

# Distances equal to this many decimals share an envelope bin
_DISTANCE_DECIMALS = 9


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit log|value| ≈ log C - η r.

    Attributes:
        log_prefactor: log C.
        eta_hat: Fitted exponent η̂ (inverse length).
        r_squared: Coefficient of determination in [0, 1].
        window: (r_min, r_max) of the samples used.
        n_samples: Number of samples used.
    """

    log_prefactor: float
    eta_hat: float
    r_squared: float
    window: tuple[float, float]
    n_samples: int

    def predict(self, r: ArrayLike) -> NDArray[np.float64]:
        """C e^{-η̂ r}."""
        return np.exp(self.log_prefactor - self.eta_hat * np.asarray(r, dtype=float))

    def as_dict(self) -> dict[str, Any]:
        """Summary fields."""
        return {
            "eta_hat": self.eta_hat,
            "log_prefactor": self.log_prefactor,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "n_samples": self.n_samples,
        }


def envelope(distances: ArrayLike, values: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Largest |value| at each distinct distance."""
    r = np.round(np.asarray(distances, dtype=float), _DISTANCE_DECIMALS)
    v = np.abs(np.asarray(values, dtype=float))
    unique, inverse = np.unique(r, return_inverse=True)
    peak = np.zeros(unique.size)
    np.maximum.at(peak, inverse, v)
    return unique, peak


def asymptotic_window(
    distances: ArrayLike, spacing: float, *, lower_factor: float = 2.0, keep: float = 0.9
) -> tuple[float, float]:
    """Fit window that drops r < 2a and the largest 10% of distances."""
    r = np.asarray(distances, dtype=float)
    r = r[r > 0]
    if r.size == 0:
        return lower_factor * spacing, lower_factor * spacing
    return lower_factor * spacing, float(np.quantile(r, keep))


def fit_decay(
    distances: ArrayLike,
    values: ArrayLike,
    *,
    floor: float = VALUE_FLOOR,
    window: tuple[float, float] | None = None,
    min_samples: int = 5,
    min_ratio: float = 3.0,
    use_envelope: bool = False,
) -> DecayFit:
    """Fit an exponential decay rate to samples.

    Args:
        distances: Sample distances r.
        values: Sample values; magnitudes are used.
        floor: Magnitudes at or below this are discarded.
        window: Optional inclusive (r_min, r_max) restriction.
        min_samples: Minimum number of usable samples.
        min_ratio: Minimum r_max / r_min spanned by the samples.
        use_envelope: Fit the per-distance maximum instead of every sample.

    Returns:
        Deterministic least-squares fit.

    Raises:
        FitError: If too few samples survive or they span too short a range.
    """
    r = np.asarray(distances, dtype=float).reshape(-1)
    v = np.abs(np.asarray(values, dtype=float)).reshape(-1)
    if r.shape != v.shape:
        raise FitError(f"{r.size} distances for {v.size} values")
    if use_envelope:
        r, v = envelope(r, v)

    keep = v > floor
    if window is not None:
        keep &= (r >= window[0]) & (r <= window[1])
    r, v = r[keep], v[keep]

    if r.size < min_samples:
        raise FitError(f"Need {min_samples} samples above {floor:g}, got {r.size}")
    r_min, r_max = float(r.min()), float(r.max())
    if r_min <= 0 or r_max / r_min < min_ratio:
        raise FitError(f"Samples span [{r_min:.3g}, {r_max:.3g}], need ratio >= {min_ratio}")

    logs = np.log(v)
    spread = logs - logs.mean()
    total = float(spread @ spread)
    if total <= 1e-28 * logs.size:
        return DecayFit(float(logs.mean()), 0.0, 1.0, (r_min, r_max), int(r.size))

    slope, intercept = np.polyfit(r, logs, 1)
    residual = logs - (slope * r + intercept)
    r_squared = min(1.0, max(0.0, 1.0 - float(residual @ residual) / total))
    eta = -float(slope)
    if math.isclose(eta, 0.0, abs_tol=1e-15):
        eta = 0.0
    return DecayFit(float(intercept), eta, r_squared, (r_min, r_max), int(r.size))
