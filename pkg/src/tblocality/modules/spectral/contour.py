"""Contours around the spectrum and their trapezoidal quadrature.

Three shapes are used:

* observable: a circle around the whole spectrum with a configured margin;
* fermi (finite β): an ellipse around the whole spectrum whose imaginary
  semi-axis is π/(2β), so every node stays at least π/(2β) away from the
  Matsubara poles μ + iπ(2k+1)/β;
* fermi-zeroT: a circle around the occupied levels only, crossing the real
  axis at the middle of the gap.

The trapezoid rule in the angle converges like e^{-N τ}, where τ is the
distance of the nearest singularity from the real angle axis. With
``refine`` on, N is raised until e^{-N τ} drops below the target tolerance.
The finite-β ellipse needs N growing linearly in β; past ``MAX_NODES`` the
contour is refused and callers switch to exact eigenbasis kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum
from typing import TYPE_CHECKING

import numpy as np
import structlog

from tblocality.modules.spectral.errors import ContourError, GapError, QuadratureError
from tblocality.modules.spectral.observables import ObservableKind

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.spectral.eigen import SpectralCache
    from tblocality.modules.spectral.observables import Observable

__all__ = [
    "Contour",
    "ContourKind",
    "build_contour",
    "ellipse_contour",
    "try_build_contour",
    "winding_numbers",
]

logger = structlog.get_logger()

DEFAULT_QUADRATURE = 64
DEFAULT_MARGIN = 0.5
DEFAULT_TOLERANCE = 1e-14
MAX_NODES = 16384

# Matsubara poles on either side considered for the convergence rate
_POLE_PAIRS = 3


class ContourKind(StrEnum):
    """Role of a contour."""

    OBSERVABLE = "observable"
    FERMI = "fermi"
    FERMI_ZERO_T = "fermi-zeroT"


@dataclass(frozen=True, eq=False)
class Contour:
    """Closed, positively oriented contour z(θ) = c + a cos θ + i b sin θ.

    Attributes:
        kind: Contour role.
        center: Real center c.
        radius: Real semi-axis a.
        half_height: Imaginary semi-axis b (equal to ``radius`` for circles).
        nodes: Quadrature nodes z_q.
        weights: Quadrature weights w_q = z'(θ_q) 2π/N.
        clearance: Smallest distance from a node to the spectrum it was built for.
    """

    kind: ContourKind
    center: float
    radius: float
    half_height: float
    nodes: NDArray[np.complex128]
    weights: NDArray[np.complex128]
    clearance: float

    @property
    def n_quad(self) -> int:
        """Number of quadrature nodes."""
        return int(self.nodes.size)

    @property
    def is_empty(self) -> bool:
        """True when the contour encloses nothing (no occupied levels)."""
        return self.nodes.size == 0


def ellipse_contour(
    kind: ContourKind,
    center: float,
    radius: float,
    half_height: float,
    n_quad: int,
    spectrum: NDArray[np.float64],
) -> Contour:
    """Trapezoidal nodes on an ellipse; clearance measured against ``spectrum``."""
    if n_quad < 4:
        raise ContourError(f"Need at least 4 nodes, got {n_quad}", clearance=0.0)
    theta = 2.0 * np.pi * (np.arange(n_quad) + 0.5) / n_quad
    nodes = center + radius * np.cos(theta) + 1j * half_height * np.sin(theta)
    dz = -radius * np.sin(theta) + 1j * half_height * np.cos(theta)
    weights = dz * (2.0 * np.pi / n_quad)
    clearance = (
        float(np.abs(nodes[:, np.newaxis] - spectrum[np.newaxis, :]).min())
        if spectrum.size
        else math.inf
    )
    return Contour(
        kind=kind,
        center=float(center),
        radius=float(radius),
        half_height=float(half_height),
        nodes=nodes,
        weights=weights,
        clearance=clearance,
    )


def _empty_contour(kind: ContourKind) -> Contour:
    empty = np.zeros(0, dtype=complex)
    return Contour(kind, 0.0, 0.0, 0.0, empty, empty, math.inf)


def _strip_width(points: NDArray[np.complex128], center: float, a: float, b: float) -> float:
    """Smallest |Im θ| over θ with z(θ) equal to one of ``points``.

    With w = e^{iθ}, z - c = ((a+b)/2) w + ((a-b)/2) / w.
    """
    shifted = points - center
    if math.isclose(a, b):
        mags = np.abs(shifted) / a
    else:
        p = 0.5 * (a + b)
        q = 0.5 * (a - b)
        disc = np.sqrt(shifted**2 - 4.0 * p * q + 0j)
        mags = np.concatenate([np.abs((shifted + disc) / (2 * p)), np.abs((shifted - disc) / (2 * p))])
    mags = mags[mags > 0]
    if mags.size == 0:
        return math.inf
    return float(np.abs(np.log(mags)).min())


def _node_count(
    n_quad: int,
    singularities: NDArray[np.complex128],
    center: float,
    a: float,
    b: float,
    tol: float,
) -> int:
    tau = _strip_width(singularities, center, a, b)
    if not math.isfinite(tau) or tau <= 0:
        return n_quad
    needed = math.ceil(1.1 * math.log(1.0 / tol) / tau)
    if needed > MAX_NODES:
        raise QuadratureError(
            f"Contour needs {needed} nodes to reach {tol:.0e}, above the cap of {MAX_NODES}",
            clearance=b,
            needed=needed,
            cap=MAX_NODES,
        )
    return max(n_quad, needed)


def build_contour(
    spec: SpectralCache,
    obs: Observable,
    n_quad: int = DEFAULT_QUADRATURE,
    *,
    margin: float = DEFAULT_MARGIN,
    refine: bool = True,
    tol: float = DEFAULT_TOLERANCE,
) -> Contour:
    """Build the contour paired with an observable.

    Args:
        spec: Spectrum the contour must enclose (or separate).
        obs: Observable evaluated on the contour.
        n_quad: Number of nodes, or the minimum number when ``refine`` is on.
        margin: Clearance of the observable-kind circle.
        refine: Raise the node count until the quadrature error estimate
            falls below ``tol``.
        tol: Target quadrature accuracy.

    Returns:
        Contour with nodes, weights and measured clearance.

    Raises:
        GapError: Zero-temperature observable without a gap at μ.
        ContourError: If the requested clearance is not positive.
        QuadratureError: If ``refine`` needs more than ``MAX_NODES`` nodes.
    """
    lam = np.asarray(spec.eigenvalues)
    lo, hi = float(lam.min()), float(lam.max())

    if obs.kind is ObservableKind.POLYNOMIAL:
        if margin <= 0:
            raise ContourError(f"Margin must be positive, got {margin}", clearance=margin)
        center = 0.5 * (lo + hi)
        radius = 0.5 * (hi - lo) + margin
        count = _node_count(n_quad, lam.astype(complex), center, radius, radius, tol) if refine else n_quad
        contour = ellipse_contour(ContourKind.OBSERVABLE, center, radius, radius, count, lam)

    elif obs.zero_temperature:
        info = spec.gap(obs.mu)
        info.require(obs.mu)
        crossing = info.crossing
        if crossing is None:
            return _empty_contour(ContourKind.FERMI_ZERO_T)
        if info.gap <= 0:
            raise GapError("No spectral gap at mu", gap=info.gap, mu=obs.mu)
        left = lo - 0.5 * info.gap
        center = 0.5 * (left + crossing)
        radius = 0.5 * (crossing - left)
        count = _node_count(n_quad, lam.astype(complex), center, radius, radius, tol) if refine else n_quad
        contour = ellipse_contour(ContourKind.FERMI_ZERO_T, center, radius, radius, count, lam)

    else:
        half_height = 0.5 * np.pi / obs.beta
        center = 0.5 * (lo + hi)
        radius = 0.5 * (hi - lo) + half_height
        half_height = min(half_height, radius)
        count = n_quad
        if refine:
            k = np.arange(-_POLE_PAIRS, _POLE_PAIRS)
            poles = obs.mu + 1j * np.pi * (2 * k + 1) / obs.beta
            singular = np.concatenate([lam.astype(complex), poles])
            count = _node_count(n_quad, singular, center, radius, half_height, tol)
        contour = ellipse_contour(ContourKind.FERMI, center, radius, half_height, count, lam)

    if contour.clearance <= 0:
        raise ContourError("Contour touches the spectrum", clearance=contour.clearance)
    logger.debug(
        "contour_built",
        kind=str(contour.kind),
        n_quad=contour.n_quad,
        clearance=contour.clearance,
    )
    return contour


def try_build_contour(
    spec: SpectralCache,
    obs: Observable,
    n_quad: int = DEFAULT_QUADRATURE,
    *,
    margin: float = DEFAULT_MARGIN,
) -> Contour | None:
    """Like :func:`build_contour`, but None when the quadrature cannot be resolved."""
    try:
        return build_contour(spec, obs, n_quad, margin=margin)
    except QuadratureError as e:
        logger.info("contour_unresolved", kind=str(obs.kind), beta=obs.beta, needed=e.needed, cap=e.cap)
        return None


def winding_numbers(contour: Contour, points: NDArray[np.float64]) -> NDArray[np.float64]:
    """(1/2πi) ∮ dz / (z - p) for each point, by the contour's own quadrature."""
    if contour.is_empty:
        return np.zeros(len(points))
    diff = contour.nodes[:, np.newaxis] - np.asarray(points)[np.newaxis, :]
    total = np.sum(contour.weights[:, np.newaxis] / diff, axis=0) / (2j * np.pi)
    return np.asarray(total.real)
