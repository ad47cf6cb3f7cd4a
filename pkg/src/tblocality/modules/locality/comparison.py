"""Defect against reference: locality constants, isolated levels and density deviation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
import scipy.linalg as la
import structlog

from tblocality.modules.lattice import distance_to_defect, match_far_field, pair_distances
from tblocality.modules.locality.decay import DecayFit, asymptotic_window, fit_decay
from tblocality.modules.locality.errors import FitError, WoodburyError
from tblocality.modules.locality.experiment import derivative_magnitudes, nearest_distance
from tblocality.modules.locality.woodbury import inverse_action, low_rank_factors, woodbury_resolvent
from tblocality.modules.response import ResponseCalculator

if TYPE_CHECKING:
    from numpy.typing import NDArray

    from tblocality.modules.scf import ElectronicState
    from tblocality.modules.spectral import Observable

__all__ = [
    "DefectBin",
    "DefectComparison",
    "WoodburyOverlay",
    "defect_comparison",
    "isolated_eigenvalues",
]

logger = structlog.get_logger()

# Reference constants below this are left out of relative deviations
_CONSTANT_FLOOR = 1e-12


@dataclass(frozen=True)
class DefectBin:
    """Locality constants of pairs in one distance-to-defect shell.

    Attributes:
        lower: Inner shell radius.
        upper: Outer shell radius.
        n_pairs: Pairs in the shell.
        mean_constant: Mean |∂O_l/∂u(m)| e^{η̂_ref r} of the defect system.
        mean_reference: Same for the reference system.
        relative_deviation: Mean |C - C_ref| / C_ref.
    """

    lower: float
    upper: float
    n_pairs: int
    mean_constant: float
    mean_reference: float
    relative_deviation: float


@dataclass(frozen=True)
class WoodburyOverlay:
    """Finite-rank split of the defect-minus-reference Hamiltonian on shared sites.

    Attributes:
        rank: Rank kept in the finite-rank part.
        remainder_norm: ‖D - D_r‖₂ of the dropped part.
        woodbury_error: Max deviation of the Woodbury update from a dense inverse of A + D_r.
        truncation_error: Max deviation from the full defect resolvent on shared sites.
        z: Energy the resolvents were compared at.
    """

    rank: int
    remainder_norm: float
    woodbury_error: float
    truncation_error: float
    z: complex

    def as_dict(self) -> dict[str, Any]:
        """Summary fields."""
        return {
            "rank": self.rank,
            "remainder_norm": self.remainder_norm,
            "woodbury_error": self.woodbury_error,
            "truncation_error": self.truncation_error,
            "z": [self.z.real, self.z.imag],
        }


@dataclass(frozen=True, eq=False)
class DefectComparison:
    """Everything measured when comparing a defect state with its reference.

    Attributes:
        mapping: Far-field defect site to reference site.
        eta_reference: Decay rate fitted on the reference system.
        bins: Shells ordered from the defect outwards.
        convergence_fit: Decay of |C - C_ref| with distance to the defect, if fittable.
        isolated_eigenvalues: Defect levels away from the reference spectrum.
        density_deviation: ‖ρ - ρ_ref‖_ℓ² over shared sites.
        density_fit: Decay of |ρ - ρ_ref| with distance to the defect, if fittable.
        woodbury: Finite-rank overlay diagnostics.
    """

    mapping: dict[int, int]
    eta_reference: float
    bins: tuple[DefectBin, ...]
    convergence_fit: DecayFit | None
    isolated_eigenvalues: NDArray[np.float64]
    density_deviation: float
    density_fit: DecayFit | None
    woodbury: WoodburyOverlay | None = None
    pair_rows: list[dict[str, Any]] = field(default_factory=list)

    @property
    def in_gap_count(self) -> int:
        """Number of isolated defect levels."""
        return int(self.isolated_eigenvalues.size)

    def approaches_reference(self) -> bool:
        """Whether the relative deviation does not grow from shell to shell."""
        deviations = [b.relative_deviation for b in self.bins if b.n_pairs]
        return all(a >= b for a, b in zip(deviations, deviations[1:], strict=False))

    def far_deviation(self) -> float:
        """Relative deviation in the outermost populated shell."""
        populated = [b for b in self.bins if b.n_pairs]
        return populated[-1].relative_deviation if populated else float("nan")

    def as_dict(self) -> dict[str, Any]:
        """Summary fields."""
        return {
            "eta_reference": self.eta_reference,
            "far_field_sites": len(self.mapping),
            "bins": [asdict(b) for b in self.bins],
            "approaches_reference": self.approaches_reference(),
            "far_deviation": self.far_deviation(),
            "convergence_fit": None if self.convergence_fit is None else self.convergence_fit.as_dict(),
            "in_gap_count": self.in_gap_count,
            "isolated_eigenvalues": self.isolated_eigenvalues.tolist(),
            "density_deviation": self.density_deviation,
            "density_fit": None if self.density_fit is None else self.density_fit.as_dict(),
            "woodbury": None if self.woodbury is None else self.woodbury.as_dict(),
        }


def isolated_eigenvalues(
    defect: NDArray[np.float64],
    reference: NDArray[np.float64],
    mu: float,
    delta: float,
) -> NDArray[np.float64]:
    """Defect levels inside the reference gap at μ or outside the reference spectrum.

    Levels within ``delta`` of the gap edges or of the spectrum ends do not count.
    """
    below = reference[reference < mu]
    above = reference[reference > mu]
    lower = float(below.max()) if below.size else -np.inf
    upper = float(above.min()) if above.size else np.inf
    in_gap = (defect > lower + delta) & (defect < upper - delta)
    outside = (defect < float(reference.min()) - delta) | (defect > float(reference.max()) + delta)
    return np.asarray(defect[in_gap | outside])


def _try_fit(distances: NDArray[np.float64], values: NDArray[np.float64], name: str) -> DecayFit | None:
    try:
        return fit_decay(distances, values, use_envelope=True)
    except FitError as e:
        logger.info("defect_fit_skipped", quantity=name, reason=str(e))
        return None


def _orbital_rows(sites: list[int], n_orbitals: int) -> NDArray[np.intp]:
    return np.asarray([s * n_orbitals + b for s in sites for b in range(n_orbitals)], dtype=np.intp)


def _woodbury_overlay(
    defect: ElectronicState,
    reference: ElectronicState,
    mapping: dict[int, int],
    z: complex,
    tol: float,
) -> WoodburyOverlay | None:
    n_b = defect.model.n_orbitals
    shared = sorted(mapping)
    rows_def = _orbital_rows(shared, n_b)
    rows_ref = _orbital_rows([mapping[s] for s in shared], n_b)
    h_def = defect.hamiltonian.matrix[np.ix_(rows_def, rows_def)]
    h_ref = reference.hamiltonian.matrix[np.ix_(rows_ref, rows_ref)]
    size = h_ref.shape[0]
    identity = np.eye(size)

    diff = h_def - h_ref
    left, right = low_rank_factors(diff, tol)
    remainder = diff - left @ right
    remainder_norm = float(la.norm(remainder, 2)) if size else 0.0
    try:
        updated = woodbury_resolvent(inverse_action(h_ref - z * identity), (left, right))
    except WoodburyError as e:
        logger.warning("woodbury_overlay_failed", error=str(e))
        return None
    woodbury = updated.matrix(size)
    dense = la.inv(h_ref + left @ right - z * identity)
    full = la.inv(h_def - z * identity)
    return WoodburyOverlay(
        rank=left.shape[1],
        remainder_norm=remainder_norm,
        woodbury_error=float(np.abs(woodbury - dense).max(initial=0.0)),
        truncation_error=float(np.abs(woodbury - full).max(initial=0.0)),
        z=complex(z),
    )


def defect_comparison(
    defect: ElectronicState,
    reference: ElectronicState,
    obs: Observable,
    *,
    bins: int = 3,
    delta: float = 1e-6,
    rank_tol: float = 1e-8,
    threads: int = 1,
) -> DefectComparison:
    """Compare locality constants, levels and densities of a defect and its reference.

    The distance of a pair (l, m) to the defect is the smaller of the two site
    distances to the defect center.

    Args:
        defect: Converged state of the defect configuration.
        reference: Converged state of the defect-free configuration.
        obs: Observable whose gradients define the locality constants.
        bins: Number of distance-to-defect shells.
        delta: Margin used when counting isolated levels.
        rank_tol: Relative singular-value cut of the Woodbury overlay.
        threads: Worker count for the gradient sweeps.

    Returns:
        Comparison summary.

    Raises:
        ConfigurationMismatchError: If the far fields do not coincide.
        StabilityError: If either state has a singular I - 𝓛.
    """
    mapping = match_far_field(defect.cfg, reference.cfg)
    shared = np.asarray(sorted(mapping), dtype=np.intp)
    counterpart = np.asarray([mapping[int(s)] for s in shared], dtype=np.intp)

    ref_mag = derivative_magnitudes(ResponseCalculator(reference), obs, 1, threads=threads)
    def_mag = derivative_magnitudes(ResponseCalculator(defect), obs, 1, threads=threads)
    ref_dist = pair_distances(reference.cfg, reference.u)
    window = asymptotic_window(ref_dist, nearest_distance(ref_dist))
    ref_fit = fit_decay(ref_dist, ref_mag, window=window, use_envelope=True)
    eta = max(ref_fit.eta_hat, 0.0)

    site_distance = distance_to_defect(defect.cfg)
    pair_r = pair_distances(defect.cfg, defect.u)[np.ix_(shared, shared)]
    c_def = def_mag[np.ix_(shared, shared)] * np.exp(eta * pair_r)
    c_ref = ref_mag[np.ix_(counterpart, counterpart)] * np.exp(eta * pair_r)
    to_defect = np.minimum.outer(site_distance[shared], site_distance[shared])

    usable = (pair_r >= window[0]) & (pair_r <= window[1]) & (c_ref > _CONSTANT_FLOOR)
    deviation = np.where(usable, np.abs(c_def - c_ref) / np.where(usable, c_ref, 1.0), 0.0)

    d_values = to_defect[usable]
    edges = np.linspace(float(d_values.min()), float(d_values.max()), bins + 1) if d_values.size else np.zeros(bins + 1)
    shells: list[DefectBin] = []
    for k in range(bins):
        hi_open = k == bins - 1
        upper = (to_defect <= edges[k + 1]) if hi_open else (to_defect < edges[k + 1])
        in_bin = usable & (to_defect >= edges[k]) & upper
        count = int(np.count_nonzero(in_bin))
        shells.append(
            DefectBin(
                lower=float(edges[k]),
                upper=float(edges[k + 1]),
                n_pairs=count,
                mean_constant=float(c_def[in_bin].mean()) if count else 0.0,
                mean_reference=float(c_ref[in_bin].mean()) if count else 0.0,
                relative_deviation=float(deviation[in_bin].mean()) if count else float("nan"),
            )
        )

    convergence = _try_fit(to_defect[usable], np.abs(c_def - c_ref)[usable], "constants")

    rho_gap = defect.rho[shared] - reference.rho[counterpart]
    density_fit = _try_fit(site_distance[shared], rho_gap, "density")

    mu = defect.system.mu
    levels = isolated_eigenvalues(defect.spectrum.eigenvalues, reference.spectrum.eigenvalues, mu, delta)
    z = complex(mu, max(0.5 * reference.gap(), 0.5)) if np.isfinite(reference.gap()) else complex(mu, 1.0)
    overlay = _woodbury_overlay(defect, reference, mapping, z, rank_tol)

    rows = [
        {
            "l": int(shared[a]),
            "m": int(shared[b]),
            "r": float(pair_r[a, b]),
            "distance_to_defect": float(to_defect[a, b]),
            "constant": float(c_def[a, b]),
            "reference": float(c_ref[a, b]),
        }
        for a, b in zip(*np.nonzero(usable), strict=True)
    ]
    result = DefectComparison(
        mapping=mapping,
        eta_reference=ref_fit.eta_hat,
        bins=tuple(shells),
        convergence_fit=convergence,
        isolated_eigenvalues=levels,
        density_deviation=float(np.linalg.norm(rho_gap)),
        density_fit=density_fit,
        woodbury=overlay,
        pair_rows=rows,
    )
    logger.info(
        "defect_comparison",
        in_gap=result.in_gap_count,
        far_deviation=result.far_deviation(),
        density_deviation=result.density_deviation,
    )
    return result
