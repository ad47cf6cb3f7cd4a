"""Point defects: vacancies, interstitials and substitutions.

A defect configuration records the ball B_R(center) that contains every
edit. Outside that ball it coincides with the reference configuration it
was built from, which :func:`match_far_field` checks site by site.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import structlog
from scipy.spatial import cKDTree

from tblocality.modules.lattice.configuration import (
    Configuration,
    LatticeError,
    minimum_image,
)

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "ConfigurationMismatchError",
    "DefectEdit",
    "Interstitial",
    "Substitution",
    "Vacancy",
    "apply_point_defect",
    "distance_to_defect",
    "far_field_mask",
    "match_far_field",
]

logger = structlog.get_logger()

# Smallest recorded defect radius (a ball of radius 0+)
_MIN_RADIUS = 1e-9

# Positions closer than this are the same site
_MATCH_TOL = 1e-8


class ConfigurationMismatchError(LatticeError):
    """Raised when defect and reference configurations disagree in the far field."""


@dataclass(frozen=True)
class Vacancy:
    """Remove the site with the given index."""

    site: int


@dataclass(frozen=True)
class Interstitial:
    """Insert a new site at ``position``."""

    position: tuple[float, ...]
    species: str = "A"


@dataclass(frozen=True)
class Substitution:
    """Change the species label of a site."""

    site: int
    species: str


DefectEdit = Vacancy | Interstitial | Substitution


def _edit_position(cfg: Configuration, edit: DefectEdit) -> NDArray[np.float64]:
    if isinstance(edit, Interstitial):
        pos = np.asarray(edit.position, dtype=float).reshape(-1)
        if pos.shape != (cfg.dim,):
            raise LatticeError(
                f"Interstitial position has dimension {pos.size}, expected {cfg.dim}"
            )
        return pos
    if not 0 <= edit.site < cfg.n_sites:
        raise LatticeError(f"Site index {edit.site} out of range [0, {cfg.n_sites})")
    return np.asarray(cfg.sites[edit.site])


def _offsets(cfg: Configuration, points: NDArray[np.float64], center: NDArray[np.float64]) -> NDArray[np.float64]:
    diff = points - center
    supercell = cfg.supercell
    if supercell is not None:
        diff = minimum_image(diff, supercell)
    return diff


def default_center(cfg: Configuration) -> NDArray[np.float64]:
    """Midpoint of the bounding box of the reference sites."""
    return np.asarray(0.5 * (cfg.sites.min(axis=0) + cfg.sites.max(axis=0)))


def apply_point_defect(
    cfg: Configuration,
    edits: DefectEdit | Sequence[DefectEdit],
    *,
    center: ArrayLike | None = None,
    max_radius: float | None = None,
) -> Configuration:
    """Apply point-defect edits to a reference configuration.

    Site indices in ``edits`` refer to ``cfg``. Substitutions are applied
    first, then vacancies are removed, then interstitials appended.

    Args:
        cfg: Reference configuration.
        edits: One edit or a sequence of edits.
        center: Center of the defect ball; defaults to the bounding-box midpoint.
        max_radius: Declared R_def bound; edits beyond it are rejected.

    Returns:
        Defect configuration with ``defect_radius`` set to the smallest ball
        around ``center`` containing all edits.

    Raises:
        LatticeError: If an edit is invalid or lies outside ``max_radius``.
    """
    edit_list: list[DefectEdit] = [edits] if isinstance(edits, (Vacancy, Interstitial, Substitution)) else list(edits)
    if not edit_list:
        raise LatticeError("No defect edits given")

    origin = default_center(cfg) if center is None else np.asarray(center, dtype=float).reshape(-1)
    positions = np.asarray([_edit_position(cfg, e) for e in edit_list])
    radius = float(np.linalg.norm(_offsets(cfg, positions, origin), axis=-1).max())
    if max_radius is not None and radius > max_radius:
        raise LatticeError(
            f"Defect edit at distance {radius:.6g} lies outside R_def={max_radius:.6g}"
        )

    species = list(cfg.species)
    removed: set[int] = set()
    for edit in edit_list:
        if isinstance(edit, Substitution):
            species[edit.site] = edit.species
        elif isinstance(edit, Vacancy):
            if edit.site in removed:
                raise LatticeError(f"Site {edit.site} removed twice")
            removed.add(edit.site)

    keep = [i for i in range(cfg.n_sites) if i not in removed]
    sites = [cfg.sites[i] for i in keep]
    labels = [species[i] for i in keep]
    for edit in edit_list:
        if isinstance(edit, Interstitial):
            sites.append(np.asarray(edit.position, dtype=float).reshape(-1))
            labels.append(edit.species)

    if not sites:
        raise LatticeError("Defect edits removed every site")

    result = Configuration(
        sites=np.asarray(sites),
        species=tuple(labels),
        cell=cfg.cell,
        periodic=cfg.periodic,
        defect_radius=max(radius, _MIN_RADIUS),
        defect_center=origin,
    )
    logger.debug(
        "point_defect_applied",
        edits=len(edit_list),
        n_sites=result.n_sites,
        defect_radius=result.defect_radius,
    )
    return result


def distance_to_defect(cfg: Configuration, points: ArrayLike | None = None) -> NDArray[np.float64]:
    """Distance of sites (or given points) from the defect center.

    Raises:
        LatticeError: If the configuration carries no defect metadata.
    """
    if cfg.defect_center is None:
        raise LatticeError("Configuration has no defect center")
    pts = cfg.sites if points is None else np.asarray(points, dtype=float).reshape(-1, cfg.dim)
    return np.asarray(np.linalg.norm(_offsets(cfg, pts, cfg.defect_center), axis=-1))


def far_field_mask(cfg: Configuration, points: ArrayLike | None = None) -> NDArray[np.bool_]:
    """True for sites (or points) strictly outside the defect ball."""
    if cfg.defect_radius is None:
        raise LatticeError("Configuration has no defect radius")
    return np.asarray(distance_to_defect(cfg, points) > cfg.defect_radius + _MATCH_TOL)


def match_far_field(defect: Configuration, reference: Configuration) -> dict[int, int]:
    """Map far-field defect sites to the reference sites they coincide with.

    Args:
        defect: Configuration carrying defect metadata.
        reference: Defect-free reference configuration.

    Returns:
        Mapping from defect site index to reference site index, covering every
        site outside the defect ball.

    Raises:
        ConfigurationMismatchError: If either configuration has a far-field
            site without a counterpart in the other, or species differ.
    """
    outside_def = np.flatnonzero(far_field_mask(defect))
    outside_ref = np.flatnonzero(far_field_mask(defect, reference.sites))

    tree = cKDTree(reference.sites)
    dist, idx = tree.query(defect.sites[outside_def], k=1)
    mapping: dict[int, int] = {}
    for site, d, ref in zip(outside_def, dist, idx, strict=True):
        if d > _MATCH_TOL:
            raise ConfigurationMismatchError(
                f"Defect site {site} has no reference counterpart (nearest {d:.3e})"
            )
        if defect.species[site] != reference.species[ref]:
            raise ConfigurationMismatchError(
                f"Species mismatch at far-field site {site}: "
                f"{defect.species[site]} vs {reference.species[ref]}"
            )
        mapping[int(site)] = int(ref)

    missing = set(outside_ref.tolist()) - set(mapping.values())
    if missing:
        raise ConfigurationMismatchError(
            f"Reference sites {sorted(missing)[:5]} missing outside the defect ball"
        )
    return mapping
