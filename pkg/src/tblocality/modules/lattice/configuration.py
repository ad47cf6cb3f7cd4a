"""Atomic configurations, reference multi-lattices and displacements.

Sites are stored as an ``(n, d)`` array of reference positions. Periodic
configurations use the minimum-image convention over the supercell spanned
by the lattice matrix times the repeat counts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
import structlog
from scipy.spatial.distance import pdist

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "Configuration",
    "Displacement",
    "LatticeCell",
    "LatticeError",
    "UndefinedQuantityError",
    "as_displacement_array",
    "build_chain",
    "build_multilattice",
    "noninterpenetration_constant",
    "pair_distances",
    "pair_vectors",
]

logger = structlog.get_logger()

# Sites closer than this are treated as coincident
_COINCIDENCE_TOL = 1e-12


class LatticeError(ValueError):
    """Raised when a configuration or displacement is invalid."""


class UndefinedQuantityError(LatticeError):
    """Raised when a geometric quantity is undefined for the configuration."""


@dataclass(frozen=True, eq=False)
class LatticeCell:
    """Reference multi-lattice metadata.

    Attributes:
        matrix: Lattice matrix with lattice vectors as columns, shape (d, d).
        basis: Site offsets of the unit cell, shape (n_basis, d).
        repeats: Number of cells along each lattice vector.
    """

    matrix: NDArray[np.float64]
    basis: NDArray[np.float64]
    repeats: tuple[int, ...]

    def __post_init__(self) -> None:
        matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        basis = np.asarray(self.basis, dtype=float).reshape(-1, matrix.shape[0])
        if matrix.shape[0] != matrix.shape[1]:
            raise LatticeError(f"Lattice matrix must be square, got {matrix.shape}")
        if len(self.repeats) != matrix.shape[0]:
            raise LatticeError(
                f"Expected {matrix.shape[0]} repeat counts, got {len(self.repeats)}"
            )
        if any(r < 1 for r in self.repeats):
            raise LatticeError(f"Repeat counts must be >= 1, got {self.repeats}")
        if abs(np.linalg.det(matrix)) < 1e-12:
            raise LatticeError("Lattice matrix is singular")
        matrix.setflags(write=False)
        basis.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "repeats", tuple(int(r) for r in self.repeats))

    @property
    def dim(self) -> int:
        """Spatial dimension."""
        return int(self.matrix.shape[0])

    @property
    def n_basis(self) -> int:
        """Number of sites per unit cell."""
        return int(self.basis.shape[0])

    @property
    def supercell(self) -> NDArray[np.float64]:
        """Supercell matrix (lattice matrix scaled by the repeat counts)."""
        return self.matrix * np.asarray(self.repeats, dtype=float)[np.newaxis, :]

    def cell_indices(self) -> list[tuple[int, ...]]:
        """Integer cell coordinates in row-major order."""
        return list(itertools.product(*(range(r) for r in self.repeats)))

    def reciprocal(self) -> NDArray[np.float64]:
        """Reciprocal lattice matrix 2π A^{-T} (columns are reciprocal vectors)."""
        return 2.0 * np.pi * np.linalg.inv(self.matrix).T


@dataclass(frozen=True, eq=False)
class Configuration:
    """Finite set of atomic sites with species labels.

    Attributes:
        sites: Reference positions, shape (n, d).
        species: Per-site species labels.
        cell: Reference lattice metadata, if the sites derive from one.
        periodic: Whether distances use the minimum image over ``cell``.
        defect_radius: Radius R_def of the ball containing all point-defect edits.
        defect_center: Center of the defect ball.
    """

    sites: NDArray[np.float64]
    species: tuple[str, ...]
    cell: LatticeCell | None = None
    periodic: bool = False
    defect_radius: float | None = None
    defect_center: NDArray[np.float64] | None = field(default=None)

    def __post_init__(self) -> None:
        sites = np.asarray(self.sites, dtype=float)
        if sites.ndim == 1:
            sites = sites[:, np.newaxis]
        if sites.ndim != 2 or sites.shape[0] == 0:
            raise LatticeError("Configuration needs at least one site")
        if sites.shape[1] not in (1, 2, 3):
            raise LatticeError(f"Unsupported dimension d={sites.shape[1]}")
        if len(self.species) != sites.shape[0]:
            raise LatticeError(
                f"Got {len(self.species)} species labels for {sites.shape[0]} sites"
            )
        if self.periodic and self.cell is None:
            raise LatticeError("Periodic configurations need a lattice cell")
        if self.cell is not None and self.cell.dim != sites.shape[1]:
            raise LatticeError("Lattice cell dimension does not match sites")
        sites.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "species", tuple(self.species))
        if self.defect_center is not None:
            center = np.asarray(self.defect_center, dtype=float).reshape(-1)
            center.setflags(write=False)
            object.__setattr__(self, "defect_center", center)

        if sites.shape[0] > 1:
            if self.periodic:
                dist = pair_distances(self)
                min_dist = float(dist[~np.eye(len(dist), dtype=bool)].min())
            else:
                min_dist = float(pdist(sites).min())
            if min_dist <= _COINCIDENCE_TOL:
                raise LatticeError("Configuration contains coincident sites")

    @property
    def n_sites(self) -> int:
        """Number of sites."""
        return int(self.sites.shape[0])

    @property
    def dim(self) -> int:
        """Spatial dimension d."""
        return int(self.sites.shape[1])

    @property
    def supercell(self) -> NDArray[np.float64] | None:
        """Periodic supercell matrix, or None for finite clusters."""
        if not self.periodic or self.cell is None:
            return None
        return self.cell.supercell

    def with_species(self, species: Sequence[str]) -> Configuration:
        """Return a copy with different species labels."""
        return Configuration(
            sites=self.sites,
            species=tuple(species),
            cell=self.cell,
            periodic=self.periodic,
            defect_radius=self.defect_radius,
            defect_center=self.defect_center,
        )


@dataclass(frozen=True, eq=False)
class Displacement:
    """Per-site displacement field u on a host configuration.

    Attributes:
        values: Displacements, shape (n, d).
        host: Configuration the displacement acts on.
    """

    values: NDArray[np.float64]
    host: Configuration

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim == 1 and self.host.dim == 1:
            values = values[:, np.newaxis]
        if values.shape != self.host.sites.shape:
            raise LatticeError(
                f"Displacement shape {values.shape} does not match "
                f"{self.host.sites.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, host: Configuration) -> Displacement:
        """Zero displacement on ``host``."""
        return cls(np.zeros_like(host.sites), host)

    def shifted(self, delta: ArrayLike) -> Displacement:
        """Return u + delta."""
        return Displacement(self.values + np.asarray(delta, dtype=float), self.host)

    def validate(self, minimum: float = 0.0) -> float:
        """Check the noninterpenetration condition.

        Args:
            minimum: Required lower bound for the noninterpenetration constant.

        Returns:
            The noninterpenetration constant.

        Raises:
            LatticeError: If the constant does not exceed ``minimum``.
        """
        m = noninterpenetration_constant(self.host, self)
        if m <= minimum:
            raise LatticeError(
                f"Noninterpenetration constant {m:.3e} not above {minimum:.3e}"
            )
        return m


def as_displacement_array(
    cfg: Configuration, u: Displacement | ArrayLike | None
) -> NDArray[np.float64]:
    """Normalize a displacement argument to an ``(n, d)`` array.

    Raises:
        LatticeError: If the shape does not match the configuration.
    """
    if u is None:
        return np.zeros_like(cfg.sites)
    if isinstance(u, Displacement):
        return np.asarray(u.values)
    return np.asarray(Displacement(np.asarray(u, dtype=float), cfg).values)


def minimum_image(
    vectors: NDArray[np.float64], supercell: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Wrap difference vectors into the minimum-image cell."""
    frac = vectors @ np.linalg.inv(supercell).T
    frac -= np.rint(frac)
    return frac @ supercell.T


def pair_vectors(
    cfg: Configuration, u: Displacement | ArrayLike | None = None
) -> NDArray[np.float64]:
    """Displaced pair vectors r_lk = (l + u_l) - (k + u_k).

    Returns:
        Array of shape (n, n, d); minimum image applied for periodic systems.
    """
    pos = cfg.sites + as_displacement_array(cfg, u)
    diff = pos[:, np.newaxis, :] - pos[np.newaxis, :, :]
    supercell = cfg.supercell
    if supercell is not None:
        diff = minimum_image(diff, supercell)
    return diff


def pair_distances(
    cfg: Configuration, u: Displacement | ArrayLike | None = None
) -> NDArray[np.float64]:
    """Displaced pair distances r_lk(u), shape (n, n)."""
    return np.asarray(np.linalg.norm(pair_vectors(cfg, u), axis=-1))


def noninterpenetration_constant(
    cfg: Configuration, u: Displacement | ArrayLike | None = None
) -> float:
    """Minimum over pairs of r_lk(u) / |l - k|.

    Raises:
        UndefinedQuantityError: If the configuration has a single site.
    """
    if cfg.n_sites < 2:
        raise UndefinedQuantityError(
            "Noninterpenetration constant needs at least two sites"
        )
    reference = pair_distances(cfg)
    displaced = pair_distances(cfg, u)
    off = ~np.eye(cfg.n_sites, dtype=bool)
    return float(np.min(displaced[off] / reference[off]))


def build_chain(n: int, a: float, *, species: str = "A") -> Configuration:
    """Finite 1D chain with sites 0, a, ..., (n-1)a.

    Raises:
        LatticeError: If ``n`` or ``a`` is not positive.
    """
    if n < 1 or a <= 0:
        raise LatticeError(f"Chain needs n >= 1 and a > 0, got n={n}, a={a}")
    cell = LatticeCell(np.array([[a]]), np.zeros((1, 1)), (n,))
    return Configuration(
        sites=np.arange(n, dtype=float)[:, np.newaxis] * a,
        species=(species,) * n,
        cell=cell,
    )


def build_multilattice(
    matrix: ArrayLike,
    unit_cell: ArrayLike,
    repeats: Sequence[int],
    *,
    periodic: bool = False,
    species: Sequence[str] | None = None,
) -> Configuration:
    """Multi-lattice union of Γ + Aγ over the repeat box.

    Args:
        matrix: Lattice matrix A with lattice vectors as columns.
        unit_cell: Basis offsets Γ, shape (n_basis, d).
        repeats: Cells per lattice direction.
        periodic: Use minimum-image distances over the repeat box.
        species: Species label per basis site (defaults to "A").

    Returns:
        Configuration with cell-major site ordering (cell index, then basis).

    Raises:
        LatticeError: If A is singular or repeats are invalid.
    """
    cell = LatticeCell(np.asarray(matrix, dtype=float), np.asarray(unit_cell), tuple(repeats))
    labels = tuple(species) if species is not None else ("A",) * cell.n_basis
    if len(labels) != cell.n_basis:
        raise LatticeError(
            f"Got {len(labels)} species labels for {cell.n_basis} basis sites"
        )

    sites: list[NDArray[np.float64]] = []
    site_species: list[str] = []
    for gamma in cell.cell_indices():
        origin = cell.matrix @ np.asarray(gamma, dtype=float)
        for offset, label in zip(cell.basis, labels, strict=True):
            sites.append(origin + offset)
            site_species.append(label)

    cfg = Configuration(
        sites=np.asarray(sites),
        species=tuple(site_species),
        cell=cell,
        periodic=periodic,
    )
    logger.debug(
        "multilattice_built",
        n_sites=cfg.n_sites,
        n_basis=cell.n_basis,
        periodic=periodic,
    )
    return cfg
