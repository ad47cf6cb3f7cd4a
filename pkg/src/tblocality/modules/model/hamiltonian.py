"""Assembly of 𝓗(u; ρ) = 𝓗^L(u) + 𝓗^NL(ρ) and its geometric derivatives.

Rows are indexed by ``site * n_orbitals + orbital``. The linear part carries
the hopping blocks T_ab h(r_lk) and the species energies; the nonlinear part
is v(ρ(l)) on every orbital of site l.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
import structlog

from tblocality.modules.lattice import (
    Configuration,
    Displacement,
    as_displacement_array,
    pair_distances,
)
from tblocality.modules.model.hopping import ModelError
from tblocality.modules.model.images import pair_images

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from tblocality.modules.model.tight_binding import TightBindingModel

__all__ = [
    "GeometryError",
    "Hamiltonian",
    "assemble",
    "gershgorin_interval",
    "hamiltonian_derivative",
    "hamiltonian_second_derivative",
    "linear_hamiltonian",
    "spectral_bound_estimate",
]

logger = structlog.get_logger()

# Slack on the density range [0, N_b]
_RHO_TOL = 1e-10


class GeometryError(ModelError):
    """Raised when displaced sites coincide."""


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Dense real symmetric tight-binding Hamiltonian.

    Attributes:
        matrix: Matrix of size n*N_b.
        n_sites: Number of sites n.
        n_orbitals: Orbitals per site N_b.
    """

    matrix: NDArray[np.float64]
    n_sites: int
    n_orbitals: int

    def __post_init__(self) -> None:
        self.matrix.setflags(write=False)

    @property
    def size(self) -> int:
        """Matrix dimension n*N_b."""
        return self.n_sites * self.n_orbitals

    def index(self, site: int, orbital: int = 0) -> int:
        """Row index of (site, orbital)."""
        if not 0 <= site < self.n_sites or not 0 <= orbital < self.n_orbitals:
            raise ModelError(f"Index ({site}, {orbital}) out of range")
        return site * self.n_orbitals + orbital

    def site_slice(self, site: int) -> slice:
        """Rows belonging to ``site``."""
        start = self.index(site)
        return slice(start, start + self.n_orbitals)

    def fingerprint(self) -> str:
        """Content hash used to tie spectral data to this matrix."""
        return hashlib.sha256(np.ascontiguousarray(self.matrix).tobytes()).hexdigest()[:16]


def _check_geometry(cfg: Configuration, u: NDArray[np.float64]) -> None:
    if cfg.n_sites < 2:
        return
    dist = pair_distances(cfg, u)
    off = ~np.eye(cfg.n_sites, dtype=bool)
    if float(dist[off].min()) <= 1e-12:
        raise GeometryError("Displaced sites coincide (noninterpenetration constant 0)")


def _site_hopping(
    cfg: Configuration, u: ArrayLike | Displacement | None, model: TightBindingModel
) -> NDArray[np.float64]:
    """Site-level matrix Σ_γ h(|r_lk + Lγ|)."""
    images = pair_images(cfg, u, model.hopping.cutoff)
    site = np.zeros((cfg.n_sites, cfg.n_sites))
    np.add.at(site, (images.rows, images.cols), model.hopping.value(images.distances))
    return 0.5 * (site + site.T)


def _expand(site_matrix: NDArray[np.float64], model: TightBindingModel) -> NDArray[np.float64]:
    return np.kron(site_matrix, model.hopping.coupling_matrix())


def linear_hamiltonian(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    model: TightBindingModel,
) -> NDArray[np.float64]:
    """𝓗^L(u): hopping blocks plus species energies."""
    values = as_displacement_array(cfg, u)
    _check_geometry(cfg, values)
    matrix = _expand(_site_hopping(cfg, values, model), model)
    eps = model.onsite.site_energies(cfg.species)
    matrix[np.diag_indices_from(matrix)] += np.repeat(eps, model.n_orbitals)
    return matrix


def assemble(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    rho: ArrayLike,
    model: TightBindingModel,
) -> Hamiltonian:
    """Assemble 𝓗(u; ρ).

    Args:
        cfg: Reference configuration.
        u: Displacement (None for u = 0).
        rho: Per-site density in [0, N_b].
        model: Hopping and on-site models.

    Returns:
        Exactly symmetric Hamiltonian.

    Raises:
        ModelError: If ρ is out of range or has the wrong length.
        GeometryError: If displaced sites coincide.
    """
    rho = np.asarray(rho, dtype=float).reshape(-1)
    n_b = model.n_orbitals
    if rho.shape != (cfg.n_sites,):
        raise ModelError(f"Density has {rho.size} entries for {cfg.n_sites} sites")
    if rho.min() < -_RHO_TOL or rho.max() > n_b + _RHO_TOL:
        raise ModelError(
            f"Density outside [0, {n_b}]: min={rho.min():.3e}, max={rho.max():.3e}"
        )
    matrix = linear_hamiltonian(cfg, u, model)
    matrix[np.diag_indices_from(matrix)] += np.repeat(model.onsite.value(rho), n_b)
    matrix = 0.5 * (matrix + matrix.T)
    return Hamiltonian(matrix=matrix, n_sites=cfg.n_sites, n_orbitals=n_b)


def _check_site(cfg: Configuration, site: int, direction: int) -> None:
    if not 0 <= site < cfg.n_sites:
        raise ModelError(f"Site {site} out of range [0, {cfg.n_sites})")
    if not 0 <= direction < cfg.dim:
        raise ModelError(f"Direction {direction} out of range [0, {cfg.dim})")


def hamiltonian_derivative(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    model: TightBindingModel,
    m: int,
    i: int,
) -> NDArray[np.float64]:
    """∂𝓗^L/∂[u(m)]_i.

    Nonzero only in the row and column blocks of site ``m``.

    Raises:
        ModelError: If ``m`` or ``i`` is out of range.
    """
    _check_site(cfg, m, i)
    images = pair_images(cfg, u, model.hopping.cutoff)
    sel = (images.rows == m) & images.off_site
    r = images.distances[sel]
    grad = model.hopping.derivative(r) * images.vectors[sel, i] / r

    site = np.zeros((cfg.n_sites, cfg.n_sites))
    np.add.at(site, (np.full(grad.shape, m), images.cols[sel]), grad)
    site = site + site.T
    return _expand(site, model)


def _hessian_block(
    model: TightBindingModel, vectors: NDArray[np.float64], r: NDArray[np.float64], i: int, j: int
) -> NDArray[np.float64]:
    """Hessian entry ∂_i ∂_j h(|ξ|) for each row of ``vectors``."""
    hp = model.hopping.derivative(r)
    hpp = model.hopping.second_derivative(r)
    xi_i = vectors[:, i]
    xi_j = vectors[:, j]
    delta = 1.0 if i == j else 0.0
    return hpp * xi_i * xi_j / r**2 + hp * (delta / r - xi_i * xi_j / r**3)


def hamiltonian_second_derivative(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    model: TightBindingModel,
    m: int,
    i: int,
    n: int,
    j: int,
) -> NDArray[np.float64]:
    """∂²𝓗^L/∂[u(m)]_i ∂[u(n)]_j.

    Raises:
        ModelError: If a site or direction is out of range.
    """
    _check_site(cfg, m, i)
    _check_site(cfg, n, j)
    images = pair_images(cfg, u, model.hopping.cutoff)
    site = np.zeros((cfg.n_sites, cfg.n_sites))
    if m == n:
        sel = (images.rows == m) & images.off_site
        block = _hessian_block(model, images.vectors[sel], images.distances[sel], i, j)
        np.add.at(site, (np.full(block.shape, m), images.cols[sel]), block)
    else:
        sel = (images.rows == m) & (images.cols == n)
        block = _hessian_block(model, images.vectors[sel], images.distances[sel], i, j)
        site[m, n] = -float(np.sum(block))
    site = site + site.T
    return _expand(site, model)


def gershgorin_interval(h: Hamiltonian) -> tuple[float, float]:
    """Interval containing every Gershgorin disc of ``h``."""
    diag = np.diag(h.matrix)
    radius = np.sum(np.abs(h.matrix), axis=1) - np.abs(diag)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def spectral_bound_estimate(
    cfg: Configuration,
    u: Displacement | ArrayLike | None,
    model: TightBindingModel,
) -> float:
    """Diagnostic bound ‖v‖_∞ + max |ε| + max row sum of |h|."""
    hopping = np.abs(_expand(_site_hopping(cfg, u, model), model))
    eps = np.abs(model.onsite.site_energies(cfg.species))
    return model.onsite.sup_norms()[0] + float(eps.max(initial=0.0)) + float(hopping.sum(axis=1).max())
