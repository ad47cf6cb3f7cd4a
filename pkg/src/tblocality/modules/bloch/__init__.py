"""Bloch transform of the reference crystal: bands, gaps and 𝓛_ξ."""

from tblocality.modules.bloch.bands import (
    MIN_GRID,
    BandStructure,
    ContinuityCheck,
    band_continuity,
    band_gap,
    band_structure,
    commensurate_grid,
    fractional_grid,
    supercell_consistency,
    supercell_spectrum,
)
from tblocality.modules.bloch.crystal import (
    INVARIANCE_TOL,
    ReferenceCrystal,
    basis_density,
    reference_crystal,
)
from tblocality.modules.bloch.errors import BlochError
from tblocality.modules.bloch.hamiltonian import BlochMatrix, bloch_hamiltonian, image_vectors
from tblocality.modules.bloch.stability import (
    SupercellStability,
    bloch_stability,
    spectral_mismatch,
    supercell_stability,
)

__all__ = [
    "INVARIANCE_TOL",
    "MIN_GRID",
    "BandStructure",
    "BlochError",
    "BlochMatrix",
    "ContinuityCheck",
    "ReferenceCrystal",
    "SupercellStability",
    "band_continuity",
    "band_gap",
    "band_structure",
    "basis_density",
    "bloch_hamiltonian",
    "bloch_stability",
    "commensurate_grid",
    "fractional_grid",
    "image_vectors",
    "reference_crystal",
    "spectral_mismatch",
    "supercell_consistency",
    "supercell_spectrum",
    "supercell_stability",
]
