"""Tests for Bloch matrices, band structures and supercell folding."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tblocality.modules.bloch import (
    BlochError,
    ReferenceCrystal,
    band_continuity,
    band_gap,
    band_structure,
    basis_density,
    bloch_hamiltonian,
    commensurate_grid,
    fractional_grid,
    reference_crystal,
    supercell_consistency,
)
from tblocality.modules.lattice import LatticeCell
from tblocality.modules.model import TightBindingModel
from tests.conftest import ionic_model, nn_hopping


def _ionic_cell() -> LatticeCell:
    return LatticeCell(np.array([[2.0]]), np.array([[0.0], [1.0]]), (1,))


@pytest.fixture
def ionic_crystal() -> ReferenceCrystal:
    """Ionic crystal at a fixed, translation-invariant density."""
    return ReferenceCrystal(
        cell=_ionic_cell(),
        species=("A", "B"),
        model=ionic_model(),
        rho=np.array([0.5, 0.5]),
    )


class TestBasisDensity:
    """Tests for basis_density."""

    def test_averages_equivalent_sites(self) -> None:
        """A tiled supercell density reduces to one value per basis site."""
        assert_allclose(basis_density([0.3, 0.7, 0.3, 0.7], 2), [0.3, 0.7])

    def test_rejects_broken_invariance(self) -> None:
        """Equivalent sites must carry the same density."""
        with pytest.raises(BlochError, match="translation invariant"):
            basis_density([0.3, 0.7, 0.31, 0.7], 2)

    def test_rejects_wrong_length(self) -> None:
        """The length must be a multiple of the basis size."""
        with pytest.raises(BlochError, match="does not fit"):
            basis_density([0.3, 0.7, 0.3], 2)

    def test_crystal_checks_species_count(self) -> None:
        """One species label per basis site."""
        with pytest.raises(BlochError, match="species"):
            ReferenceCrystal(cell=_ionic_cell(), species=("A",), model=ionic_model(), rho=np.array([0.5, 0.5]))


class TestBlochHamiltonian:
    """Tests for bloch_hamiltonian."""

    def test_single_site_chain_band(self) -> None:
        """A unit chain with h(1) = -1 has the band -2 cos ξ."""
        crystal = ReferenceCrystal(
            cell=LatticeCell(np.array([[1.0]]), np.zeros((1, 1)), (1,)),
            species=("A",),
            model=TightBindingModel(hopping=nn_hopping()),
            rho=np.array([0.5]),
        )
        for xi in [0.0, 0.7, math.pi]:
            assert bloch_hamiltonian(crystal, [xi]).eigenvalues()[0] == pytest.approx(-2.0 * math.cos(xi))

    def test_is_hermitian(self, ionic_crystal: ReferenceCrystal) -> None:
        """H_ξ is Hermitian at a generic wavevector."""
        bloch = bloch_hamiltonian(ionic_crystal, [0.37])
        assert bloch.hermiticity_error < 1e-14
        assert bloch.matrix.shape == (2, 2)

    def test_rejects_wrong_dimension(self, ionic_crystal: ReferenceCrystal) -> None:
        """ξ must have d components."""
        with pytest.raises(BlochError, match="components"):
            bloch_hamiltonian(ionic_crystal, [0.1, 0.2])


class TestBandStructure:
    """Tests for band structures and gaps."""

    def test_ionic_gap(self, ionic_crystal: ReferenceCrystal) -> None:
        """At half filling the ionic gap is twice the species splitting."""
        bands = band_structure(ionic_crystal, 16)
        assert bands.gap == pytest.approx(2.0, abs=1e-12)
        assert bands.lower == pytest.approx(-1.0, abs=1e-12)
        assert bands.upper == pytest.approx(1.0, abs=1e-12)
        assert bands.bands.shape == (16, 2)

    def test_rejects_coarse_grid(self, ionic_crystal: ReferenceCrystal) -> None:
        """Grids below eight points per axis are refused."""
        with pytest.raises(BlochError, match="at least"):
            band_structure(ionic_crystal, 7)

    def test_rows_name_bands(self, ionic_crystal: ReferenceCrystal) -> None:
        """Each row holds ξ then λ_1..λ_n."""
        rows = band_structure(ionic_crystal, 8).rows()
        assert len(rows) == 8
        assert list(rows[0]) == ["xi_0", "lambda_1", "lambda_2"]

    def test_bands_are_continuous(self, ionic_crystal: ReferenceCrystal) -> None:
        """Adjacent jumps shrink when the grid is doubled."""
        assert band_continuity(ionic_crystal, 8).is_continuous

    def test_band_gap_closes_on_crossing(self) -> None:
        """A band that crosses μ gives gap 0."""
        bands = np.array([[-1.0, 0.5], [0.2, 1.0]])
        assert band_gap(bands, 0.0)[0] == 0.0

    def test_band_gap_between_bands(self) -> None:
        """Separated bands give upper minus lower."""
        bands = np.array([[-1.0, 1.0], [-0.5, 0.5]])
        gap, lower, upper = band_gap(bands, 0.0)
        assert gap == pytest.approx(1.0)
        assert (lower, upper) == (-0.5, 0.5)


class TestGrids:
    """Tests for wavevector grids and supercell folding."""

    def test_fractional_grid_is_centered(self) -> None:
        """Points run from -1/2 in steps of 1/grid."""
        grid = fractional_grid(4, 1)
        assert_allclose(grid[:, 0], [-0.5, -0.25, 0.0, 0.25])

    def test_grid_is_row_major(self) -> None:
        """The last axis varies fastest."""
        grid = commensurate_grid(2, 2)
        assert_allclose(grid, [[0.0, 0.0], [0.0, 0.5], [0.5, 0.0], [0.5, 0.5]])

    def test_supercell_spectrum_folds(self) -> None:
        """Commensurate Bloch levels reproduce the periodic supercell spectrum."""
        crystal = ReferenceCrystal(
            cell=_ionic_cell(),
            species=("A", "B"),
            model=ionic_model(),
            rho=np.array([0.3, 0.7]),
        )
        assert supercell_consistency(crystal, 6) <= 1e-9

    def test_reference_density_is_ionic(self) -> None:
        """The self-consistent reference puts more charge on B."""
        crystal = reference_crystal(_ionic_cell(), ["A", "B"], ionic_model(), repeats=4)
        assert crystal.rho[1] > crystal.rho[0]
        assert crystal.rho.sum() == pytest.approx(1.0, abs=1e-10)
