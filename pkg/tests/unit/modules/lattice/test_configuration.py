"""Tests for configurations, displacements and pair geometry."""

from __future__ import annotations

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tblocality.modules.lattice import (
    Configuration,
    Displacement,
    LatticeCell,
    LatticeError,
    UndefinedQuantityError,
    as_displacement_array,
    build_chain,
    build_multilattice,
    noninterpenetration_constant,
    pair_distances,
)


class TestLatticeCell:
    """Tests for LatticeCell."""

    def test_rejects_singular_matrix(self) -> None:
        """Should reject a lattice matrix with zero determinant."""
        with pytest.raises(LatticeError, match="singular"):
            LatticeCell(np.array([[1.0, 2.0], [2.0, 4.0]]), np.zeros((1, 2)), (2, 2))

    def test_rejects_wrong_repeat_count(self) -> None:
        """Should need one repeat count per lattice vector."""
        with pytest.raises(LatticeError, match="repeat counts"):
            LatticeCell(np.eye(2), np.zeros((1, 2)), (3,))

    def test_reciprocal_is_dual_basis(self) -> None:
        """Reciprocal vectors should satisfy Aᵀ B = 2π I."""
        cell = LatticeCell(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros((1, 2)), (1, 1))
        assert_allclose(cell.matrix.T @ cell.reciprocal(), 2 * np.pi * np.eye(2), atol=1e-12)

    def test_cell_indices_are_row_major(self) -> None:
        """Cell coordinates should vary fastest along the last axis."""
        cell = LatticeCell(np.eye(2), np.zeros((1, 2)), (2, 3))
        indices = cell.cell_indices()
        assert indices[:4] == [(0, 0), (0, 1), (0, 2), (1, 0)]
        assert len(indices) == 6


class TestConfiguration:
    """Tests for Configuration validation."""

    def test_rejects_coincident_sites(self) -> None:
        """Two sites at the same position are not a configuration."""
        with pytest.raises(LatticeError, match="coincident"):
            Configuration(sites=np.array([[0.0], [0.0]]), species=("A", "A"))

    def test_rejects_species_count_mismatch(self) -> None:
        """Should need one species label per site."""
        with pytest.raises(LatticeError, match="species"):
            Configuration(sites=np.array([[0.0], [1.0]]), species=("A",))

    def test_periodic_needs_cell(self) -> None:
        """Periodic configurations need lattice metadata."""
        with pytest.raises(LatticeError, match="lattice cell"):
            Configuration(sites=np.array([[0.0]]), species=("A",), periodic=True)

    def test_sites_are_read_only(self) -> None:
        """Stored sites should not be writable."""
        cfg = build_chain(3, 1.0)
        with pytest.raises(ValueError, match="read-only"):
            cfg.sites[0, 0] = 5.0

    def test_with_species_keeps_geometry(self) -> None:
        """Relabelling should keep sites and metadata."""
        cfg = build_chain(3, 1.0)
        relabelled = cfg.with_species(["B", "A", "B"])
        assert relabelled.species == ("B", "A", "B")
        assert_allclose(relabelled.sites, cfg.sites)
        assert relabelled.cell is cfg.cell


class TestBuilders:
    """Tests for chain and multilattice builders."""

    def test_chain_positions(self) -> None:
        """Chain sites should sit at 0, a, 2a, ..."""
        cfg = build_chain(4, 1.5)
        assert cfg.n_sites == 4
        assert cfg.dim == 1
        assert_allclose(cfg.sites[:, 0], [0.0, 1.5, 3.0, 4.5])

    def test_chain_rejects_nonpositive_spacing(self) -> None:
        """Should reject a <= 0."""
        with pytest.raises(LatticeError):
            build_chain(4, 0.0)

    def test_multilattice_is_cell_major(self) -> None:
        """Sites should be ordered by cell, then basis offset."""
        cfg = build_multilattice([[2.0]], [[0.0], [1.0]], [3], species=["A", "B"])
        assert_allclose(cfg.sites[:, 0], [0.0, 1.0, 2.0, 3.0, 4.0, 5.0])
        assert cfg.species == ("A", "B") * 3

    def test_multilattice_square_lattice(self) -> None:
        """A 3x3 square lattice should have 9 sites with unit nearest distance."""
        cfg = build_multilattice(np.eye(2), [[0.0, 0.0]], [3, 3])
        dist = pair_distances(cfg)
        assert cfg.n_sites == 9
        assert dist[~np.eye(9, dtype=bool)].min() == pytest.approx(1.0)

    def test_periodic_distances_use_minimum_image(self) -> None:
        """The two chain ends should be neighbours in a periodic ring."""
        cfg = build_multilattice([[1.0]], [[0.0]], [5], periodic=True)
        assert pair_distances(cfg)[0, 4] == pytest.approx(1.0)


class TestDisplacement:
    """Tests for Displacement and noninterpenetration."""

    def test_shape_must_match_host(self) -> None:
        """Should reject displacements of the wrong shape."""
        cfg = build_chain(3, 1.0)
        with pytest.raises(LatticeError, match="does not match"):
            Displacement(np.zeros((2, 1)), cfg)

    def test_one_dimensional_values_are_promoted(self) -> None:
        """A flat array should be accepted for a 1D host."""
        cfg = build_chain(3, 1.0)
        u = Displacement(np.array([0.0, 0.1, 0.0]), cfg)
        assert u.values.shape == (3, 1)

    def test_none_means_zero(self) -> None:
        """as_displacement_array(None) should be zero."""
        cfg = build_chain(3, 1.0)
        assert_allclose(as_displacement_array(cfg, None), np.zeros((3, 1)))

    def test_reference_constant_is_one(self) -> None:
        """The undisplaced configuration has constant exactly 1."""
        cfg = build_chain(5, 1.0)
        assert noninterpenetration_constant(cfg) == pytest.approx(1.0)

    def test_compression_lowers_constant(self) -> None:
        """Moving two neighbours together should give their distance ratio."""
        cfg = build_chain(3, 1.0)
        u = np.array([[0.0], [-0.25], [0.0]])
        assert noninterpenetration_constant(cfg, u) == pytest.approx(0.75)

    def test_single_site_constant_is_undefined(self) -> None:
        """A single site has no pairs."""
        with pytest.raises(UndefinedQuantityError):
            noninterpenetration_constant(build_chain(1, 1.0))

    def test_validate_rejects_collapse(self) -> None:
        """validate() should fail below the requested bound."""
        cfg = build_chain(3, 1.0)
        u = Displacement(np.array([[0.0], [-0.6], [0.0]]), cfg)
        with pytest.raises(LatticeError, match="Noninterpenetration"):
            u.validate(minimum=0.5)
