"""Tests for ExperimentService dispatch."""

from __future__ import annotations

import pytest

from tblocality.infrastructure.config import ExperimentConfig, parse_config
from tblocality.modules.experiments import ExperimentError, ExperimentService
from tests.conftest import IONIC_CONFIG_TOML

REPULSIVE_CHAIN_TOML = """
[geometry]
n = 4

[model]
gamma0 = 2.0
repulsion_strength = 40.0

[thermodynamics]
beta = 5.0
"""


VACANCY_CHAIN_TOML = """
experiment = "defect-compare"

[geometry]
kind = "multilattice"
matrix = [[2.0]]
basis = [[0.0], [1.0]]
species = ["A", "B"]
repeats = [10]

[[geometry.defects]]
kind = "vacancy"
site = 10

[model]
r_cut = 1.5
species_energies = { A = 1.0, B = -1.0 }

[thermodynamics]
beta = "inf"
expect_gap = true

[options]
reference_size = 16
"""


def _ionic(experiment: str, *overrides: str) -> ExperimentConfig:
    return parse_config(IONIC_CONFIG_TOML, [f'experiment="{experiment}"', *overrides])


class TestExperimentService:
    """Tests for ExperimentService.run."""

    def test_selfcheck_passes(self) -> None:
        """Every numerical self-check on the ionic chain is within tolerance."""
        outcome = ExperimentService(_ionic("selfcheck")).run()
        failed = [c.as_dict() for c in outcome.checks if not c.passed]
        assert not failed
        assert outcome.results["n_failed"] == 0
        assert outcome.passed
        assert outcome.configuration is not None

    def test_locality_fits_gradients(self) -> None:
        """The locality sweep reports a decay fit and one row per pair."""
        outcome = ExperimentService(_ionic("locality")).run()
        assert outcome.results["order"] == 1
        assert outcome.results["fit"]["eta_hat"] > 0.0
        assert outcome.results["stability_margin"] > 0.0
        assert len(outcome.tables["locality"]) == 8 * 8

    def test_ct_reports_each_distance(self) -> None:
        """One clearance report and table per configured distance."""
        outcome = ExperimentService(_ionic("ct", "options.ct_distances=[0.5, 1.0]")).run()
        assert len(outcome.results["clearances"]) == 2
        assert set(outcome.tables) == {"ct-0", "ct-1"}

    def test_relax_reports_trajectory(self) -> None:
        """Relaxation tables hold the trajectory and per-site displacements."""
        config = parse_config(REPULSIVE_CHAIN_TOML, ['experiment="relax"', "options.relax_tol=1e-6"])
        outcome = ExperimentService(config).run()
        assert outcome.results["converged"]
        assert len(outcome.tables["displacement"]) == 4
        assert outcome.tables["displacement"][0]["r"] is None

    def test_defect_compare_needs_defects(self) -> None:
        """A defect comparison without defect edits is a configuration error."""
        with pytest.raises(ExperimentError, match="defects"):
            ExperimentService(_ionic("defect-compare")).run()

    def test_free_radius_needs_defect(self) -> None:
        """Relaxing a region around a defect needs a defect."""
        config = parse_config(REPULSIVE_CHAIN_TOML, ['experiment="relax"', "options.free_radius=2.0"])
        with pytest.raises(ExperimentError, match="free_radius"):
            ExperimentService(config).run()

    def test_rattle_is_seeded(self) -> None:
        """The same seed gives the same initial displacement."""
        config = _ionic("locality", "options.rattle=0.01", "seed=3")
        cfg = config.geometry.build()
        first = ExperimentService(config)._initial_u(cfg)
        second = ExperimentService(config)._initial_u(cfg)
        assert (first == second).all()
        assert first.any()

    @pytest.mark.slow
    def test_bands_checks_pass(self) -> None:
        """Band, folding and Bloch stability checks agree with the supercell."""
        config = _ionic(
            "bands",
            "options.grid=8",
            "options.supercell=4",
            "options.supercell_sweep=[2, 4]",
        )
        outcome = ExperimentService(config).run()
        failed = [c.as_dict() for c in outcome.checks if not c.passed]
        assert not failed
        assert outcome.results["bands"]["gap"] > 0.0
        assert set(outcome.results["supercell_consistency"]) == {"2", "4"}
        assert len(outcome.tables["bands"]) == 8

    @pytest.mark.slow
    def test_beta_limit_reports_each_beta(self) -> None:
        """The beta sweep relaxes once per β and tabulates the deviations."""
        config = parse_config(
            REPULSIVE_CHAIN_TOML,
            ['experiment="beta-limit"', "options.betas=[6.0, 2.0, 4.0]", "options.relax_tol=1e-9"],
        )
        outcome = ExperimentService(config).run()
        assert outcome.results["betas"] == [2.0, 4.0, 6.0]
        assert outcome.results["gapped"]
        assert outcome.results["reference"]["converged"]
        deviations = outcome.results["deviations"]
        assert deviations[0] > deviations[-1]
        assert [row["beta"] for row in outcome.tables["beta-limit"]] == [2.0, 4.0, 6.0]

    @pytest.mark.slow
    def test_defect_compare_grows_the_cluster(self) -> None:
        """The vacancy comparison is repeated on a larger cluster with the same level count."""
        outcome = ExperimentService(parse_config(VACANCY_CHAIN_TOML)).run()
        results = outcome.results
        assert results["far_field_sites"] > 0
        assert results["grown_size"] == 16
        assert results["grown_in_gap_count"] == results["in_gap_count"]
        assert results["in_gap_count_stable"] is True
        assert len(results["bins"]) == 3
        assert outcome.tables["defect-pairs"]
        assert outcome.configuration is not None
