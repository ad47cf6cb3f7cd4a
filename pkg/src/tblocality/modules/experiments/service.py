"""Experiment orchestration for configured runs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog

from tblocality.modules.bloch import (
    band_continuity,
    band_structure,
    reference_crystal,
    supercell_consistency,
    supercell_spectrum,
    supercell_stability,
)
from tblocality.modules.experiments.selfcheck import (
    Check,
    fd_checks,
    stability_check,
    trace_checks,
    woodbury_checks,
)
from tblocality.modules.lattice import (
    StencilWeights,
    distance_to_defect,
    dump_configuration,
)
from tblocality.modules.locality import (
    FitError,
    ct_check,
    defect_comparison,
    fit_decay,
    locality_experiment,
)
from tblocality.modules.relax import RelaxParams, beta_limit_experiment, relax_geometry
from tblocality.modules.response import ResponseCalculator
from tblocality.modules.scf import TightBindingSystem
from tblocality.modules.spectral import spectral_gap

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import NDArray

    from tblocality.infrastructure.config import ExperimentConfig
    from tblocality.modules.lattice import Configuration
    from tblocality.modules.spectral import Observable

__all__ = [
    "ExperimentError",
    "ExperimentOutcome",
    "ExperimentService",
]

logger = structlog.get_logger()


class ExperimentError(Exception):
    """The configuration does not fit the requested experiment."""


@dataclass
class ExperimentOutcome:
    """Derived quantities, tables and checks of one run.

    Attributes:
        results: Scalar and small structured results for the summary.
        tables: CSV tables by name.
        checks: Measured errors against tolerances.
        configuration: Text dump of the configuration the run used.
    """

    results: dict[str, Any] = field(default_factory=dict)
    tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)
    configuration: str | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


class ExperimentService:
    """Builds systems from a validated config and runs the named experiment.

    Runs are deterministic given the config: the only randomness is the
    seeded rattle of the initial displacement and the seeded Woodbury check.
    """

    def __init__(self, config: ExperimentConfig, *, threads: int = 1) -> None:
        """Initialize the service.

        Args:
            config: Validated experiment configuration.
            threads: Worker count for parallel sections.
        """
        self.config = config
        self.threads = threads
        self._model = config.model.build()

    def run(self) -> ExperimentOutcome:
        """Dispatch to the configured experiment.

        Raises:
            ScfError, SpectralError, ModelError, LocalityError, BlochError,
            RelaxationError: Solver failures propagate to the caller.
        """
        handlers: dict[str, Callable[[], ExperimentOutcome]] = {
            "locality": self._locality,
            "ct": self._combes_thomas,
            "defect-compare": self._defect_compare,
            "bands": self._bands,
            "relax": self._relax,
            "beta-limit": self._beta_limit,
            "selfcheck": self._selfcheck,
        }
        kind = self.config.experiment.value
        logger.info("experiment_started", experiment=kind, threads=self.threads)
        outcome = handlers[kind]()
        logger.info("experiment_finished", experiment=kind, passed=outcome.passed)
        return outcome

    # Builders

    def _system(self, cfg: Configuration) -> TightBindingSystem:
        thermo, solver = self.config.thermodynamics, self.config.solver
        return TightBindingSystem(
            cfg,
            self._model,
            mu=thermo.mu,
            beta=thermo.beta,
            params=solver.params(),
            n_quad=solver.n_quad,
            margin=solver.margin,
        )

    def _initial_u(self, cfg: Configuration) -> NDArray[np.float64]:
        rattle = self.config.options.rattle
        if rattle == 0.0:
            return np.zeros_like(cfg.sites)
        rng = np.random.default_rng(self.config.seed)
        return np.asarray(rattle * rng.standard_normal(cfg.sites.shape))

    def _observable(self, system: TightBindingSystem) -> Observable:
        if self.config.options.observable == "density":
            return system.fermi
        return system.grand_potential

    def _free_mask(self, cfg: Configuration) -> NDArray[np.bool_] | None:
        radius = self.config.options.free_radius
        if radius is None:
            return None
        if cfg.defect_center is None:
            raise ExperimentError("options.free_radius needs a defect configuration")
        return np.asarray(distance_to_defect(cfg) <= radius)

    def _relax_params(self) -> RelaxParams:
        opts = self.config.options
        return RelaxParams(tol=opts.relax_tol, max_iter=opts.relax_max_iter, m_min=opts.m_min)

    # Experiments

    def _locality(self) -> ExperimentOutcome:
        cfg = self.config.geometry.build()
        system = self._system(cfg)
        state = system.solve(self._initial_u(cfg))
        opts = self.config.options
        calc = ResponseCalculator(state)
        result = locality_experiment(
            state,
            self._observable(system),
            opts.order,
            window=opts.window,
            threads=self.threads,
            calculator=calc,
        )
        return ExperimentOutcome(
            results={
                "order": result.order,
                "fit": result.fit.as_dict(),
                "gap": state.gap(),
                "stability_margin": calc.margin,
                "scf_iterations": state.density.iterations,
                "scf_residual": state.density.residual,
            },
            tables={"locality": result.rows()},
            configuration=dump_configuration(cfg),
        )

    def _combes_thomas(self) -> ExperimentOutcome:
        cfg = self.config.geometry.build()
        system = self._system(cfg)
        state = system.solve(self._initial_u(cfg))
        mu = self.config.thermodynamics.mu
        results: dict[str, Any] = {"gap": state.gap(), "clearances": []}
        tables: dict[str, list[dict[str, Any]]] = {}
        for index, distance in enumerate(self.config.options.ct_distances):
            report = ct_check(state.hamiltonian, cfg, state.u, complex(mu, distance), distance)
            results["clearances"].append(report.as_dict())
            tables[f"ct-{index}"] = report.rows()
        rates = [c["gamma_hat"] for c in results["clearances"]]
        results["rate_nondecreasing"] = all(a <= b for a, b in zip(rates, rates[1:], strict=False))
        return ExperimentOutcome(results=results, tables=tables, configuration=dump_configuration(cfg))

    def _defect_compare(self) -> ExperimentOutcome:
        geometry, opts = self.config.geometry, self.config.options
        if not geometry.defects:
            raise ExperimentError("defect-compare needs at least one geometry.defects entry")
        defect_cfg = geometry.build()
        reference_cfg = geometry.reference()
        defect_system = self._system(defect_cfg)
        obs = self._observable(defect_system)
        defect_state = defect_system.solve()
        reference_state = self._system(reference_cfg).solve()
        comparison = defect_comparison(
            defect_state,
            reference_state,
            obs,
            bins=opts.bins,
            delta=opts.delta,
            threads=self.threads,
        )
        results = comparison.as_dict()
        if opts.reference_size is not None:
            grown_defect = self._system(geometry.build(opts.reference_size)).solve()
            grown_reference = self._system(geometry.reference(opts.reference_size)).solve()
            grown = defect_comparison(
                grown_defect,
                grown_reference,
                obs,
                bins=opts.bins,
                delta=opts.delta,
                threads=self.threads,
            )
            results["grown_size"] = opts.reference_size
            results["grown_in_gap_count"] = grown.in_gap_count
            results["in_gap_count_stable"] = grown.in_gap_count == comparison.in_gap_count
        return ExperimentOutcome(
            results=results,
            tables={"defect-pairs": comparison.pair_rows},
            configuration=dump_configuration(defect_cfg),
        )

    def _bands(self) -> ExperimentOutcome:
        thermo, solver, opts = self.config.thermodynamics, self.config.solver, self.config.options
        cell, species = self.config.geometry.unit_cell()
        crystal = reference_crystal(
            cell,
            species,
            self._model,
            mu=thermo.mu,
            beta=thermo.beta,
            repeats=opts.supercell,
            params=solver.params(),
            n_quad=solver.n_quad,
        )
        bands = band_structure(crystal, opts.grid, threads=self.threads)
        continuity = band_continuity(crystal, opts.grid, threads=self.threads)
        consistency = {
            str(m): supercell_consistency(crystal, m, threads=self.threads) for m in opts.supercell_sweep
        }
        supercell_gap = spectral_gap(supercell_spectrum(crystal, opts.supercell), thermo.mu).gap
        results: dict[str, Any] = {
            "reference_density": crystal.rho,
            "bands": bands.as_dict(),
            "supercell_gap": supercell_gap,
            "continuity": {
                "coarse": continuity.coarse,
                "fine": continuity.fine,
                "continuous": continuity.is_continuous,
            },
            "supercell_consistency": consistency,
        }
        checks = [Check(f"supercell_consistency_{m}", value, 1e-9) for m, value in consistency.items()]
        if bands.gap > 0:
            checks.append(Check("bloch_gap_vs_supercell", abs(bands.gap - supercell_gap), 1e-6))
        if not (thermo.zero_temperature and bands.gap == 0):
            operator = supercell_stability(crystal, opts.supercell, n_quad=solver.n_quad, margin=solver.margin)
            results["stability_margin_supercell"] = operator.margin
            results["stability_margin_bloch"] = operator.bloch_margin()
            checks.append(Check("bloch_stability_spectrum", operator.mismatch(), 1e-6))
            checks.append(
                Check("bloch_stability_margin", abs(operator.bloch_margin() - operator.margin), 1e-4)
            )
        return ExperimentOutcome(
            results=results,
            tables={"bands": bands.rows()},
            checks=checks,
            configuration=dump_configuration(crystal.supercell(opts.supercell)),
        )

    def _relax(self) -> ExperimentOutcome:
        cfg = self.config.geometry.build()
        system = self._system(cfg)
        result = relax_geometry(system, self._initial_u(cfg), self._free_mask(cfg), self._relax_params())
        results = result.as_dict()
        magnitudes = np.linalg.norm(result.u, axis=1)
        distances = distance_to_defect(cfg) if cfg.defect_center is not None else None
        if distances is not None:
            try:
                fit = fit_decay(distances, magnitudes, min_samples=3)
                results["displacement_fit"] = fit.as_dict()
            except FitError as e:
                logger.warning("displacement_fit_failed", error=str(e))
                results["displacement_fit"] = None
        displacement_rows = [
            {
                "site": site,
                "r": None if distances is None else float(distances[site]),
                "magnitude": float(magnitudes[site]),
            }
            for site in range(cfg.n_sites)
        ]
        return ExperimentOutcome(
            results=results,
            tables={"trajectory": result.rows(), "displacement": displacement_rows},
            configuration=dump_configuration(cfg),
        )

    def _beta_limit(self) -> ExperimentOutcome:
        cfg = self.config.geometry.build()
        opts = self.config.options
        result = beta_limit_experiment(
            self._system(cfg),
            sorted(opts.betas),
            self._initial_u(cfg),
            self._free_mask(cfg),
            params=self._relax_params(),
            weights=StencilWeights(upsilon=opts.upsilon),
            threads=self.threads,
        )
        return ExperimentOutcome(
            results=result.as_dict(),
            tables={"beta-limit": result.rows()},
            configuration=dump_configuration(cfg),
        )

    def _selfcheck(self) -> ExperimentOutcome:
        cfg = self.config.geometry.build()
        system = self._system(cfg)
        state = system.solve(self._initial_u(cfg))
        obs = self._observable(system)
        rng = np.random.default_rng(self.config.seed)
        checks = [
            Check("scf_residual", state.density.residual, self.config.solver.tol),
            *trace_checks(state, obs),
            *woodbury_checks(rng),
            stability_check(state),
            *fd_checks(state, obs),
        ]
        for check in checks:
            logger.debug("selfcheck", name=check.name, value=check.value, passed=check.passed)
        return ExperimentOutcome(
            results={"n_checks": len(checks), "n_failed": sum(not c.passed for c in checks)},
            checks=checks,
            configuration=dump_configuration(cfg),
        )
