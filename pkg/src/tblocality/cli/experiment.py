"""Experiment CLI commands."""

from __future__ import annotations

import json
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any

import structlog
import typer
from pydantic import ValidationError

from tblocality import __version__
from tblocality.cli.formatters import (
    console,
    print_checks_table,
    print_error,
    print_run_summary,
    print_success,
    print_warning,
)
from tblocality.infrastructure.config import ConfigError, ExperimentKind, load_config
from tblocality.infrastructure.paths import OutputLayout, default_output_dir
from tblocality.infrastructure.report import (
    Report,
    ReportError,
    load_summary,
    to_jsonable,
    write_report,
)
from tblocality.infrastructure.settings import get_settings
from tblocality.modules.bloch import BlochError
from tblocality.modules.experiments import Check, ExperimentError, ExperimentService
from tblocality.modules.lattice import LatticeError
from tblocality.modules.locality import LocalityError
from tblocality.modules.model import ModelError
from tblocality.modules.relax import RelaxationError
from tblocality.modules.response import ResponseError
from tblocality.modules.scf import ScfError
from tblocality.modules.spectral import SpectralError

if TYPE_CHECKING:
    from tblocality.infrastructure.config import ExperimentConfig
    from tblocality.modules.experiments import ExperimentOutcome

__all__ = [
    "EXIT_CHECK_FAILED",
    "EXIT_FAILURE",
    "EXIT_INVALID",
    "EXIT_SOLVER",
    "SOLVER_ERRORS",
    "run",
    "show_config",
    "show_report",
]

logger = structlog.get_logger()

EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_SOLVER = 3
EXIT_CHECK_FAILED = 4

SOLVER_ERRORS = (
    BlochError,
    LatticeError,
    LocalityError,
    ModelError,
    RelaxationError,
    ResponseError,
    ScfError,
    SpectralError,
)


def _overrides(
    overrides: list[str] | None,
    experiment: ExperimentKind | None,
    seed: int | None,
) -> list[str]:
    merged = list(overrides or [])
    if experiment is not None:
        merged.append(f'experiment="{experiment.value}"')
    if seed is not None:
        merged.append(f"seed={seed}")
    return merged


def _load(config: Path, overrides: list[str]) -> ExperimentConfig:
    try:
        return load_config(config, overrides)
    except ConfigError as e:
        print_error(str(e))
        raise typer.Exit(EXIT_INVALID) from e


def _summary(cfg: ExperimentConfig, threads: int) -> dict[str, Any]:
    return {
        "experiment": cfg.experiment.value,
        "seed": cfg.seed,
        "threads": threads,
        "version": __version__,
        "config": cfg.model_dump(mode="json"),
    }


def _write(root: Path, report: Report) -> None:
    try:
        write_report(OutputLayout(root), report)
    except ReportError as e:
        print_error(str(e))
        raise typer.Exit(EXIT_FAILURE) from e


def _failed(root: Path, summary: dict[str, Any], error: Exception, code: int) -> typer.Exit:
    logger.error("experiment_failed", error_type=type(error).__name__, error=str(error))
    partial = {**summary, "status": "error", "error": f"{type(error).__name__}: {error}"}
    best = getattr(error, "best", None)
    if best is not None:
        partial["results"] = best.as_dict()
    _write(root, Report(summary=partial))
    print_error(str(error))
    print_warning(f"Partial report written to {root}")
    return typer.Exit(code)


def _finish(root: Path, summary: dict[str, Any], outcome: ExperimentOutcome) -> None:
    summary = {
        **summary,
        "status": "passed" if outcome.passed else "failed",
        "results": outcome.results,
        "checks": [c.as_dict() for c in outcome.checks],
    }
    report = Report(summary=summary, tables=outcome.tables, configuration=outcome.configuration)
    _write(root, report)
    print_run_summary(summary["experiment"], to_jsonable(outcome.results), root, passed=outcome.passed)
    print_checks_table(outcome.checks)


def run(
    config: Annotated[
        Path,
        typer.Option("--config", "-c", help="Experiment config (TOML)", exists=True, dir_okay=False),
    ],
    out: Annotated[
        Path | None,
        typer.Option("--out", "-o", help="Output directory for the report"),
    ] = None,
    experiment: Annotated[
        ExperimentKind | None,
        typer.Option("--experiment", "-e", help="Override the configured experiment"),
    ] = None,
    seed: Annotated[
        int | None,
        typer.Option("--seed", help="Override the configured seed", min=0),
    ] = None,
    threads: Annotated[
        int | None,
        typer.Option("--threads", "-t", help="Worker threads (default: config, then TBLOCALITY_THREADS)", min=1),
    ] = None,
    overrides: Annotated[
        list[str] | None,
        typer.Option("--set", "-s", help="Override a config value, e.g. solver.tol=1e-12"),
    ] = None,
) -> None:
    """Run a configured experiment and write its report.

    Exit status is 0 on success, 2 for an invalid configuration, 3 when a
    solver fails (a partial report is still written) and 4 when a check fails.

    \b
    Examples:
        tblocality run -c chain.toml                          # Run as configured
        tblocality run -c chain.toml -e selfcheck             # Different experiment
        tblocality run -c chain.toml -s thermodynamics.beta=40 -t 4
    """
    cfg = _load(config, _overrides(overrides, experiment, seed))
    try:
        settings = get_settings()
    except ValidationError as e:
        print_error(f"Invalid environment: {e}")
        raise typer.Exit(EXIT_INVALID) from e

    n_threads = threads or cfg.threads or settings.threads
    root = out or cfg.output_dir or default_output_dir(settings.output_dir, cfg.experiment.value, cfg.seed)
    summary = _summary(cfg, n_threads)

    with structlog.contextvars.bound_contextvars(experiment=cfg.experiment.value, seed=cfg.seed):
        try:
            outcome = ExperimentService(cfg, threads=n_threads).run()
        except ExperimentError as e:
            raise _failed(root, summary, e, EXIT_INVALID) from e
        except SOLVER_ERRORS as e:
            raise _failed(root, summary, e, EXIT_SOLVER) from e

        _finish(root, summary, outcome)

    if not outcome.passed:
        failed = [c.name for c in outcome.checks if not c.passed]
        print_error(f"{len(failed)} check(s) failed: {', '.join(failed)}")
        raise typer.Exit(EXIT_CHECK_FAILED)
    print_success(f"{cfg.experiment.value} finished")


def show_config(
    config: Annotated[
        Path,
        typer.Option("--config", "-c", help="Experiment config (TOML)", exists=True, dir_okay=False),
    ],
    overrides: Annotated[
        list[str] | None,
        typer.Option("--set", "-s", help="Override a config value"),
    ] = None,
) -> None:
    """Validate a config and print it fully resolved as JSON.

    \b
    Examples:
        tblocality show-config -c chain.toml
        tblocality show-config -c chain.toml -s thermodynamics.beta=inf
    """
    cfg = _load(config, list(overrides or []))
    data = to_jsonable(cfg.model_dump(mode="json"))
    console.print_json(json.dumps(data, sort_keys=True))


def show_report(
    run_dir: Annotated[
        Path,
        typer.Argument(help="Run directory written by `tblocality run`", exists=True, file_okay=False),
    ],
) -> None:
    """Print the results and checks of a finished run.

    Exit status follows the run: 0 when it passed, 4 when a check failed and
    3 when it stopped with an error. An unreadable summary exits 1.

    \b
    Examples:
        tblocality show-report runs/locality-0
    """
    summary = load_summary(OutputLayout(run_dir).summary_json())
    if summary is None:
        print_error(f"No readable summary.json in {run_dir}")
        raise typer.Exit(EXIT_FAILURE)

    status = summary.get("status", "unknown")
    experiment = str(summary.get("experiment", "run"))
    checks = [Check(c["name"], float(c["value"]), float(c["tolerance"])) for c in summary.get("checks", [])]
    print_run_summary(experiment, summary.get("results") or {}, run_dir, passed=status == "passed")
    print_checks_table(checks)
    if status == "error":
        print_error(str(summary.get("error", "run stopped with an error")))
        raise typer.Exit(EXIT_SOLVER)
    if status != "passed":
        raise typer.Exit(EXIT_CHECK_FAILED)
