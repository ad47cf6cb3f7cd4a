"""Main CLI application."""

from __future__ import annotations

import typer

from tblocality import __version__
from tblocality.cli import experiment
from tblocality.infrastructure.logging import configure_logging

# Main application
app = typer.Typer(
    name="tblocality",
    help="Locality experiments for self-consistent tight binding.",
    no_args_is_help=True,
    context_settings={"help_option_names": ["-h", "--help"]},
)

app.command("run")(experiment.run)
app.command("show-config")(experiment.show_config)
app.command("show-report")(experiment.show_report)


def version_callback(value: bool) -> None:
    """Print version and exit."""
    if value:
        typer.echo(f"tblocality {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: bool = typer.Option(  # noqa: ARG001 - handled by callback
        None,
        "--version",
        "-V",
        callback=version_callback,
        is_eager=True,
        help="Show version and exit.",
    ),
    verbose: bool = typer.Option(
        False,
        "--verbose",
        "-v",
        help="Show debug output.",
    ),
    log_json: bool = typer.Option(
        False,
        "--log-json",
        help="Emit logs as JSON lines on stderr.",
    ),
) -> None:
    """tblocality: locality of derivatives in self-consistent tight binding.

    Run configured experiments and write reproducible reports.
    """
    configure_logging(debug=verbose, json_logs=log_json)
