"""Rich console output formatting utilities."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence
    from pathlib import Path

    from tblocality.modules.experiments import Check

__all__ = [
    "console",
    "error_console",
    "format_value",
    "print_checks_table",
    "print_error",
    "print_info",
    "print_run_summary",
    "print_success",
    "print_warning",
]

# Shared console instance
console = Console()
error_console = Console(stderr=True)


def print_success(message: str) -> None:
    """Print a success message."""
    console.print(f"[green]✓[/green] {message}")


def print_error(message: str) -> None:
    """Print an error message to stderr."""
    error_console.print(f"[red]✗[/red] {message}")


def print_warning(message: str) -> None:
    """Print a warning message."""
    console.print(f"[yellow]![/yellow] {message}")


def print_info(message: str) -> None:
    """Print an info message."""
    console.print(f"[blue]i[/blue] {message}")


def format_value(value: Any) -> str:
    """Compact display of a summary value.

    Floats get 6 significant digits, nested results collapse to their size.
    """
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return f"{value:.6g}"
    if isinstance(value, dict):
        return f"{{{len(value)} fields}}"
    if isinstance(value, list | tuple):
        if len(value) <= 4 and all(isinstance(v, int | float) for v in value):
            return "[" + ", ".join(format_value(v) for v in value) + "]"
        return f"[{len(value)} items]"
    return str(value)


def _flatten(results: Mapping[str, Any], prefix: str = "") -> list[tuple[str, Any]]:
    rows: list[tuple[str, Any]] = []
    for key, value in results.items():
        name = f"{prefix}{key}"
        # One level of nesting keeps fit dictionaries readable
        if isinstance(value, dict) and not prefix:
            rows.extend(_flatten(value, prefix=f"{name}."))
        else:
            rows.append((name, value))
    return rows


def print_run_summary(
    experiment: str,
    results: Mapping[str, Any],
    output: Path,
    *,
    passed: bool = True,
) -> None:
    """Print the derived quantities of a finished run.

    Args:
        experiment: Experiment name.
        results: Derived quantities from the run.
        output: Directory the report was written to.
        passed: Whether every check passed.
    """
    lines = [f"[bold]{name}:[/bold] {format_value(value)}" for name, value in _flatten(results)]
    lines.append("")
    lines.append(f"[dim]Report:[/dim] {output}")

    style = "green" if passed else "red"
    panel = Panel(
        "\n".join(lines),
        title=f"[{style}]{experiment}[/{style}]",
        border_style=style,
    )
    console.print(panel)


def print_checks_table(checks: Sequence[Check]) -> None:
    """Print measured errors against tolerances."""
    if not checks:
        return

    table = Table(title="Checks")
    table.add_column("Check", style="cyan")
    table.add_column("Value", justify="right")
    table.add_column("Tolerance", justify="right", style="dim")
    table.add_column("Status")

    for check in checks:
        status = "[green]pass[/green]" if check.passed else "[red]fail[/red]"
        table.add_row(check.name, f"{check.value:.3e}", f"{check.tolerance:.1e}", status)

    console.print(table)
