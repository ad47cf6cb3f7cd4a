"""Tests for CLI formatter functions."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any
from unittest.mock import MagicMock, patch

import pytest
from rich.panel import Panel
from rich.table import Table

from tblocality.cli.formatters import (
    format_value,
    print_checks_table,
    print_error,
    print_info,
    print_run_summary,
)
from tblocality.modules.experiments import Check


def _find_panel(mock_console: MagicMock) -> Any:
    """Find the run summary panel from console.print calls."""
    for call in mock_console.print.call_args_list:
        if call.args and isinstance(call.args[0], Panel):
            return call.args[0]
    msg = "Could not find a Panel in console.print calls"
    raise AssertionError(msg)


class TestPrintInfo:
    """Tests for print_info function."""

    def test_prints_message(self) -> None:
        """Should print message."""
        with patch("tblocality.cli.formatters.console") as mock_console:
            print_info("Test message")
            mock_console.print.assert_called_once()
            call_args = mock_console.print.call_args[0][0]
            assert "Test message" in call_args


class TestPrintError:
    """Tests for print_error function."""

    def test_prints_to_error_console(self) -> None:
        """Should print on the stderr console."""
        with patch("tblocality.cli.formatters.error_console") as mock_console:
            print_error("boom")
            assert "boom" in mock_console.print.call_args[0][0]


class TestFormatValue:
    """Tests for format_value function."""

    @pytest.mark.parametrize(
        ("value", "expected"),
        [
            (0.123456789, "0.123457"),
            (math.inf, "inf"),
            (True, "True"),
            (None, "None"),
            (3, "3"),
            ([1.0, 2.5], "[1, 2.5]"),
            (list(range(10)), "[10 items]"),
            ({"a": 1, "b": 2}, "{2 fields}"),
        ],
    )
    def test_formats(self, value: Any, expected: str) -> None:
        """Should render values compactly."""
        assert format_value(value) == expected


class TestPrintRunSummary:
    """Tests for print_run_summary function."""

    def test_flattens_one_level(self) -> None:
        """Nested fit fields appear with a dotted prefix."""
        with patch("tblocality.cli.formatters.console") as mock_console:
            print_run_summary("locality", {"fit": {"eta_hat": 0.5}, "gap": 2.0}, Path("runs/x"))
            panel = _find_panel(mock_console)
            assert "fit.eta_hat" in panel.renderable
            assert "runs/x" in panel.renderable

    def test_failed_run_is_red(self) -> None:
        """Should use a red border when a check failed."""
        with patch("tblocality.cli.formatters.console") as mock_console:
            print_run_summary("bands", {}, Path("out"), passed=False)
            assert _find_panel(mock_console).border_style == "red"


class TestPrintChecksTable:
    """Tests for print_checks_table function."""

    def test_skips_empty(self) -> None:
        """Should print nothing without checks."""
        with patch("tblocality.cli.formatters.console") as mock_console:
            print_checks_table([])
            mock_console.print.assert_not_called()

    def test_one_row_per_check(self) -> None:
        """Should add a row per check."""
        with patch("tblocality.cli.formatters.console") as mock_console:
            print_checks_table([Check("a", 1e-12, 1e-10), Check("b", 1.0, 1e-6)])
            table = mock_console.print.call_args[0][0]
            assert isinstance(table, Table)
            assert table.row_count == 2
