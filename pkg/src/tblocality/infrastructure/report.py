"""Report persistence: summary JSON, CSV tables and a Markdown digest.

All writes are atomic (temp file in the target directory, then rename).
Summaries are key-sorted and carry no timestamps, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import tempfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np
import structlog
from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateNotFound

from tblocality.infrastructure.resources import ResourceError, get_templates_dir

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from tblocality.infrastructure.paths import OutputLayout

__all__ = [
    "MAX_SUMMARY_SIZE",
    "SCHEMA_VERSION",
    "Report",
    "ReportError",
    "load_summary",
    "render_markdown",
    "to_jsonable",
    "write_csv",
    "write_json",
    "write_report",
]

logger = structlog.get_logger()

# Current schema version - increment when making breaking changes
SCHEMA_VERSION = "1"

# Maximum summary file size accepted by load_summary (16MB)
MAX_SUMMARY_SIZE = 16 * 1024 * 1024

SUMMARY_TEMPLATE = "summary.md.j2"


class ReportError(Exception):
    """Raised when a report cannot be written."""


@dataclass
class Report:
    """Everything a run writes.

    Attributes:
        summary: JSON-able summary (derived quantities, checks, config echo).
        tables: CSV tables by name.
        configuration: Configuration text to store next to the summary.
    """

    summary: dict[str, Any]
    tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)
    configuration: str | None = None


def _float(value: float) -> float | str:
    if math.isfinite(value):
        return value
    if math.isnan(value):
        return "nan"
    return "inf" if value > 0 else "-inf"


def to_jsonable(value: Any) -> Any:
    """Convert numpy values, enums, paths and non-finite floats to JSON types."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.generic):
        return to_jsonable(value.item())
    if isinstance(value, bool) or value is None or isinstance(value, int | str):
        return value
    if isinstance(value, float):
        return _float(value)
    if isinstance(value, complex):
        return [_float(value.real), _float(value.imag)]
    if isinstance(value, Enum):
        return to_jsonable(value.value)
    if isinstance(value, Path):
        return str(value)
    raise ReportError(f"Cannot serialize {type(value).__name__} to JSON")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with tempfile.NamedTemporaryFile(
            mode="w",
            dir=path.parent,
            suffix=".tmp",
            delete=False,
            encoding="utf-8",
            newline="",
        ) as tmp:
            tmp.write(text)
            tmp_path = Path(tmp.name)
        tmp_path.replace(path)
    except OSError as e:
        if "tmp_path" in locals():
            tmp_path.unlink(missing_ok=True)
        raise ReportError(f"Failed to write {path}: {e}") from e
    logger.debug("report_file_written", path=str(path))


def write_json(path: Path, data: Mapping[str, Any]) -> None:
    """Write sorted, indented JSON atomically."""
    text = json.dumps(to_jsonable(dict(data)), indent=2, sort_keys=True, allow_nan=False)
    _atomic_write(path, text + "\n")


def write_csv(path: Path, rows: Sequence[Mapping[str, Any]]) -> None:
    """Write rows as CSV; columns follow first appearance across rows."""
    columns: list[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: to_jsonable(v) for k, v in row.items()})
    _atomic_write(path, buffer.getvalue())


def render_markdown(summary: Mapping[str, Any]) -> str:
    """Render the Markdown digest of a summary.

    Raises:
        ReportError: If the bundled template is missing.
    """
    try:
        env = Environment(
            loader=FileSystemLoader(get_templates_dir()),
            undefined=StrictUndefined,
            keep_trailing_newline=True,
            autoescape=False,
        )
        template = env.get_template(SUMMARY_TEMPLATE)
    except (ResourceError, TemplateNotFound) as e:
        raise ReportError(f"Summary template unavailable: {e}") from e
    return template.render(summary=to_jsonable(dict(summary)))


def write_report(layout: OutputLayout, report: Report) -> Path:
    """Write summary, tables, digest and configuration into ``layout``.

    Returns:
        Path of the summary JSON.

    Raises:
        ReportError: If any file cannot be written.
    """
    layout.ensure_root()
    summary = {"schema_version": SCHEMA_VERSION, **report.summary}
    for name, rows in sorted(report.tables.items()):
        write_csv(layout.table(name), rows)
    if report.configuration is not None:
        _atomic_write(layout.configuration(), report.configuration)
    _atomic_write(layout.summary_md(), render_markdown(summary))
    write_json(layout.summary_json(), summary)
    logger.info("report_written", root=str(layout.root), tables=sorted(report.tables))
    return layout.summary_json()


def load_summary(path: Path) -> dict[str, Any] | None:
    """Load a summary JSON file.

    Gracefully handles missing files, invalid JSON, and oversized files.

    Returns:
        Parsed summary, or None if unreadable.
    """
    if not path.exists():
        return None
    try:
        size = path.stat().st_size
        if size > MAX_SUMMARY_SIZE:
            logger.warning("summary_too_large", path=str(path), size=size, max_size=MAX_SUMMARY_SIZE)
            return None
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        logger.warning("summary_invalid_json", path=str(path), error=str(e))
        return None
    except OSError as e:
        logger.warning("summary_read_error", path=str(path), error=str(e))
        return None
    if not isinstance(data, dict):
        logger.warning("summary_not_object", path=str(path))
        return None
    version = data.get("schema_version")
    if version and version != SCHEMA_VERSION:
        logger.warning(
            "summary_version_mismatch",
            path=str(path),
            expected=SCHEMA_VERSION,
            found=version,
        )
    return data
