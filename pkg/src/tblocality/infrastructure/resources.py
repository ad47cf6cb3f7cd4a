"""Package resource access for bundled report templates.

Works whether running from source or from an installed package.
"""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path

__all__ = [
    "ResourceError",
    "get_templates_dir",
]


class ResourceError(Exception):
    """Raised when package resources cannot be accessed."""


def get_templates_dir() -> Path:
    """Get the report templates directory.

    Raises:
        ResourceError: If the templates directory cannot be accessed.
    """
    try:
        templates_path = Path(str(files("tblocality.templates")))
    except ModuleNotFoundError as e:
        raise ResourceError(
            "Cannot access package templates. Ensure tblocality is installed correctly."
        ) from e
    except TypeError as e:
        # files() returned something that cannot be converted to a Path
        raise ResourceError(f"Cannot resolve templates path: {e}") from e

    if not templates_path.exists():
        raise ResourceError(f"Templates directory not found at package location: {templates_path}")
    return templates_path
