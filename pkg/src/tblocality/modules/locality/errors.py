"""Exceptions raised by the locality measurements."""

from __future__ import annotations

__all__ = [
    "FitError",
    "LocalityError",
    "WoodburyError",
]


class LocalityError(Exception):
    """Base class for locality measurement failures."""


class FitError(LocalityError):
    """Raised when a decay fit has too few usable samples."""


class WoodburyError(LocalityError):
    """Raised when the capacitance matrix I + V A^{-1} U is singular."""
