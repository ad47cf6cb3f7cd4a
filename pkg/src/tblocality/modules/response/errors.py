"""Exceptions raised by the response calculations."""

from __future__ import annotations

__all__ = [
    "OracleError",
    "ResponseError",
]


class ResponseError(Exception):
    """Base class for response failures."""


class OracleError(ResponseError):
    """Raised when a finite-difference stencil point cannot be evaluated."""
