"""Configured experiments and numerical self-checks."""

from tblocality.modules.experiments.selfcheck import (
    FD_STEP,
    Check,
    fd_checks,
    stability_check,
    trace_checks,
    woodbury_checks,
)
from tblocality.modules.experiments.service import (
    ExperimentError,
    ExperimentOutcome,
    ExperimentService,
)

__all__ = [
    "FD_STEP",
    "Check",
    "ExperimentError",
    "ExperimentOutcome",
    "ExperimentService",
    "fd_checks",
    "stability_check",
    "trace_checks",
    "woodbury_checks",
]
