"""Locality measurements: decay fits, resolvent bounds, defects and finite-rank updates."""

from tblocality.modules.locality.combes_thomas import CtReport, ct_check, site_blocks
from tblocality.modules.locality.comparison import (
    DefectBin,
    DefectComparison,
    WoodburyOverlay,
    defect_comparison,
    isolated_eigenvalues,
)
from tblocality.modules.locality.decay import (
    DecayFit,
    asymptotic_window,
    envelope,
    fit_decay,
)
from tblocality.modules.locality.errors import FitError, LocalityError, WoodburyError
from tblocality.modules.locality.experiment import (
    LocalityResult,
    derivative_magnitudes,
    locality_experiment,
    nearest_distance,
)
from tblocality.modules.locality.woodbury import (
    InverseAction,
    UpdatedInverse,
    inverse_action,
    low_rank_factors,
    woodbury_resolvent,
)

__all__ = [
    "CtReport",
    "DecayFit",
    "DefectBin",
    "DefectComparison",
    "FitError",
    "InverseAction",
    "LocalityError",
    "LocalityResult",
    "UpdatedInverse",
    "WoodburyError",
    "WoodburyOverlay",
    "asymptotic_window",
    "ct_check",
    "defect_comparison",
    "derivative_magnitudes",
    "envelope",
    "fit_decay",
    "inverse_action",
    "isolated_eigenvalues",
    "locality_experiment",
    "low_rank_factors",
    "nearest_distance",
    "site_blocks",
    "woodbury_resolvent",
]
