"""Spectral calculus: eigenpairs, contours, resolvents and site observables."""

from tblocality.modules.spectral.contour import (
    Contour,
    ContourKind,
    build_contour,
    ellipse_contour,
    try_build_contour,
    winding_numbers,
)
from tblocality.modules.spectral.eigen import (
    GapInfo,
    SpectralCache,
    diagonalize,
    spectral_gap,
)
from tblocality.modules.spectral.errors import (
    ContourError,
    DomainError,
    GapError,
    NearSingularError,
    NumericalError,
    QuadratureError,
    SpectralError,
)
from tblocality.modules.spectral.kernels import (
    ContourKernels,
    SpectralKernels,
    divided_differences,
    second_divided_differences,
)
from tblocality.modules.spectral.local import (
    local_observable_contour,
    local_observable_spectral,
    local_observables_contour,
    local_observables_spectral,
)
from tblocality.modules.spectral.observables import (
    Observable,
    ObservableKind,
    fermi,
    grand_potential_integrand,
)
from tblocality.modules.spectral.resolvent import (
    factorize_shifted,
    resolvent_column,
    resolvent_matrix,
)

__all__ = [
    "Contour",
    "ContourError",
    "ContourKernels",
    "ContourKind",
    "DomainError",
    "GapError",
    "GapInfo",
    "NearSingularError",
    "NumericalError",
    "QuadratureError",
    "Observable",
    "ObservableKind",
    "SpectralCache",
    "SpectralError",
    "SpectralKernels",
    "build_contour",
    "diagonalize",
    "divided_differences",
    "ellipse_contour",
    "factorize_shifted",
    "fermi",
    "grand_potential_integrand",
    "local_observable_contour",
    "local_observable_spectral",
    "local_observables_contour",
    "local_observables_spectral",
    "resolvent_column",
    "resolvent_matrix",
    "second_divided_differences",
    "spectral_gap",
    "try_build_contour",
    "winding_numbers",
]
