"""Analytic derivatives of self-consistent site observables and their oracle."""

from tblocality.modules.response.calculator import (
    ResponseCalculator,
    ResponseVector,
    SiteGradient,
    density_response,
    response_vector,
    site_gradient,
    site_hessian,
)
from tblocality.modules.response.errors import OracleError, ResponseError
from tblocality.modules.response.oracle import (
    ORACLE_TOLERANCE,
    density_selector,
    fd_oracle,
    observable_selector,
    scf_quantity,
)

__all__ = [
    "ORACLE_TOLERANCE",
    "OracleError",
    "ResponseCalculator",
    "ResponseError",
    "ResponseVector",
    "SiteGradient",
    "density_response",
    "density_selector",
    "fd_oracle",
    "observable_selector",
    "response_vector",
    "scf_quantity",
    "site_gradient",
    "site_hessian",
]
