"""Volume functional, minimal-graph solvers, 1-D reductions and the psi transform."""
from .newton import METHODS, FlowResult, SolverConfig, SolverReport, flow_relax, is_constant, solve_minimal
from .oned import (
    OdeResult,
    first_integral_1d,
    first_integral_spread,
    ode_solve_1d,
    phi_map,
    reduced_residual_1d,
    transformed_residual_1d,
    warped_surface_laplacian,
)
from .transform import psi, psi_inverse, transformed_residual
from .variational import check_range, ms_residual, residual_jacobian, volume, volume_gradient

__all__ = [
    "METHODS",
    "FlowResult",
    "OdeResult",
    "SolverConfig",
    "SolverReport",
    "check_range",
    "first_integral_1d",
    "first_integral_spread",
    "flow_relax",
    "is_constant",
    "ms_residual",
    "ode_solve_1d",
    "phi_map",
    "psi",
    "psi_inverse",
    "reduced_residual_1d",
    "residual_jacobian",
    "solve_minimal",
    "transformed_residual",
    "transformed_residual_1d",
    "volume",
    "volume_gradient",
    "warped_surface_laplacian",
]
