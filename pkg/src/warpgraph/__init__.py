"""Minimal graphs in warped products I x_f M.

Submodules: `warp` (warping functions), `fiber` (grids and discrete
operators), `geometry` (shape operator, Laplacian identities), `solver`
(volume, residual, Newton/flow, 1-D reductions), `analysis` (hypothesis
checks and diagnostics), `fieldio` and `cli`.
"""
from . import analysis, fiber, fieldio, fields, geometry, solver, warp
from .fiber import FiberGrid, MetricKind, box, torus
from .geometry import GraphState, assemble_state, formula_laplacian, identity_report
from .solver import SolverConfig, SolverReport, flow_relax, ms_residual, solve_minimal, volume, volume_gradient
from .warp import WarpingFunction, classify_warping, preset

__version__ = "0.1.0"

__all__ = [
    "FiberGrid",
    "GraphState",
    "MetricKind",
    "SolverConfig",
    "SolverReport",
    "WarpingFunction",
    "analysis",
    "assemble_state",
    "box",
    "classify_warping",
    "fiber",
    "fieldio",
    "fields",
    "flow_relax",
    "formula_laplacian",
    "geometry",
    "identity_report",
    "ms_residual",
    "preset",
    "solve_minimal",
    "solver",
    "torus",
    "volume",
    "volume_gradient",
    "warp",
]
