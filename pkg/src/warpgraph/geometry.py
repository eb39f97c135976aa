"""Extrinsic geometry of a graph Sigma_u in I x_f M and its Laplacian identities.

Conventions.  N = cos(theta) (d_t - Du / f(u)^2) has positive d_t component,
A X = -nabla_X N, H = trace(A) / n.  A slice u = t0 has A = -(f'/f) Id.

Shape operator in the fiber chart (derived from II_ij = <nabla_i F_j, N>
with the warped-product Christoffel symbols, A = G^{-1} II):

    A X = -(f/W) { (f'/f) X + f' g(Du, X) Du / (f W^2)
                   + g(D_X Du, Du) Du / (f^2 W^2) - D_X Du / f^2 }

The right-hand sides in `formula_laplacian` carry their mean-curvature
terms, so they hold for every graph, and reduce to the minimal-graph forms
when H = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fiber import (
    FiberGrid,
    MetricKind,
    grad_norm_sq,
    gradient,
    hessian,
    laplace_beltrami,
    torus,
)
from .fields import AnalyticField, make_field
from .solver.variational import check_range, ms_residual
from .warp import WarpingFunction, cumulative_integral

__all__ = [
    "HypothesisError",
    "GraphState",
    "assemble_state",
    "ms_residual",
    "FORMULAS",
    "formula_laplacian",
    "WITNESSES",
    "witness_field",
    "IdentityReport",
    "identity_report",
    "state_table",
]


class HypothesisError(ValueError):
    """An identity was requested outside the hypotheses it is stated under."""


@dataclass(frozen=True, eq=False)
class GraphState:
    grid: FiberGrid
    f: WarpingFunction
    u: np.ndarray
    du: np.ndarray
    hess: np.ndarray
    fu: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    Du: np.ndarray
    q: np.ndarray
    W: np.ndarray
    cos_theta: np.ndarray
    N_t: np.ndarray
    N_M: np.ndarray
    A: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.grid.dim

    @property
    def sin2(self) -> np.ndarray:
        """||grad tau||^2 on the graph."""
        return self.q / self.W**2

    @property
    def conf_norm_sq(self) -> np.ndarray:
        """||grad tau||^2 in the conformal metric g_Sigma / f(tau)^2."""
        return self.fu**2 * self.sin2

    @property
    def log_d2(self) -> np.ndarray:
        return (self.f2 * self.fu - self.f1**2) / self.fu**2

    @property
    def trace_A2(self) -> np.ndarray:
        return np.einsum("...ij,...ji->...", self.A, self.A)


def assemble_state(grid: FiberGrid, f: WarpingFunction, u, du=None, hess=None) -> GraphState:
    """Per-node geometry of the graph of u.

    ``du`` and ``hess`` default to the discrete central differences; pass
    analytic derivatives to evaluate the exact geometry on the nodes.
    """
    u = grid.check(u)
    check_range(grid, f, u)
    n = grid.dim
    du = gradient(grid, u) if du is None else grid.check(du, vector=True)
    hess = hessian(grid, u) if hess is None else np.asarray(hess, dtype=float)
    gi = grid.inv_metric.reshape((-1,) + (1,) * n)
    Du = gi * du
    q = np.sum(Du * du, axis=0)
    fu, f1, f2 = f.func(u), f.d1(u), f.d2(u)
    W = np.sqrt(fu**2 + q)
    cos_theta = fu / W

    # node-last layout for the matrix algebra
    Du_l = np.moveaxis(Du, 0, -1)
    du_l = np.moveaxis(du, 0, -1)
    Hs = np.moveaxis(np.moveaxis(hess, 0, -1), 0, -1)  # (..., i, j)
    HDu = np.einsum("...jk,...k->...j", Hs, Du_l)  # (Hess Du)_j = g(D_{e_j} Du, Du)
    DXDu = grid.inv_metric[:, None] * Hs  # column j is D_{e_j} Du
    fu_, f1_, W_ = fu[..., None, None], f1[..., None, None], W[..., None, None]
    eye = np.eye(n)
    brace = (
        (f1_ / fu_) * eye
        + f1_ * Du_l[..., :, None] * du_l[..., None, :] / (fu_ * W_**2)
        + Du_l[..., :, None] * HDu[..., None, :] / (fu_**2 * W_**2)
        - DXDu / fu_**2
    )
    A = -(fu_ / W_) * brace
    H = np.trace(A, axis1=-2, axis2=-1) / n
    return GraphState(
        grid=grid,
        f=f,
        u=u,
        du=du,
        hess=hess,
        fu=fu,
        f1=f1,
        f2=f2,
        Du=Du,
        q=q,
        W=W,
        cos_theta=cos_theta,
        N_t=cos_theta,
        N_M=-cos_theta * Du / fu**2,
        A=A,
        H=H,
    )


# --- identities ----------------------------------------------------------------

FORMULAS = (
    "norm",
    "dtau",
    "dftau",
    "conf_tau",
    "conf_ftau",
    "arccot",
    "arccot_variant",
    "F_low",
    "F_up",
    "lcos",
    "lcos_variant",
)
_NEED_MINIMAL = {"conf_tau", "conf_ftau", "arccot", "arccot_variant", "F_low", "F_up", "lcos", "lcos_variant"}


def _check_product(state: GraphState, which: str):
    if np.any(state.f1 != 0) or np.any(state.f2 != 0):
        raise HypothesisError(f"{which} is stated for a product ambient (f constant on the range of u)")


def _grad_dot_tau(state: GraphState, phi: np.ndarray) -> np.ndarray:
    """g_Sigma(grad phi, grad tau) = G^{-1}(d phi, du) for a node field phi."""
    dphi = gradient(state.grid, phi)
    # G^{-1} = g^{-1}/f^2 - Du Du^T / (f^2 W^2)
    Dphi = state.grid.inv_metric.reshape((-1,) + (1,) * state.n) * dphi
    a = np.sum(Dphi * state.du, axis=0)
    b = np.sum(dphi * state.Du, axis=0) * state.q
    return (a - b / state.W**2) / state.fu**2


def formula_laplacian(
    which: str, state: GraphState, require_minimal: bool = True, tol: float = 1e-6
) -> np.ndarray:
    """Right-hand side of a Laplacian identity, evaluated pointwise from `state`.

    ``dtau`` / ``dftau`` use the graph metric; ``conf_*``, ``arccot`` and
    ``F_*`` the conformal metric g_Sigma / f(tau)^2.  ``lcos`` is the Jacobi
    identity for cos(theta) in a product with flat fiber,

        Delta cos(theta) = -cos(theta) trace(A^2) - g(grad(nH), grad tau),

    while ``lcos_variant`` (opposite sign, no curvature term) and
    ``arccot_variant`` are alternative closed forms that do not hold; they
    serve as negative controls for the refinement check.  With
    ``require_minimal`` the minimal-graph identities refuse states whose
    |H| exceeds ``tol``.
    """
    if which not in FORMULAS:
        raise ValueError(f"unknown identity {which!r}; choose from {FORMULAS}")
    n = state.n
    f, f1, s2, c = state.fu, state.f1, state.sin2, state.cos_theta
    S = state.conf_norm_sq
    nH = n * state.H
    if require_minimal and which in _NEED_MINIMAL:
        Hmax = float(np.max(np.abs(state.H)))
        if Hmax > tol:
            raise HypothesisError(f"{which} needs a minimal graph; measured |H|_inf = {Hmax:.3e}")
    if which == "norm":
        return s2
    if which == "dtau":
        return (f1 / f) * (n - s2) + nH * c
    if which == "dftau":
        return n * f1**2 / f + f * state.log_d2 * s2 + nH * f1 * c
    conf_tau = n * f * f1 - (n - 1) * (f1 / f) * S + f**2 * nH * c
    conf_ftau = n * f * f1**2 + (f * state.log_d2 - (n - 2) * f1**2 / f) * S + f**2 * f1 * nH * c
    if which == "conf_tau":
        return conf_tau
    if which == "conf_ftau":
        return conf_ftau
    if which == "F_low":
        return f1 * f**2 * (n - (n - 2) * S / f**2) + f**3 * nH * c
    if which == "F_up":
        return -(f1 * f**2 * (n - (n - 2) * S / f**2) + f**3 * nH * c)
    if which == "arccot":
        return -conf_ftau / (1 + f**2) + 2 * f * f1**2 * S / (1 + f**2) ** 2
    if which == "arccot_variant":
        return -f / (1 + f**2) * state.log_d2 * S - f1**2 / (f**2 * (1 + f**2)) * (
            n * (f**2 - S) * f + 2 / (f * (1 + f**2)) * S
        )
    _check_product(state, which)
    if which == "lcos":
        return -c * state.trace_A2 - _grad_dot_tau(state, nH)
    return c * state.trace_A2  # lcos_variant with Ric = 0


# --- witnesses -------------------------------------------------------------------

WITNESSES = ("arccot_f_tau", "F_lower", "F_upper", "cos_theta", "sech_sq")


def witness_field(kind: str, state: GraphState) -> np.ndarray:
    """Candidate (super)harmonic functions on the graph."""
    u, f = state.u, state.f
    if kind == "arccot_f_tau":
        return np.arctan(1.0 / state.fu)  # branch in (0, pi/2)
    if kind == "F_lower":
        if not np.all(np.isfinite(u)):
            raise HypothesisError("tau is not bounded below")
        return cumulative_integral(f.func, u, float(np.min(u)))
    if kind == "F_upper":
        if not np.all(np.isfinite(u)):
            raise HypothesisError("tau is not bounded above")
        return -cumulative_integral(f.func, u, float(np.max(u)))
    if kind == "cos_theta":
        return state.cos_theta
    if kind == "sech_sq":
        return 1.0 / np.cosh(state.grid.coords[0]) ** 2
    raise ValueError(f"unknown witness {kind!r}; choose from {WITNESSES}")


# LHS of each identity: (metric, function of the discrete state)
def _lhs(which: str, grid: FiberGrid, f: WarpingFunction, u: np.ndarray) -> np.ndarray:
    graph = MetricKind.graph(u, f)
    conf = MetricKind.conformal(u, f)
    if which == "norm":
        return grad_norm_sq(grid, graph, u)
    if which == "dtau":
        return laplace_beltrami(grid, graph, u)
    if which == "dftau":
        return laplace_beltrami(grid, graph, f.eval(u))
    if which == "conf_tau":
        return laplace_beltrami(grid, conf, u)
    if which == "conf_ftau":
        return laplace_beltrami(grid, conf, f.eval(u))
    state = assemble_state(grid, f, u)
    if which in ("arccot", "arccot_variant"):
        return laplace_beltrami(grid, conf, witness_field("arccot_f_tau", state))
    if which == "F_low":
        return laplace_beltrami(grid, conf, witness_field("F_lower", state))
    if which == "F_up":
        return laplace_beltrami(grid, conf, witness_field("F_upper", state))
    if which in ("lcos", "lcos_variant"):
        return laplace_beltrami(grid, graph, state.cos_theta)
    raise ValueError(which)


@dataclass
class IdentityReport:
    which: str
    resolutions: list[int]
    spacings: list[float]
    gaps: list[float]
    orders: list[float]
    observed_order: float
    exact: bool

    def passed(self, min_order: float = 1.9, exact_tol: float = 1e-12) -> bool:
        if self.exact:
            return max(self.gaps) <= exact_tol
        return bool(self.observed_order >= min_order)

    def to_dict(self) -> dict:
        return {
            "which": self.which,
            "resolutions": self.resolutions,
            "spacings": self.spacings,
            "max_abs_gap": self.gaps,
            "orders": self.orders,
            "observed_order": self.observed_order,
            "exact": self.exact,
        }


def identity_report(
    which: str,
    f: WarpingFunction,
    field_spec: str = "sincos:0.1",
    resolutions=(32, 64, 128),
    grid_factory=None,
    analytic: bool = True,
    exact_tol: float = 1e-12,
) -> IdentityReport:
    """Grid-refinement check of one identity.

    At each resolution the left side is the discrete Laplace-Beltrami
    operator applied to the witness function, the right side is
    `formula_laplacian` on the state built from the analytic derivatives of
    the field (or from the discrete state with ``analytic=False``).  The
    observed order is the smallest of the pairwise log-ratios.  When every
    gap is below ``exact_tol`` the identity holds to round-off and the report
    is flagged exact.
    """
    grid_factory = grid_factory or (lambda N: torus(N, 2))
    gaps, hs = [], []
    for N in resolutions:
        grid = grid_factory(N)
        fld: AnalyticField = make_field(grid, field_spec)
        lhs = _lhs(which, grid, f, fld.value)
        if analytic:
            state = assemble_state(grid, f, fld.value, fld.grad, fld.hess)
        else:
            state = assemble_state(grid, f, fld.value)
        rhs = formula_laplacian(which, state, require_minimal=False)
        gap = np.abs(lhs - rhs)[grid.interior]
        gaps.append(float(np.max(gap)))
        hs.append(max(grid.spacing))
    orders = []
    for k in range(len(gaps) - 1):
        if gaps[k + 1] > 0 and gaps[k] > 0:
            orders.append(math.log(gaps[k] / gaps[k + 1]) / math.log(hs[k] / hs[k + 1]))
        else:
            orders.append(math.inf)
    exact = max(gaps) <= exact_tol
    return IdentityReport(
        which=which,
        resolutions=list(resolutions),
        spacings=hs,
        gaps=gaps,
        orders=orders,
        observed_order=math.inf if exact else min(orders),
        exact=exact,
    )


def state_table(state: GraphState) -> tuple[list[str], np.ndarray]:
    """Columns (coords..., u, W, cos_theta, H), rows in x-fastest node order."""
    cols = [c.ravel(order="F") for c in state.grid.coords]
    names = ["x", "y"][: state.n] + ["u", "W", "cos_theta", "H"]
    for a in (state.u, state.W, state.cos_theta, state.H):
        cols.append(a.ravel(order="F"))
    return names, np.column_stack(cols)
