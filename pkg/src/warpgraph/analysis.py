"""Hypothesis checks and diagnostics for graphs in a warped product.

Everything here is a numeric proxy: gradient bounds and angle gaps are
maxima/minima over nodes, quasi-isometry is certified by generalized
eigenvalues node by node, and parabolicity is only ever witnessed (a
negative Laplacian of a positive function), never decided.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .fiber import FiberGrid, MetricKind, gradient, laplace_beltrami, metric_eigen_bounds
from .geometry import GraphState, HypothesisError, witness_field
from .solver.variational import check_range
from .warp import WarpClassification, WarpingFunction, classify_warping

__all__ = [
    "THEOREMS",
    "gradient_bound_constant",
    "angle_gap",
    "QuasiIsometry",
    "quasi_isometry_check",
    "product_sandwich_bounds",
    "ScanReport",
    "superharmonic_scan",
    "witness_scan",
    "HypothesisReport",
    "hypothesis_report",
    "AreaGrowth",
    "ball_area_growth",
    "sech_sq_laplacian",
    "sech_sq_closed_form",
]

THEOREMS = ("log_convex", "log_convex_semibounded", "monotone_integrable_end", "monotone_semibounded", "monotone_bounded", "product_totally_geodesic", "product_flat_periodic")
_CONSTANT_CONCLUSION = {"log_convex", "log_convex_semibounded", "monotone_integrable_end", "monotone_semibounded", "monotone_bounded", "product_flat_periodic"}


def _slope(grid: FiberGrid, f: WarpingFunction, u, du=None) -> np.ndarray:
    u = grid.check(u)
    check_range(grid, f, u)
    du = gradient(grid, u) if du is None else grid.check(du, vector=True)
    gi = grid.inv_metric.reshape((-1,) + (1,) * grid.dim)
    return np.sqrt(np.sum(gi * du * du, axis=0)) / f.func(u)


def gradient_bound_constant(grid: FiberGrid, f: WarpingFunction, u, du=None) -> float:
    """Smallest c with |Du| <= c f(u) at every node."""
    return float(np.max(_slope(grid, f, u, du)))


def angle_gap(grid: FiberGrid, f: WarpingFunction, u, du=None) -> float:
    """min cos(theta) = min f / sqrt(f^2 + |Du|^2) = 1/sqrt(1 + max slope^2)."""
    s = _slope(grid, f, u, du)
    return float(np.min(1.0 / np.sqrt(1.0 + s * s)))


@dataclass(frozen=True)
class QuasiIsometry:
    lam_min: float
    lam_max: float
    qi_constant: float
    c: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def quasi_isometry_check(grid: FiberGrid, f: WarpingFunction, u, du=None, tol: float = 1e-10) -> QuasiIsometry:
    """Eigenvalues of the conformal graph metric relative to the fiber metric.

    Passes when they lie in [1 - tol, 1 + c^2 + tol].
    """
    c = gradient_bound_constant(grid, f, u, du)
    lo, hi = metric_eigen_bounds(grid, MetricKind.conformal(u, f, du), MetricKind.fiber())
    qi = math.sqrt(max(hi, 1.0 / lo))
    ok = lo >= 1 - tol and hi <= 1 + c * c + tol
    return QuasiIsometry(lo, hi, qi, c, bool(ok))


def product_sandwich_bounds(h_values) -> tuple[float, float]:
    """Eigen-range of dx^2 + h^2 dy^2 against dx^2 + dy^2 for sampled h."""
    h = np.asarray(h_values, dtype=float).ravel()
    M = np.zeros(h.shape + (2, 2))
    M[:, 0, 0] = 1.0
    M[:, 1, 1] = h * h
    lam = np.linalg.eigvalsh(M)
    return float(lam.min()), float(lam.max())


@dataclass(frozen=True)
class ScanReport:
    max_laplacian: float
    min_laplacian: float
    fraction_nonpositive: float
    nodes: int
    tol: float

    def to_dict(self) -> dict:
        return asdict(self)


def superharmonic_scan(grid: FiberGrid, metric: MetricKind, phi, tol: float = 1e-12) -> ScanReport:
    """Laplace-Beltrami of phi over interior nodes; superharmonic means max <= tol."""
    lap = laplace_beltrami(grid, metric, phi)[grid.interior]
    return ScanReport(
        max_laplacian=float(np.max(lap)),
        min_laplacian=float(np.min(lap)),
        fraction_nonpositive=float(np.mean(lap <= tol)),
        nodes=int(lap.size),
        tol=tol,
    )


def witness_scan(state: GraphState, kind: str, metric: str = "conformal", h_tol: float = 1e-6, tol: float = 1e-8) -> ScanReport:
    """Scan a witness function on the graph in the induced or the conformal metric."""
    if metric == "conformal":
        h = float(np.max(np.abs(state.H[state.grid.interior])))
        if h > h_tol:
            raise HypothesisError(f"conformal scans need a minimal graph; |H|_inf = {h:.3e}")
        mk = MetricKind.conformal(state.u, state.f)
    elif metric == "graph":
        mk = MetricKind.graph(state.u, state.f)
    else:
        raise ValueError("metric must be 'graph' or 'conformal'")
    return superharmonic_scan(state.grid, mk, witness_field(kind, state), tol)


def sech_sq_laplacian(x) -> np.ndarray:
    """Laplacian of sech^2 x on dx^2 + (1 + cosh^4 x) dy^2, from analytic derivatives."""
    from .solver.oned import warped_surface_laplacian
    from .warp import preset

    x = np.asarray(x, dtype=float)
    s2 = 1.0 / np.cosh(x) ** 2
    t = np.tanh(x)
    d1 = -2.0 * s2 * t
    d2 = 4.0 * s2 * t * t - 2.0 * s2 * s2
    return warped_surface_laplacian(preset("cex_a"), s2, d1, d2, x)


def sech_sq_closed_form(x) -> np.ndarray:
    """2((cosh^2 x - 1)^2 + 2) / (cosh^4 x (1 + cosh^4 x)), the negative of `sech_sq_laplacian`."""
    c2 = np.cosh(np.asarray(x, dtype=float)) ** 2
    return 2.0 * ((c2 - 1.0) ** 2 + 2.0) / (c2 * c2 * (1.0 + c2 * c2))


@dataclass
class HypothesisReport:
    gradient_bound_c: float
    angle_gap: float
    warping: WarpClassification
    applicable_theorems: list[str]
    predicted_conclusion: str
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "gradient_bound_c": self.gradient_bound_c,
            "angle_gap": self.angle_gap,
            "warping": self.warping.to_dict(),
            "applicable_theorems": list(self.applicable_theorems),
            "predicted_conclusion": self.predicted_conclusion,
            "notes": list(self.notes),
        }


def hypothesis_report(
    grid: FiberGrid,
    f: WarpingFunction,
    u,
    tol: float = 1e-10,
    classification: WarpClassification | None = None,
) -> HypothesisReport:
    """Which uniqueness theorems have their hypotheses met by (f, u) on this grid.

    The torus stands in for a complete parabolic fiber, so a bounded box
    qualifies for none.  Boundedness of u and finiteness of the gradient
    constant hold automatically on a finite grid and are only noted.
    """
    c = gradient_bound_constant(grid, f, u)
    gap = angle_gap(grid, f, u)
    cls = classification or classify_warping(f, tol=tol)
    notes = [
        "u is bounded and |Du|/f(u) is finite on any finite grid: these hypotheses are vacuous here",
    ]
    applicable: list[str] = []
    if grid.dim < 2:
        notes.append("fiber dimension below 2: no theorem applies")
    elif not grid.periodic:
        notes.append("bounded box with boundary data: not a surrogate for a complete parabolic fiber")
    else:
        notes.append("compact surrogate: the torus stands in for a complete parabolic fiber")
        if cls.non_locally_constant and cls.log_convex:
            applicable.append("log_convex")
        if cls.log_convex:
            applicable.append("log_convex_semibounded")
        d = f.domain
        sig1 = (
            math.isfinite(d.a) and cls.non_increasing and cls.l1_at_a.finite
        ) or (math.isfinite(d.b) and cls.non_decreasing and cls.l1_at_b.finite)
        if sig1:
            applicable.append("monotone_integrable_end")
        if cls.monotone != "non-monotone":
            applicable += ["monotone_semibounded", "monotone_bounded"]
        if cls.monotone == "constant":
            applicable += ["product_totally_geodesic", "product_flat_periodic"]
            notes.append("flat fiber: Ric = 0 counts as non-positive; strict negativity at a point is not checkable")
        if cls.l1_at_a.indeterminate or cls.l1_at_b.indeterminate:
            notes.append("an endpoint integral is indeterminate; monotone_integrable_end not claimed on that side")
    applicable = [t for t in THEOREMS if t in applicable]
    if any(t in _CONSTANT_CONCLUSION for t in applicable):
        conclusion = "constant"
    elif "product_totally_geodesic" in applicable:
        conclusion = "totally_geodesic"
    else:
        conclusion = "none"
    return HypothesisReport(c, gap, cls, applicable, conclusion, notes)


@dataclass
class AreaGrowth:
    radii: list[float]
    areas: list[float]
    bounds: list[float]
    truncated: list[bool]
    center: list[float]
    spacing: float

    def within(self, slack: float) -> bool:
        return all(a <= b + slack for a, b in zip(self.areas, self.bounds))

    def to_dict(self) -> dict:
        return asdict(self)


def ball_area_growth(grid: FiberGrid, u, center, radii) -> AreaGrowth:
    """Area of the graph of u (f = 1, n = 2) inside Euclidean balls of R^3.

    The ball is centred at (center, u(center)); each node contributes its
    cell area sqrt(1 + |Du|^2) times its weight when its graph point lies
    inside.  Balls leaving the grid are flagged and a warning is issued.
    """
    if grid.dim != 2:
        raise ValueError("area growth is defined for 2-dimensional fibers")
    u = grid.check(u)
    center = np.asarray(center, dtype=float)
    interp = RegularGridInterpolator(grid.axes, u)
    u0 = float(interp(center[None, :])[0])
    du = gradient(grid, u)
    gi = grid.inv_metric.reshape((-1, 1, 1))
    dA = np.sqrt(1.0 + np.sum(gi * du * du, axis=0)) * grid.weights
    X = grid.coords
    d2 = (X[0] - center[0]) ** 2 + (X[1] - center[1]) ** 2 + (u - u0) ** 2
    lo = np.array([ax[0] for ax in grid.axes])
    hi = np.array([ax[-1] for ax in grid.axes])
    room = float(np.min(np.minimum(center - lo, hi - center)))
    areas, bounds, trunc = [], [], []
    for r in radii:
        areas.append(float(np.sum(dA[d2 <= r * r])))
        bounds.append(2 * math.pi * r * r)
        cut = r > room
        trunc.append(bool(cut))
        if cut:
            warnings.warn(f"ball of radius {r} exceeds the grid; area is truncated", RuntimeWarning)
    return AreaGrowth(list(map(float, radii)), areas, bounds, trunc, center.tolist() + [u0], max(grid.spacing))
