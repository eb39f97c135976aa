"""Change of variable v = psi(u), psi(t) = integral of 1/f from u_ref to t.

The minimal-graph equation becomes

    div(Dv / Q) - n f'(psi^{-1}(v)) / Q = 0,   Q = sqrt(1 + |Dv|^2),

and in the continuum its left side is f(u) times the residual of u.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from ..fiber import FiberGrid, divergence, gradient
from ..warp import DomainError, WarpingFunction, cumulative_integral

__all__ = ["psi", "psi_inverse", "transformed_residual"]


def _recip(f: WarpingFunction):
    def g(t):
        with np.errstate(over="ignore"):
            return 1.0 / f.func(t)

    return g


def psi(f: WarpingFunction, u, u_ref: float | None = None) -> np.ndarray:
    """psi(u); u_ref defaults to min(u)."""
    u = np.asarray(u, dtype=float)
    f.domain.check(u)
    ref = float(np.min(u)) if u_ref is None else float(u_ref)
    f.domain.check(ref)
    return cumulative_integral(_recip(f), u, ref)


def _expand(f: WarpingFunction, ref: float, side: int, k: int) -> float:
    edge = f.domain.b if side > 0 else f.domain.a
    if np.isfinite(edge):
        return edge - (edge - ref) * 2.0**-k
    return ref + side * (2.0**k - 1.0)


def _psi_point(g, ref: float, t: float) -> float:
    # long brackets: adaptive quadrature instead of fixed-width pieces
    with warnings.catch_warnings(), np.errstate(over="ignore"):
        warnings.simplefilter("ignore", IntegrationWarning)
        return float(quad(lambda s: float(g(np.asarray(s))), ref, t, limit=500)[0])


def psi_inverse(f: WarpingFunction, v, u_ref: float, tol: float = 1e-13, max_iter: int = 200) -> np.ndarray:
    """Solve psi(t) = v by safeguarded Newton (psi' = 1/f > 0) inside a bracket.

    Raises DomainError when some v lies outside the range of psi.
    """
    v = np.asarray(v, dtype=float)
    flat = v.ravel()
    g = _recip(f)
    lo = np.full(flat.shape, float(u_ref))
    hi = lo.copy()
    for side in (1, -1):
        pending = flat * side > 0
        prev = float(u_ref)
        k = 0
        while np.any(pending):
            k += 1
            t = _expand(f, u_ref, side, k)
            pt = _psi_point(g, u_ref, t)
            if k > 60 or not np.isfinite(pt):
                raise DomainError("v outside the range of psi")
            done = pending & (flat * side <= pt * side)
            if side > 0:
                lo[done], hi[done] = prev, t
            else:
                lo[done], hi[done] = t, prev
            pending &= ~done
            prev = t
    t = 0.5 * (lo + hi)
    for _ in range(max_iter):
        r = cumulative_integral(g, t, u_ref) - flat
        lo = np.where(r < 0, t, lo)
        hi = np.where(r > 0, t, hi)
        newton = t - r * f.func(t)
        bad = ~((newton >= lo) & (newton <= hi)) | ~np.isfinite(newton)
        t_new = np.where(bad, 0.5 * (lo + hi), newton)
        if np.all(np.abs(t_new - t) <= tol * (1 + np.abs(t))):
            t = t_new
            break
        t = t_new
    return t.reshape(v.shape)


def transformed_residual(grid: FiberGrid, f: WarpingFunction, v, u_ref: float) -> np.ndarray:
    """Discrete div(Dv/Q) - n f'(psi^{-1}(v)) / Q; boundary nodes of a box set to 0."""
    v = grid.check(v)
    n = grid.dim
    u = psi_inverse(f, v, u_ref)
    p = gradient(grid, v)
    gi = grid.inv_metric.reshape((-1,) + (1,) * n)
    Q = np.sqrt(1.0 + np.sum(gi * p * p, axis=0))
    T = divergence(grid, gi * p / Q) - n * f.d1(u) / Q
    return np.where(grid.interior, T, 0.0)
