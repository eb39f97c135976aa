"""Discrete volume functional of a graph and its first variation.

With Du from central differences and node weights w of (M, g),

    vol(u) = sum_k w_k f(u_k)^(n-1) sqrt(f(u_k)^2 + |Du_k|^2).

`volume_gradient` is the exact w-weighted gradient of this sum, so
<volume_gradient(u), v>_w is the derivative of vol(u + t v) at t = 0.
The minimal-surface residual is that gradient divided by -f(u)^n: in the
continuum limit it equals

    div(Du / (f W)) - (f'(u) / W) (n - |Du|^2 / f^2),   W = sqrt(f^2 + |Du|^2),

and it vanishes exactly where the volume gradient does.
"""
from __future__ import annotations

import numpy as np
from scipy import sparse

from ..fiber import FiberGrid, derivative_matrix, divergence, divergence_matrix, gradient
from ..warp import DomainError, WarpingFunction

__all__ = ["check_range", "volume", "volume_gradient", "ms_residual", "residual_jacobian"]


def check_range(grid: FiberGrid, f: WarpingFunction, u: np.ndarray) -> None:
    """u(M) must lie in the open interval of f."""
    bad = ~f.domain.contains(u) | ~np.isfinite(u)
    if np.any(bad):
        nodes = [tuple(int(i) for i in idx) for idx in np.argwhere(bad)[:5]]
        raise DomainError(f"u leaves ({f.domain.a}, {f.domain.b}) at nodes {nodes}")


def _parts(grid: FiberGrid, f: WarpingFunction, u):
    u = grid.check(u)
    check_range(grid, f, u)
    p = gradient(grid, u)
    gi = grid.inv_metric.reshape((-1,) + (1,) * grid.dim)
    q = np.sum(gi * p * p, axis=0)
    fu, f1, f2 = f.func(u), f.d1(u), f.d2(u)
    W = np.sqrt(fu * fu + q)
    return u, p, gi, q, fu, f1, f2, W


def volume(grid: FiberGrid, f: WarpingFunction, u) -> float:
    n = grid.dim
    _, _, _, _, fu, _, _, W = _parts(grid, f, u)
    return float(np.sum(grid.weights * fu ** (n - 1) * W))


def volume_gradient(grid: FiberGrid, f: WarpingFunction, u) -> np.ndarray:
    n = grid.dim
    _, p, gi, _, fu, f1, _, W = _parts(grid, f, u)
    L_u = (n - 1) * fu ** (n - 2) * f1 * W + fu**n * f1 / W
    P = fu ** (n - 1) * gi * p / W
    return L_u - divergence(grid, P)


def ms_residual(grid: FiberGrid, f: WarpingFunction, u) -> np.ndarray:
    """Minimal-surface residual; a slice u = t0 gives -n f'(t0)/f(t0).

    Boundary nodes of a bounded box carry Dirichlet data and are set to 0.
    """
    n = grid.dim
    u = grid.check(u)
    R = -volume_gradient(grid, f, u) / f.func(u) ** n
    return np.where(grid.interior, R, 0.0)


def residual_jacobian(grid: FiberGrid, f: WarpingFunction, u) -> sparse.csr_matrix:
    """Exact derivative of `ms_residual` (before boundary masking), C-order flattening."""
    n = grid.dim
    _, p, gi, q, fu, f1, f2, W = _parts(grid, f, u)
    W3 = W**3
    fn1 = fu ** (n - 1)
    fn2 = fu ** (n - 2)
    L_u = (n - 1) * fn2 * f1 * W + fu**n * f1 / W
    P = fn1 * gi * p / W
    vg = L_u - divergence(grid, P)

    Pu = gi * p * fn2 * f1 * ((n - 1) / W - fu**2 / W3)
    L_uu = (
        (n - 1) * ((n - 2) * fu ** (n - 3) * f1**2 + fn2 * f2) * W
        + (n - 1) * fn2 * f1 * fu * f1 / W
        + (n * fn1 * f1**2 + fu**n * f2) / W
        - fu ** (n + 1) * f1**2 / W3
    )

    D = [derivative_matrix(grid, i) for i in range(n)]
    Div = [divergence_matrix(grid, i) for i in range(n)]
    diag = lambda a: sparse.diags(np.ravel(a))

    J = diag(L_uu)
    for i in range(n):
        J = J + diag(Pu[i]) @ D[i]
    for j in range(n):
        dPj = diag(Pu[j])
        for i in range(n):
            Pji = fn1 * gi[j] * ((1.0 if i == j else 0.0) / W - gi[i] * p[i] * p[j] / W3)
            dPj = dPj + diag(Pji) @ D[i]
        J = J - Div[j] @ dPj
    scale = fu**n
    dR = -diag(1 / scale) @ J + diag(n * f1 / fu ** (n + 1) * vg)
    return dR.tocsr()
