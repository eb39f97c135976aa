"""Catalogue of initial/test fields with analytic first and second derivatives.

Specs are short strings ``name:amplitude[,extra]``:

=============  =====================================================
``const:c``    u = c
``affine:a``   u = a x (+ b y with ``affine:a,b``)
``sin:a``      u = a sin(2 pi x / Lx)
``sincos:a``   u = a sin(2 pi x / Lx) cos(2 pi y / Ly)  (sin on 1-D)
``tanh:a``     u = a tanh(x)
``random:a``   seeded sum of low Fourier modes, max |u| = a
=============  =====================================================
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fiber import FiberGrid

__all__ = ["AnalyticField", "make_field", "random_smooth", "FIELD_NAMES"]

FIELD_NAMES = ("const", "affine", "sin", "sincos", "tanh", "random")


@dataclass(frozen=True)
class AnalyticField:
    value: np.ndarray
    grad: np.ndarray  # (n, *shape)
    hess: np.ndarray  # (n, n, *shape)
    spec: str = ""


def _zeros(grid):
    n = grid.dim
    return np.zeros((n,) + grid.shape), np.zeros((n, n) + grid.shape)


def random_smooth(grid: FiberGrid, amplitude: float, seed: int = 0, max_mode: int = 3) -> AnalyticField:
    """Random trigonometric polynomial with modes |k_i| <= max_mode, scaled to max |u| = amplitude.

    Only modes periodic on the grid extents are used, so on a torus the field
    is smooth across the seam.
    """
    rng = np.random.default_rng(seed)
    n = grid.dim
    X = grid.coords
    ks = np.array(np.meshgrid(*[np.arange(-max_mode, max_mode + 1)] * n, indexing="ij")).reshape(n, -1).T
    ks = ks[np.any(ks != 0, axis=1)]
    u = np.zeros(grid.shape)
    du, hu = _zeros(grid)
    for k in ks:
        a, b = rng.normal(size=2) / (1.0 + np.sum(k**2))
        w = [2 * np.pi * k[i] / grid.extents[i] for i in range(n)]
        phase = sum(w[i] * X[i] for i in range(n))
        c, s = np.cos(phase), np.sin(phase)
        u += a * c + b * s
        for i in range(n):
            du[i] += w[i] * (-a * s + b * c)
            for j in range(n):
                hu[i, j] += -w[i] * w[j] * (a * c + b * s)
    scale = amplitude / np.max(np.abs(u))
    return AnalyticField(u * scale, du * scale, hu * scale, f"random:{amplitude}")


def make_field(grid: FiberGrid, spec: str, seed: int = 0) -> AnalyticField:
    name, _, arg = spec.partition(":")
    args = [float(a) for a in arg.split(",") if a.strip()] if arg else []
    amp = args[0] if args else 1.0
    n = grid.dim
    X = grid.coords
    du, hu = _zeros(grid)
    if name == "const":
        return AnalyticField(np.full(grid.shape, amp), du, hu, spec)
    if name == "affine":
        slopes = (args + [0.0] * n)[:n] if args else [1.0] + [0.0] * (n - 1)
        u = sum(slopes[i] * X[i] for i in range(n))
        for i in range(n):
            du[i] = slopes[i]
        return AnalyticField(u, du, hu, spec)
    if name in ("sin", "sincos"):
        kx = 2 * np.pi / grid.extents[0]
        sx, cx = np.sin(kx * X[0]), np.cos(kx * X[0])
        if name == "sin" or n == 1:
            u = amp * sx
            du[0] = amp * kx * cx
            hu[0, 0] = -amp * kx**2 * sx
            return AnalyticField(u, du, hu, spec)
        ky = 2 * np.pi / grid.extents[1]
        sy, cy = np.sin(ky * X[1]), np.cos(ky * X[1])
        u = amp * sx * cy
        du[0] = amp * kx * cx * cy
        du[1] = -amp * ky * sx * sy
        hu[0, 0] = -amp * kx**2 * sx * cy
        hu[1, 1] = -amp * ky**2 * sx * cy
        hu[0, 1] = hu[1, 0] = -amp * kx * ky * cx * sy
        return AnalyticField(u, du, hu, spec)
    if name == "tanh":
        t = np.tanh(X[0])
        u = amp * t
        du[0] = amp * (1 - t**2)
        hu[0, 0] = -2 * amp * t * (1 - t**2)
        return AnalyticField(u, du, hu, spec)
    if name == "random":
        return random_smooth(grid, amp, seed)
    raise ValueError(f"unknown field preset {name!r}; choose from {FIELD_NAMES}")
