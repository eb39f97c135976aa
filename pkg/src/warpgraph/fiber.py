"""Flat fiber grids and metric-aware difference operators.

Fields are plain numpy arrays indexed ``[ix]`` or ``[ix, iy]`` (axis 0 is x).
Vector fields carry the component index first: shape ``(n, *grid.shape)``.

The gradient is the second-order central difference; on bounded boxes the
boundary rows are first-order one-sided.  The divergence is *defined* as the
negative adjoint of the gradient under the node weights (uniform on tori,
trapezoid on boxes), so summation by parts holds to round-off:

    sum(w * grad(phi)[i] * X[i]) == -sum(w * phi * div(X))

Metrics are given per node as symmetric n x n matrices:

* ``fiber_g``        the constant diagonal fiber metric g,
* ``graph_gu``       G = du du^T + f(u)^2 g, induced on the graph of u,
* ``conformal_ghat`` G / f(u)^2,
* ``warped_surface`` dx^2 + F(x)^2 dy^2 acting on y-independent fields over a
  1-D grid (the y direction only contributes the density F),
* ``explicit``       user-supplied matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse

from .warp import WarpingFunction

__all__ = [
    "MetricError",
    "FiberGrid",
    "torus",
    "box",
    "gradient",
    "raise_index",
    "divergence",
    "hessian",
    "laplacian",
    "derivative_matrix",
    "divergence_matrix",
    "MetricKind",
    "metric_field",
    "metric_matrix",
    "grad_norm_sq",
    "laplace_beltrami",
    "metric_eigen_bounds",
]


class MetricError(ArithmeticError):
    """A metric matrix is singular or not positive definite."""


@dataclass(frozen=True)
class FiberGrid:
    counts: tuple[int, ...]
    extents: tuple[float, ...]
    topology: str = "periodic"
    origin: tuple[float, ...] | None = None
    metric: tuple[float, ...] | None = None
    boundary: str = "dirichlet"

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "extents", tuple(float(e) for e in self.extents))
        if self.dim not in (1, 2):
            raise ValueError("only 1-D and 2-D fibers are supported")
        if len(self.extents) != self.dim:
            raise ValueError("extents and counts differ in length")
        if self.topology not in ("periodic", "bounded"):
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.boundary not in ("dirichlet", "one-sided"):
            raise ValueError(f"unknown boundary policy {self.boundary!r}")
        if min(self.counts) < 3:
            raise ValueError("need at least 3 nodes per axis")
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * self.dim)
        if self.metric is None:
            object.__setattr__(self, "metric", (1.0,) * self.dim)
        if len(self.metric) != self.dim or min(self.metric) <= 0:
            raise ValueError("fiber metric must be diagonal with positive entries")

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    @property
    def periodic(self) -> bool:
        return self.topology == "periodic"

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        if self.periodic:
            return tuple(L / c for L, c in zip(self.extents, self.counts))
        return tuple(L / (c - 1) for L, c in zip(self.extents, self.counts))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(o + h * np.arange(c) for o, h, c in zip(self.origin, self.spacing, self.counts))

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def inv_metric(self) -> np.ndarray:
        return 1.0 / np.asarray(self.metric)

    @cached_property
    def axis_weights(self) -> tuple[np.ndarray, ...]:
        out = []
        for h, c in zip(self.spacing, self.counts):
            w = np.full(c, h)
            if not self.periodic:
                w[0] = w[-1] = h / 2
            out.append(w)
        return tuple(out)

    @cached_property
    def weights(self) -> np.ndarray:
        """Node measure of (M, g): quadrature weight times sqrt(det g)."""
        w = np.sqrt(np.prod(self.metric))
        for i, wa in enumerate(self.axis_weights):
            shape = [1] * self.dim
            shape[i] = -1
            w = w * wa.reshape(shape)
        return np.broadcast_to(w, self.shape).copy()

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        if not self.periodic:
            for i in range(self.dim):
                idx = [slice(None)] * self.dim
                idx[i] = 0
                mask[tuple(idx)] = False
                idx[i] = -1
                mask[tuple(idx)] = False
        return mask

    @cached_property
    def _d1(self) -> tuple[np.ndarray, ...]:
        return tuple(_first_difference(c, h, self.periodic) for c, h in zip(self.counts, self.spacing))

    @cached_property
    def _d2(self) -> tuple[np.ndarray, ...]:
        return tuple(_second_difference(c, h, self.periodic) for c, h in zip(self.counts, self.spacing))

    def check(self, arr, vector: bool = False) -> np.ndarray:
        arr = np.asarray(arr, dtype=float)
        want = ((self.dim,) if vector else ()) + self.shape
        if arr.shape != want:
            raise ValueError(f"field shape {arr.shape} does not match grid {want}")
        return arr

    def null_space(self) -> np.ndarray:
        """Orthonormal basis (columns, C-order flattening) of the kernel of the gradient.

        Constants always; on periodic axes with an even node count the
        alternating mode (-1)^i is also annihilated by central differences.
        """
        per_axis = []
        for c in self.counts:
            modes = [np.ones(c)]
            if self.periodic and c % 2 == 0:
                modes.append((-1.0) ** np.arange(c))
            per_axis.append(modes)
        cols = []
        if self.dim == 1:
            cols = [m for m in per_axis[0]]
        else:
            cols = [np.multiply.outer(a, b).ravel() for a in per_axis[0] for b in per_axis[1]]
        K = np.array(cols).T
        return K / np.linalg.norm(K, axis=0)


def torus(n: int, dim: int = 2, length: float = 1.0, **kw) -> FiberGrid:
    return FiberGrid((n,) * dim, (length,) * dim, "periodic", **kw)


def box(n: int, dim: int = 2, length: float = 1.0, origin: float = 0.0, **kw) -> FiberGrid:
    return FiberGrid((n,) * dim, (length,) * dim, "bounded", origin=(origin,) * dim, **kw)


def _first_difference(c: int, h: float, periodic: bool) -> np.ndarray:
    D = np.zeros((c, c))
    i = np.arange(c)
    if periodic:
        D[i, (i + 1) % c] += 0.5 / h
        D[i, (i - 1) % c] -= 0.5 / h
    else:
        j = i[1:-1]
        D[j, j + 1] = 0.5 / h
        D[j, j - 1] = -0.5 / h
        D[0, :2] = [-1 / h, 1 / h]
        D[-1, -2:] = [-1 / h, 1 / h]
    return D


def _second_difference(c: int, h: float, periodic: bool) -> np.ndarray:
    D = np.zeros((c, c))
    i = np.arange(c)
    h2 = h * h
    if periodic:
        D[i, (i + 1) % c] += 1 / h2
        D[i, (i - 1) % c] += 1 / h2
        D[i, i] -= 2 / h2
    else:
        j = i[1:-1]
        D[j, j + 1] = 1 / h2
        D[j, j - 1] = 1 / h2
        D[j, j] = -2 / h2
        D[0, :3] = [1 / h2, -2 / h2, 1 / h2]
        D[-1, -3:] = [1 / h2, -2 / h2, 1 / h2]
    return D


def _along(M: np.ndarray, arr: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(M, arr, axes=([1], [axis])), 0, axis)


def gradient(grid: FiberGrid, phi) -> np.ndarray:
    """Coordinate partials d_i phi, shape (n, *grid.shape)."""
    phi = grid.check(phi)
    return np.stack([_along(grid._d1[i], phi, i) for i in range(grid.dim)])


def raise_index(grid: FiberGrid, dphi) -> np.ndarray:
    """g^{-1} applied to a covector field: the fiber-metric gradient."""
    ginv = grid.inv_metric.reshape((-1,) + (1,) * grid.dim)
    return ginv * np.asarray(dphi)


def divergence(grid: FiberGrid, X) -> np.ndarray:
    """Negative adjoint of `gradient` under the node weights."""
    X = grid.check(X, vector=True)
    out = np.zeros(grid.shape)
    for i in range(grid.dim):
        w = grid.axis_weights[i]
        shape = [1] * grid.dim
        shape[i] = -1
        w = w.reshape(shape)
        out -= _along(grid._d1[i].T, w * X[i], i) / w
    return out


def hessian(grid: FiberGrid, phi) -> np.ndarray:
    """Second partials, shape (n, n, *grid.shape).

    Pure second derivatives use the compact three-point stencil; mixed ones
    compose central first differences.
    """
    phi = grid.check(phi)
    n = grid.dim
    H = np.empty((n, n) + grid.shape)
    for i in range(n):
        H[i, i] = _along(grid._d2[i], phi, i)
        for j in range(i + 1, n):
            H[i, j] = H[j, i] = _along(grid._d1[j], _along(grid._d1[i], phi, i), j)
    return H


def laplacian(grid: FiberGrid, phi) -> np.ndarray:
    """Flat fiber Laplacian div(g^{-1} grad phi)."""
    return divergence(grid, raise_index(grid, gradient(grid, phi)))


def _kron_axis(grid: FiberGrid, M1d, axis: int) -> sparse.csr_matrix:
    mats = [sparse.identity(c, format="csr") for c in grid.counts]
    mats[axis] = sparse.csr_matrix(M1d)
    out = mats[0]
    for m in mats[1:]:
        out = sparse.kron(out, m, format="csr")
    return out.tocsr()


def derivative_matrix(grid: FiberGrid, axis: int) -> sparse.csr_matrix:
    """Sparse form of the axis-`axis` gradient on C-order flattened fields."""
    return _kron_axis(grid, grid._d1[axis], axis)


def divergence_matrix(grid: FiberGrid, axis: int) -> sparse.csr_matrix:
    w = grid.axis_weights[axis]
    M = -(grid._d1[axis].T * w[None, :]) / w[:, None]
    return _kron_axis(grid, M, axis)


# --- metrics -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricKind:
    """Which metric to use on the fiber chart.

    ``du`` overrides the discrete gradient of ``u`` (e.g. with analytic
    derivatives); ``density_warp`` is the F of the warped_surface metric.
    """

    tag: str
    u: np.ndarray | None = None
    f: WarpingFunction | None = None
    du: np.ndarray | None = None
    density_warp: WarpingFunction | None = None
    matrices: np.ndarray | None = None

    def __post_init__(self):
        tags = ("fiber_g", "graph_gu", "conformal_ghat", "warped_surface", "explicit")
        if self.tag not in tags:
            raise ValueError(f"unknown metric tag {self.tag!r}")
        if self.tag in ("graph_gu", "conformal_ghat") and (self.u is None or self.f is None):
            raise ValueError(f"{self.tag} needs u and f")
        if self.tag == "warped_surface" and self.density_warp is None:
            raise ValueError("warped_surface needs density_warp")
        if self.tag == "explicit" and self.matrices is None:
            raise ValueError("explicit metric needs matrices")

    @classmethod
    def fiber(cls) -> "MetricKind":
        return cls("fiber_g")

    @classmethod
    def graph(cls, u, f, du=None) -> "MetricKind":
        return cls("graph_gu", u=np.asarray(u, dtype=float), f=f, du=du)

    @classmethod
    def conformal(cls, u, f, du=None) -> "MetricKind":
        return cls("conformal_ghat", u=np.asarray(u, dtype=float), f=f, du=du)


def metric_field(grid: FiberGrid, kind: MetricKind) -> np.ndarray:
    """Per-node metric matrices, shape (*grid.shape, n, n)."""
    n = grid.dim
    g = np.broadcast_to(np.diag(grid.metric), grid.shape + (n, n))
    if kind.tag in ("fiber_g", "warped_surface"):
        return g.copy()
    if kind.tag == "explicit":
        M = np.asarray(kind.matrices, dtype=float)
        if M.shape != grid.shape + (n, n):
            raise ValueError("explicit metric has the wrong shape")
        return M
    u = grid.check(kind.u)
    du = gradient(grid, u) if kind.du is None else grid.check(kind.du, vector=True)
    fu = kind.f.eval(u)
    dd = np.moveaxis(du, 0, -1)
    G = dd[..., :, None] * dd[..., None, :] + (fu**2)[..., None, None] * g
    if kind.tag == "conformal_ghat":
        G = G / (fu**2)[..., None, None]
    return G


def metric_matrix(grid: FiberGrid, kind: MetricKind, node) -> np.ndarray:
    return metric_field(grid, kind)[tuple(np.atleast_1d(node))]


def _density(grid: FiberGrid, kind: MetricKind, G: np.ndarray) -> np.ndarray:
    det = np.linalg.det(G)
    if np.any(~(det > 0)):
        raise MetricError("metric is singular or indefinite at some node")
    rho = np.sqrt(det)
    if kind.tag == "warped_surface":
        rho = rho * kind.density_warp.eval(grid.coords[0])
    return rho


def _solve(G: np.ndarray, v: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(G, v[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise MetricError(str(exc)) from exc


def grad_norm_sq(grid: FiberGrid, kind: MetricKind, phi) -> np.ndarray:
    """G^{ij} d_i phi d_j phi per node."""
    G = metric_field(grid, kind)
    dphi = np.moveaxis(gradient(grid, phi), 0, -1)
    out = np.sum(_solve(G, dphi) * dphi, axis=-1)
    return np.maximum(out, 0.0)


def laplace_beltrami(grid: FiberGrid, kind: MetricKind, phi) -> np.ndarray:
    """(1/rho) div(rho G^{-1} grad phi) with rho = sqrt(det G)."""
    G = metric_field(grid, kind)
    rho = _density(grid, kind, G)
    dphi = np.moveaxis(gradient(grid, phi), 0, -1)
    flux = np.moveaxis(_solve(G, dphi), -1, 0)
    return divergence(grid, rho * flux) / rho


def metric_eigen_bounds(grid: FiberGrid, kind_a: MetricKind, kind_b: MetricKind) -> tuple[float, float]:
    """Range of the generalized eigenvalues of metric A relative to metric B."""
    A = metric_field(grid, kind_a)
    B = metric_field(grid, kind_b)
    try:
        L = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise MetricError("reference metric is not positive definite") from exc
    Linv = np.linalg.inv(L)
    C = Linv @ A @ np.swapaxes(Linv, -1, -2)
    lam = np.linalg.eigvalsh(0.5 * (C + np.swapaxes(C, -1, -2)))
    return float(lam.min()), float(lam.max())
