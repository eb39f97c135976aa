import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from warpgraph import fiber, warp
from warpgraph.fields import make_field, random_smooth
from warpgraph.fiber import MetricError, MetricKind

GRIDS = [
    lambda: fiber.torus(24, 1),
    lambda: fiber.torus(16, 2),
    lambda: fiber.box(17, 1),
    lambda: fiber.box(13, 2, length=2.0, origin=-1.0),
    lambda: fiber.FiberGrid((12, 9), (1.0, 2.0), "bounded", metric=(1.0, 4.0)),
]


@pytest.mark.parametrize("make", GRIDS)
def test_summation_by_parts(make, rng):
    grid = make()
    phi = rng.normal(size=grid.shape)
    X = rng.normal(size=(grid.dim,) + grid.shape)
    lhs = np.sum(grid.weights * np.sum(fiber.gradient(grid, phi) * X, axis=0))
    rhs = -np.sum(grid.weights * phi * fiber.divergence(grid, X))
    assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(lhs)))


@pytest.mark.parametrize("make", GRIDS)
def test_gradient_kills_null_space(make):
    grid = make()
    K = grid.null_space()
    assert np.allclose(K.T @ K, np.eye(K.shape[1]), atol=1e-12)
    for col in K.T:
        g = fiber.gradient(grid, col.reshape(grid.shape))
        assert np.max(np.abs(g)) < 1e-12


def test_null_space_size():
    assert fiber.torus(16, 2).null_space().shape[1] == 4
    assert fiber.torus(15, 2).null_space().shape[1] == 1
    assert fiber.box(16, 2).null_space().shape[1] == 1


@pytest.mark.parametrize("make", GRIDS)
def test_sparse_matrices_match_operators(make, rng):
    grid = make()
    phi = rng.normal(size=grid.shape)
    X = rng.normal(size=(grid.dim,) + grid.shape)
    for i in range(grid.dim):
        D = fiber.derivative_matrix(grid, i)
        assert np.allclose(D @ phi.ravel(), fiber.gradient(grid, phi)[i].ravel(), atol=1e-12)
    div = sum(fiber.divergence_matrix(grid, i) @ X[i].ravel() for i in range(grid.dim))
    assert np.allclose(div, fiber.divergence(grid, X).ravel(), atol=1e-10)


def test_constant_has_zero_gradient():
    grid = fiber.box(9, 2)
    assert np.all(fiber.gradient(grid, np.full(grid.shape, 3.0)) == 0)


def test_shape_mismatch():
    with pytest.raises(ValueError, match="does not match"):
        fiber.gradient(fiber.torus(8), np.zeros((8, 9)))


def _orders(errors):
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]


def test_flat_laplacian_second_order():
    errs = []
    for N in (16, 32, 64):
        grid = fiber.torus(N)
        X, Y = grid.coords
        phi = np.sin(2 * np.pi * X) * np.cos(4 * np.pi * Y)
        exact = -20 * np.pi**2 * phi
        errs.append(np.max(np.abs(fiber.laplacian(grid, phi) - exact)))
    assert min(_orders(errs)) >= 1.9


# Independent oracle: symbolic Laplace-Beltrami of the graph metric
_xs, _ys = sp.symbols("x y", real=True)
_u = sp.Rational(1, 5) * sp.sin(2 * sp.pi * _xs) * sp.cos(2 * sp.pi * _ys)
_phi = sp.cos(2 * sp.pi * _xs) + sp.sin(2 * sp.pi * _ys)


def _symbolic_lb(fexpr):
    t = sp.Symbol("t")
    fu = fexpr(t).subs(t, _u)
    du = [sp.diff(_u, v) for v in (_xs, _ys)]
    G = sp.Matrix(2, 2, lambda i, j: du[i] * du[j] + (fu**2 if i == j else 0))
    Gi = G.inv()
    rho = sp.sqrt(G.det())
    grad = [sp.diff(_phi, v) for v in (_xs, _ys)]
    flux = [rho * sum(Gi[i, j] * grad[j] for j in range(2)) for i in range(2)]
    lap = (sp.diff(flux[0], _xs) + sp.diff(flux[1], _ys)) / rho
    return sp.lambdify((_xs, _ys), lap, "numpy")


@pytest.mark.parametrize("name,fexpr", [("constant", lambda t: sp.Integer(1)), ("cosh", sp.cosh)])
def test_graph_laplace_beltrami_against_symbolic(name, fexpr):
    exact_fn = _symbolic_lb(fexpr)
    u_fn = sp.lambdify((_xs, _ys), _u, "numpy")
    phi_fn = sp.lambdify((_xs, _ys), _phi, "numpy")
    f = warp.preset(name)
    errs = []
    for N in (32, 64, 128):
        grid = fiber.torus(N)
        X, Y = grid.coords
        lap = fiber.laplace_beltrami(grid, MetricKind.graph(u_fn(X, Y), f), phi_fn(X, Y))
        errs.append(np.max(np.abs(lap - exact_fn(X, Y))))
    assert min(_orders(errs)) >= 1.9


def test_warped_surface_laplacian_on_line():
    F = warp.preset("cex_a")
    errs = []
    for N in (101, 201, 401):
        line = fiber.FiberGrid((N,), (4.0,), "bounded", origin=(-2.0,))
        x = line.coords[0]
        lap = fiber.laplace_beltrami(line, MetricKind("warped_surface", density_warp=F), np.sin(x))
        exact = -np.sin(x) + F.d1(x) / F.func(x) * np.cos(x)
        errs.append(np.max(np.abs(lap - exact)[line.interior][2:-2]))
    assert min(_orders(errs)) >= 1.8


def test_grad_norm_fiber_metric():
    grid = fiber.FiberGrid((32, 32), (1.0, 1.0), "periodic", metric=(1.0, 4.0))
    fld = make_field(grid, "sincos:0.2")
    got = fiber.grad_norm_sq(grid, MetricKind.fiber(), fld.value)
    d = fiber.gradient(grid, fld.value)
    assert np.allclose(got, d[0] ** 2 + d[1] ** 2 / 4.0)


def test_singular_explicit_metric():
    grid = fiber.torus(8)
    M = np.zeros(grid.shape + (2, 2))
    with pytest.raises(MetricError):
        fiber.laplace_beltrami(grid, MetricKind("explicit", matrices=M), np.zeros(grid.shape))


def test_metric_kind_validation():
    with pytest.raises(ValueError):
        MetricKind("graph_gu")
    with pytest.raises(ValueError):
        MetricKind("weird")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 2.0))
def test_conformal_eigen_bounds(seed, amp):
    grid = fiber.torus(16)
    f = warp.preset("cosh")
    u = random_smooth(grid, amp, seed=seed).value
    d = fiber.gradient(grid, u)
    c = float(np.max(np.sqrt(np.sum(d * d, axis=0)) / f.func(u)))
    lo, hi = fiber.metric_eigen_bounds(grid, MetricKind.conformal(u, f), MetricKind.fiber())
    assert lo >= 1 - 1e-10
    assert hi <= 1 + c * c + 1e-10
    assert hi == pytest.approx(1 + c * c, rel=1e-10)
