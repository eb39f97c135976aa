import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import CubicSpline

from warpgraph import fiber, warp
from warpgraph.fields import make_field, random_smooth
from warpgraph.solver import (
    SolverConfig,
    first_integral_1d,
    first_integral_spread,
    flow_relax,
    ms_residual,
    ode_solve_1d,
    phi_map,
    psi,
    psi_inverse,
    reduced_residual_1d,
    residual_jacobian,
    solve_minimal,
    transformed_residual,
    transformed_residual_1d,
    volume,
    volume_gradient,
)
from warpgraph.warp import DomainError


# --- volume ---------------------------------------------------------------------

@pytest.mark.parametrize("t0", [-0.7, 0.0, 1.2])
def test_volume_of_slice(cosh, t0):
    grid = fiber.torus(16)
    assert volume(grid, cosh, np.full(grid.shape, t0)) == pytest.approx(math.cosh(t0) ** 2, rel=1e-14)


def test_volume_of_planar_graph(flat):
    grid = fiber.box(21)
    a = 0.7
    assert volume(grid, flat, a * grid.coords[0]) == pytest.approx(math.sqrt(1 + a * a), rel=1e-13)
    assert volume(fiber.torus(16), flat, np.zeros((16, 16))) == pytest.approx(1.0)


def test_volume_domain_violation():
    f = warp.preset("one_minus_t")
    with pytest.raises(DomainError, match="nodes"):
        volume(fiber.torus(8), f, np.full((8, 8), 1.5))


@pytest.mark.parametrize("make", [lambda: fiber.torus(12), lambda: fiber.box(11), lambda: fiber.torus(20, 1)])
@pytest.mark.parametrize("name", ["cosh", "exp", "constant"])
def test_volume_gradient_matches_centered_difference(make, name, rng):
    grid = make()
    f = warp.preset(name)
    u = random_smooth(grid, 0.5, seed=int(rng.integers(1000))).value
    v = rng.normal(size=grid.shape)
    eps = 1e-6
    fd = (volume(grid, f, u + eps * v) - volume(grid, f, u - eps * v)) / (2 * eps)
    an = float(np.sum(grid.weights * volume_gradient(grid, f, u) * v))
    assert abs(fd - an) <= 1e-6 * max(abs(fd), 1e-3)


def test_slice_criticality(cosh):
    grid = fiber.torus(8)
    assert np.max(np.abs(volume_gradient(grid, cosh, np.zeros(grid.shape)))) == 0.0
    g = volume_gradient(grid, cosh, np.ones(grid.shape))
    assert np.all(g > 0)
    np.testing.assert_allclose(ms_residual(grid, cosh, np.ones(grid.shape)), -2 * math.tanh(1.0), rtol=1e-14)


@pytest.mark.parametrize("make", [lambda: fiber.torus(10), lambda: fiber.box(9), lambda: fiber.torus(9, 1)])
@pytest.mark.parametrize("name", ["cosh", "exp", "cex_a"])
def test_jacobian_matches_finite_differences(make, name, rng):
    grid = make()
    f = warp.preset(name)
    u = random_smooth(grid, 0.3, seed=2).value
    J = residual_jacobian(grid, f, u)
    v = rng.normal(size=grid.shape)
    eps = 1e-6
    plus = -volume_gradient(grid, f, u + eps * v) / f.func(u + eps * v) ** grid.dim
    minus = -volume_gradient(grid, f, u - eps * v) / f.func(u - eps * v) ** grid.dim
    fd = (plus - minus) / (2 * eps)
    np.testing.assert_allclose(J @ v.ravel(), fd.ravel(), atol=1e-6 * (1 + np.abs(fd).max()))


# --- nonlinear solvers ---------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(method="magic")
    with pytest.raises(ValueError):
        SolverConfig(tol_residual=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)
    with pytest.raises(ValueError):
        SolverConfig(damping=1.5)


def test_newton_cosh_goes_to_zero_slice(cosh):
    grid = fiber.torus(32)
    u0 = make_field(grid, "sincos:0.3").value
    u, rep = solve_minimal(grid, cosh, u0)
    assert rep.converged and rep.iterations <= 30
    assert rep.residuals[-1] <= 1e-10
    assert rep.std < 1e-8 and abs(rep.mean) < 1e-6


def test_newton_product_case_gives_constant(flat):
    grid = fiber.torus(24)
    for seed in range(2):
        u, rep = solve_minimal(grid, flat, random_smooth(grid, 0.4, seed=seed).value)
        assert rep.converged and rep.std < 1e-8


def test_newton_dirichlet_line(flat):
    grid = fiber.box(41, 1)
    x = grid.coords[0]
    u, rep = solve_minimal(grid, flat, x + 0.3 * np.sin(np.pi * x))
    assert rep.converged
    assert np.max(np.abs(u - x)) < 1e-8


def test_non_convergence_is_reported(cosh):
    grid = fiber.torus(16)
    u, rep = solve_minimal(grid, cosh, make_field(grid, "sincos:0.3").value, SolverConfig(max_iter=1))
    assert not rep.converged and rep.iterations == 1 and len(rep.residuals) == 2


def test_iterates_stay_in_domain():
    # cosh on (0.5, 3) has no minimal slice; Newton heads for t = 0 and must stop short
    f = warp.preset("cosh", (0.5, 3.0))
    grid = fiber.torus(12)
    u, rep = solve_minimal(grid, f, np.full(grid.shape, 0.8) + 0.05 * make_field(grid, "sincos:1").value)
    assert not rep.converged
    assert np.all(u > 0.5 + 0.01 * 2.5)


def test_solver_is_deterministic(cosh):
    grid = fiber.torus(16)
    u0 = random_smooth(grid, 0.2, seed=7).value
    a = solve_minimal(grid, cosh, u0)
    b = solve_minimal(grid, cosh, u0)
    assert np.array_equal(a[0], b[0])
    assert a[1].to_json(include_time=False) == b[1].to_json(include_time=False)


def test_report_keys(cosh):
    grid = fiber.torus(8)
    _, rep = solve_minimal(grid, cosh, np.zeros(grid.shape))
    d = rep.to_dict()
    for key in ("iterations", "residuals", "mean", "std", "converged", "schema_version"):
        assert key in d
    assert rep.converged and rep.iterations == 0


def test_flow_keeps_minimal_slice(cosh):
    grid = fiber.torus(12, 1)
    res = flow_relax(grid, cosh, np.zeros(grid.shape), SolverConfig(method="flow_relax", max_iter=5))
    assert res.report.converged
    assert all(np.all(s == 0) for s in res.snapshots)


def test_flow_flattens_product_graph(flat):
    grid = fiber.torus(32, 1)
    cfg = SolverConfig(method="flow_relax", max_iter=20000, tol_residual=1e-9)
    res = flow_relax(grid, flat, np.sin(2 * np.pi * grid.coords[0]), cfg)
    assert res.report.converged and res.report.std < 1e-8
    hist = np.array(res.report.residuals)
    assert np.all(np.diff(hist[10:]) <= 0)
    assert np.all(np.diff(res.volumes) <= 1e-15)
    u_newton, _ = solve_minimal(grid, flat, np.sin(2 * np.pi * grid.coords[0]))
    assert abs(res.report.mean - float(np.mean(u_newton))) < 1e-6


def test_flow_cosh_relaxes_to_zero(cosh):
    grid = fiber.torus(16, 1)
    cfg = SolverConfig(method="flow_relax", max_iter=30000, tol_residual=1e-8)
    res = flow_relax(grid, cosh, np.full(grid.shape, 0.5), cfg)
    assert res.report.converged
    assert abs(res.report.mean) < 1e-8


def test_flow_domain_exit_is_caught():
    f = warp.preset("cosh", (0.5, 3.0))
    grid = fiber.torus(8, 1)
    res = flow_relax(grid, f, np.full(grid.shape, 0.6), SolverConfig(method="flow_relax", max_iter=10_000))
    assert not res.report.converged
    assert "exit" in res.report.message
    assert np.all(res.u > 0.525)


def test_descent_decreases_volume(cosh):
    grid = fiber.torus(16, 1)
    u0 = 0.4 + 0.1 * np.sin(2 * np.pi * grid.coords[0])
    u, rep = solve_minimal(grid, cosh, u0, SolverConfig(method="descent", max_iter=2000, tol_residual=1e-8))
    assert volume(grid, cosh, u) < volume(grid, cosh, u0)
    assert rep.residuals[-1] < 0.1 * rep.residuals[0]
    assert abs(rep.mean) < 0.1


# --- one-dimensional reductions ---------------------------------------------------

def test_first_integrals_of_counterexamples():
    x = np.linspace(-10, 10, 10_000)
    Ca = first_integral_1d(warp.preset("cex_a"), lambda s: 1 / np.cosh(s) ** 2, x)
    Cb = first_integral_1d(warp.preset("cex_b"), lambda s: (s * s + 2) / (s * s + 1), x)
    assert np.max(np.abs(Ca - 1)) < 1e-10
    assert np.max(np.abs(Cb - 1)) < 1e-10
    assert first_integral_spread(Ca) < 1e-10


def test_first_integral_of_constant_is_zero(cosh):
    x = np.linspace(-1, 1, 11)
    assert np.all(first_integral_1d(cosh, np.zeros_like(x), x) == 0)


def test_ode_recovers_tanh():
    F = warp.preset("cex_a")
    res = ode_solve_1d(F, 1.0, 0.0, 0.0, (-5.0, 5.0))
    assert not res.singular and res.reach == (-5.0, 5.0)
    assert np.max(np.abs(res.u - np.tanh(res.x))) < 1e-6
    # first integral of the output, with u' from an independent spline fit
    spline = CubicSpline(res.x, res.u)
    inner = slice(20, -20)
    C = first_integral_1d(F, spline.derivative()(res.x[inner]), res.x[inner])
    assert np.max(np.abs(C - 1)) < 1e-6


def test_ode_trivial_cases(flat):
    res = ode_solve_1d(flat, 0.0, 0.0, 2.0, (-1.0, 1.0))
    assert np.all(res.u == 2.0)
    res = ode_solve_1d(flat, 1 / math.sqrt(2), 0.25, 1.0, (-1.0, 2.0))
    assert np.max(np.abs(res.u - (1.0 + res.x - 0.25))) < 1e-12


def test_ode_stops_at_singular_point():
    # h < 1.2 near the origin, so the integration from x = 5 must stop before 0
    F = warp.preset("cex_b")
    res = ode_solve_1d(F, 1.2, 5.0, 0.0, (-5.0, 5.0))
    assert res.singular
    assert 0 < res.reach[0] < 5.0
    assert F.func(np.array(res.reach[0])) == pytest.approx(1.2, abs=1e-6)
    with pytest.raises(ValueError):
        ode_solve_1d(F, 1.2, 0.0, 0.0, (-5.0, 5.0))


def test_reduced_residuals():
    x = np.linspace(-8, 8, 2001)
    t = np.tanh(x)
    du, d2u = 1 - t * t, -2 * t * (1 - t * t)
    Fa, flat = warp.preset("cex_a"), warp.preset("constant")
    assert np.max(np.abs(reduced_residual_1d(Fa, flat, t, du, d2u, x))) < 1e-12
    assert np.max(np.abs(transformed_residual_1d(Fa, flat, t, du, d2u, x))) < 1e-12
    # a non-solution is detected
    assert np.max(np.abs(reduced_residual_1d(Fa, flat, 2 * t, 2 * du, 2 * d2u, x))) > 1e-2
    # T = f R for a genuinely warped ambient
    c = warp.preset("cosh")
    u = 0.3 * np.sin(x)
    R = reduced_residual_1d(Fa, c, u, 0.3 * np.cos(x), -u, x)
    T = transformed_residual_1d(Fa, c, u, 0.3 * np.cos(x), -u, x)
    np.testing.assert_allclose(T, np.cosh(u) * R, atol=1e-13)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e6, 1e6, allow_nan=False), st.floats(0, 1e3))
def test_phi_map_properties(s, ds):
    a, b = phi_map(s), phi_map(s + ds)
    assert abs(a) < 1
    assert phi_map(-s) == -a
    assert b >= a


# --- psi transform --------------------------------------------------------------------

def test_psi_of_product_is_shift(flat):
    u = np.linspace(-1, 2, 31)
    np.testing.assert_allclose(psi(flat, u), u + 1, atol=1e-14)


def test_psi_exp_closed_form_and_round_trip():
    f = warp.preset("exp")
    u = np.linspace(-3, 2, 101)
    v = psi(f, u, -3.0)
    np.testing.assert_allclose(v, math.exp(3) - np.exp(-u), atol=1e-12)
    np.testing.assert_allclose(psi_inverse(f, v, -3.0), u, atol=1e-10)
    with pytest.raises(DomainError):
        psi_inverse(f, np.array([math.exp(3) + 0.5]), -3.0)


def test_psi_round_trip_finite_domain():
    f = warp.preset("one_minus_t")
    u = np.linspace(-2, 0.95, 40)
    v = psi(f, u, 0.0)
    np.testing.assert_allclose(v, -np.log(1 - u), atol=1e-12)
    np.testing.assert_allclose(psi_inverse(f, v, 0.0), u, atol=1e-10)


def test_transformed_residual_equals_ms_residual_in_product(flat):
    grid = fiber.torus(24)
    u = make_field(grid, "sincos:0.3").value
    ref = float(u.min())
    T = transformed_residual(grid, flat, psi(flat, u, ref), ref)
    np.testing.assert_allclose(T, ms_residual(grid, flat, u), atol=1e-9)


def test_transformed_residual_converges_to_f_times_residual(cosh):
    errs = []
    for N in (32, 64, 128):
        grid = fiber.torus(N)
        u = make_field(grid, "sincos:0.2").value
        ref = float(u.min())
        T = transformed_residual(grid, cosh, psi(cosh, u, ref), ref)
        errs.append(np.max(np.abs(T - np.cosh(u) * ms_residual(grid, cosh, u))))
    assert math.log2(errs[0] / errs[1]) > 1.8 and math.log2(errs[1] / errs[2]) > 1.8
