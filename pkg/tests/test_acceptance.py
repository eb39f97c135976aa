"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or
``python tests/test_acceptance.py``; the lines are also collected into the
terminal summary of a normal pytest run.
"""
import json
import math
import sys
import time

import numpy as np
import pytest
import sympy as sp
from scipy.interpolate import RectBivariateSpline

from warpgraph import analysis, cli, fiber, geometry, warp
from warpgraph.fiber import MetricKind, gradient, laplace_beltrami
from warpgraph.fields import make_field, random_smooth
from warpgraph.solver import (
    first_integral_1d,
    ms_residual,
    psi,
    reduced_residual_1d,
    solve_minimal,
    transformed_residual,
    transformed_residual_1d,
    volume,
    volume_gradient,
)

RESULTS: list[str] = []

_x = sp.symbols("x", real=True)


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  [{number:2d}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _lambdify(expr):
    return sp.lambdify(_x, expr, "numpy")


# --- 1, 2: first integrals --------------------------------------------------------


def test_01_first_integral_a():
    # symbolic oracle: F u' / sqrt(1 + u'^2) simplifies to 1 for u = tanh
    F = sp.sqrt(1 + sp.cosh(_x) ** 4)
    up = sp.diff(sp.tanh(_x), _x)
    assert sp.simplify((F * up / sp.sqrt(1 + up**2)).rewrite(sp.exp) - 1) == 0

    x = np.linspace(-10, 10, 10_000)
    t0 = time.perf_counter()
    C = first_integral_1d(warp.preset("cex_a"), lambda s: 1 / np.cosh(s) ** 2, x)
    elapsed = time.perf_counter() - t0
    dev = float(np.max(np.abs(C - 1)))
    record(1, "first integral, tanh example", dev < 1e-10 and elapsed < 1.0, f"max|C-1| = {dev:.2e}, {elapsed * 1e3:.1f} ms")


def test_02_first_integral_b():
    h = sp.sqrt(2 * _x**4 + 6 * _x**2 + 5) / (_x**2 + 2)
    wp = sp.diff(_x + sp.atan(_x), _x)
    assert sp.simplify(h * wp / sp.sqrt(1 + wp**2) - 1) == 0
    # h^2 - 5/4 and 2 - h^2 are ratios of positive polynomials
    assert sp.factor(h**2 - sp.Rational(5, 4)) == sp.factor(_x**2 * (3 * _x**2 + 4) / (4 * (_x**2 + 2) ** 2))
    assert sp.simplify(2 - h**2 - 2 * _x**2 / (_x**2 + 2) ** 2 - 3 / (_x**2 + 2) ** 2) == 0

    Fb = warp.preset("cex_b")
    x = np.linspace(-10, 10, 10_000)
    C = first_integral_1d(Fb, lambda s: (s * s + 2) / (s * s + 1), x)
    dev = float(np.max(np.abs(C - 1)))
    hs = Fb.func(np.concatenate([np.linspace(-1e3, 1e3, 200_001), np.linspace(-3, 3, 60_001)]))
    lo_ok = hs.min() >= math.sqrt(5) / 2 - 1e-12
    hi_ok = hs.max() < math.sqrt(2)
    ok = dev < 1e-10 and lo_ok and hi_ok and abs(Fb.func(np.array(0.7)) - float(_lambdify(h)(0.7))) < 1e-14
    record(2, "first integral, arctan example", ok, f"max|C-1| = {dev:.2e}, h in [{hs.min():.15f}, {hs.max():.15f}]")


# --- 3: superharmonic witness -----------------------------------------------------


def test_03_witness():
    F = sp.sqrt(1 + sp.cosh(_x) ** 4)
    phi = sp.sech(_x) ** 2
    lap = sp.diff(phi, _x, 2) + sp.diff(F, _x) / F * sp.diff(phi, _x)
    oracle = _lambdify(lap)

    x = np.linspace(-5, 5, 2001)
    ours = analysis.sech_sq_laplacian(x)
    ch = np.cosh(x)
    displayed = 2 * ((ch**2 - 1) ** 2 + 2) / (ch**4 * (1 + ch**4))
    # discrete route on the line of the surface dx^2 + F^2 dy^2
    line = fiber.FiberGrid((401,), (10.0,), "bounded", origin=(-5.0,))
    disc = laplace_beltrami(
        line, MetricKind("warped_surface", density_warp=warp.preset("cex_a")), 1 / np.cosh(line.coords[0]) ** 2
    )[line.interior]

    top = float(np.max(ours))
    gap = float(np.max(np.abs(-ours - displayed)))
    ok = (
        top <= -1e-12
        and gap < 1e-8
        and np.allclose(ours, oracle(x), rtol=0, atol=1e-12)
        and float(np.max(disc)) < 0
    )
    record(3, "superharmonic witness", ok, f"max Laplacian = {top:.3e}, |(-Lap) - closed form| = {gap:.1e}")


# --- 4: slices ----------------------------------------------------------------------


def test_04_slices():
    t = sp.symbols("t", real=True)
    forms = {"cosh": sp.cosh(t), "exp": sp.exp(t), "cex_a": sp.sqrt(1 + sp.cosh(t) ** 4)}
    grid = fiber.torus(8)
    worst_A = worst_H = 0.0
    for name, expr in forms.items():
        ratio = sp.lambdify(t, sp.diff(expr, t) / expr, "numpy")
        for t0 in (-1.3, -0.4, 0.0, 0.9, 2.2):
            s = geometry.assemble_state(grid, warp.preset(name), np.full(grid.shape, t0))
            want = -float(ratio(t0))
            worst_A = max(worst_A, float(np.max(np.abs(s.A - want * np.eye(2)))))
            worst_H = max(worst_H, float(np.max(np.abs(s.H - want))))
    ok = worst_A <= 1e-14 * 4 and worst_H <= 1e-12
    record(4, "slice shape operator", ok, f"max|A + (f'/f) I| = {worst_A:.1e}, max|H + f'/f| = {worst_H:.1e}")


# --- 5: identity suite --------------------------------------------------------------


def test_05_identities():
    grid = fiber.torus(32)
    fld = make_field(grid, "sincos:0.1")
    X, Y = grid.coords
    assert np.array_equal(fld.value, 0.1 * np.sin(2 * np.pi * X) * np.cos(2 * np.pi * Y))

    which = ("norm", "dtau", "dftau", "conf_tau", "conf_ftau", "F_low", "lcos")
    t0 = time.perf_counter()
    orders = {}
    for w in which:
        f = warp.preset("constant" if w == "lcos" else "cosh")
        rep = geometry.identity_report(w, f, field_spec="sincos:0.1", resolutions=(32, 64, 128))
        orders[w] = rep.observed_order
    elapsed = time.perf_counter() - t0
    ok = all(o >= 1.9 for o in orders.values()) and elapsed < 120
    detail = ", ".join(f"{w} {o:.3f}" for w, o in orders.items())
    record(5, "Laplacian identities", ok, f"orders {detail}; {elapsed:.1f} s")


# --- 6, 7: solver reproductions ------------------------------------------------------


def test_06_uniqueness_cosh():
    grid = fiber.torus(64)
    f = warp.preset("cosh")
    rows, ok = [], True
    for seed in (0, 1, 2):
        fld = random_smooth(grid, 0.04, seed=seed)
        slope = float(np.max(np.sqrt(np.sum(fld.grad**2, axis=0)) / f.func(fld.value)))
        assert slope <= 0.5
        u, rep = solve_minimal(grid, f, fld.value)
        good = rep.converged and rep.iterations <= 30 and rep.std < 1e-8 and abs(rep.mean) < 1e-6
        ok &= good
        rows.append(f"seed {seed}: c={slope:.2f} it={rep.iterations} std={rep.std:.1e} mean={rep.mean:.1e}")
    record(6, "constant solutions for cosh warping", ok, "; ".join(rows))


def test_07_product_case():
    grid = fiber.torus(32)
    flat = warp.preset("constant")
    stds = []
    for seed in (0, 1, 2):
        u, rep = solve_minimal(grid, flat, random_smooth(grid, 0.3, seed=seed).value)
        stds.append(rep.std if rep.converged else math.inf)
    line = fiber.box(41, 1)
    x = line.coords[0]
    u, rep = solve_minimal(line, flat, x + 0.3 * np.sin(np.pi * x))
    err = float(np.max(np.abs(u - x))) if rep.converged else math.inf
    ok = max(stds) < 1e-8 and err < 1e-8 and u[0] == 0.0 and u[-1] == 1.0
    record(7, "product case", ok, f"torus max std {max(stds):.1e}; Dirichlet line max|u - x| = {err:.1e}")


# --- 8: variational consistency -----------------------------------------------------


def test_08_variational():
    rng = np.random.default_rng(8)
    worst = 0.0
    for k in range(20):
        if k % 2:
            grid, f = fiber.box(13), warp.preset("exp")
        else:
            grid, f = fiber.torus(12), warp.preset("cosh")
        u = random_smooth(grid, rng.uniform(0.05, 0.6), seed=k).value
        v = rng.standard_normal(grid.shape)
        eps = 1e-5
        fd = (volume(grid, f, u + eps * v) - volume(grid, f, u - eps * v)) / (2 * eps)
        an = float(np.sum(grid.weights * volume_gradient(grid, f, u) * v))
        worst = max(worst, abs(fd - an) / max(abs(fd), 1e-300))

    grid, f = fiber.torus(24), warp.preset("cosh")
    u0 = make_field(grid, "sincos:0.2").value
    u, _ = solve_minimal(grid, f, u0)
    zero_sets = []
    for w in (u0, u):
        vg = volume_gradient(grid, f, w)
        R = ms_residual(grid, f, w)
        zero_sets.append((np.abs(vg) < 1e-9, np.abs(R) < 1e-9))
        assert np.allclose(vg, -f.func(w) ** 2 * R, rtol=1e-13, atol=1e-13)
    same = all(np.array_equal(a, b) for a, b in zero_sets)
    ok = worst < 1e-6 and same and not zero_sets[0][0].all() and zero_sets[1][0].all()
    record(8, "volume gradient", ok, f"max relative FD gap {worst:.1e}; zero sets agree: {same}")


# --- 9: quasi-isometry ----------------------------------------------------------------


def test_09_quasi_isometry():
    f = warp.preset("cosh")
    grid = fiber.FiberGrid((16, 12), (1.0, 1.0), "periodic")
    rng = np.random.default_rng(9)
    worst = 0.0
    ok = True
    for k in range(20):
        u = random_smooth(grid, rng.uniform(0.05, 1.5), seed=100 + k).value
        q = analysis.quasi_isometry_check(grid, f, u)
        # direct route: eigenvalues of I + Du Du^T / f(u)^2 node by node
        p = gradient(grid, u) / f.func(u)
        M = np.eye(2) + np.einsum("i...,j...->...ij", p, p)
        lam = np.linalg.eigvalsh(M.reshape(-1, 2, 2))
        c = float(np.max(np.sqrt(np.sum(p * p, axis=0))))
        ok &= q.passed and 1 - 1e-10 <= lam.min() and lam.max() <= 1 + c * c + 1e-10
        ok &= abs(q.lam_max - lam.max()) < 1e-12 * lam.max() and abs(q.lam_min - lam.min()) < 1e-12
        worst = max(worst, q.lam_max / (1 + q.c**2))
    record(9, "quasi-isometry bounds", ok, f"max lam_max / (1 + c^2) = {worst:.15f}")


# --- 10: transform consistency -------------------------------------------------------


def test_10_transform():
    pairs = []
    # 1-D samples: tanh over the surface with density cosh-quartic
    Fa = warp.preset("cex_a")
    x = np.linspace(-10, 10, 10_000)
    tt = np.tanh(x)
    du, d2u = 1 - tt**2, -2 * tt * (1 - tt**2)
    for f in (warp.preset("constant"), warp.preset("cosh")):
        R = reduced_residual_1d(Fa, f, tt, du, d2u, x)
        v = psi(f, tt)
        fu = f.func(tt)
        # v is the antiderivative of 1/f along u; its slope is u'/f
        assert np.allclose(np.gradient(v, x), du / fu, atol=1e-3)
        T = transformed_residual_1d(Fa, f, tt, du, d2u, x)
        pairs.append((float(np.max(np.abs(R))), float(np.max(np.abs(T)))))
    # slices and a solved graph in T^2 with cosh warping
    grid, f = fiber.torus(24), warp.preset("cosh")
    solved, _ = solve_minimal(grid, f, make_field(grid, "sincos:0.2").value)
    candidates = [np.full(grid.shape, t0) for t0 in (0.0, 0.3, -1.0)]
    candidates += [solved, make_field(grid, "sincos:0.1").value]
    for u in candidates:
        ref = float(np.min(u))
        R = ms_residual(grid, f, u)
        T = transformed_residual(grid, f, psi(f, u, ref), ref)
        pairs.append((float(np.max(np.abs(R))), float(np.max(np.abs(T)))))
    agree = all((r < 1e-8) == (t < 1e-6) for r, t in pairs)
    n_min = sum(r < 1e-8 for r, _ in pairs)
    ok = agree and n_min == 3
    detail = ", ".join(f"({r:.0e}, {t:.0e})" for r, t in pairs)
    record(10, "transformed equation", ok, f"{n_min} minimal inputs; (residual, transformed) = {detail}")


# --- 11: area growth ------------------------------------------------------------------


def _spline_area(grid, u, center, r, refine=6):
    """Area of the graph inside the ball, from a bicubic spline of u."""
    xs, ys = grid.axes
    spl = RectBivariateSpline(xs, ys, u, kx=3, ky=3)
    m = refine * (len(xs) - 1) + 1
    fx = np.linspace(xs[0], xs[-1], m)
    fy = np.linspace(ys[0], ys[-1], m)
    U = spl(fx, fy)
    Ux = spl(fx, fy, dx=1)
    Uy = spl(fx, fy, dy=1)
    u0 = float(spl.ev(center[0], center[1]))
    XX, YY = np.meshgrid(fx, fy, indexing="ij")
    inside = (XX - center[0]) ** 2 + (YY - center[1]) ** 2 + (U - u0) ** 2 <= r * r
    dA = np.sqrt(1 + Ux**2 + Uy**2) * (fx[1] - fx[0]) * (fy[1] - fy[0])
    return float(np.sum(dA[inside]))


def test_11_area_growth():
    grid = fiber.box(81, length=4.0, origin=-2.0)
    u, rep = solve_minimal(grid, warp.preset("constant"), make_field(grid, "sincos:0.3").value)
    assert rep.converged
    radii = (0.5, 1.0, 1.5)
    ag = analysis.ball_area_growth(grid, u, (0.0, 0.0), radii)
    h = ag.spacing
    other = [_spline_area(grid, u, (0.0, 0.0), r) for r in radii]
    routes_agree = all(abs(a - b) < 2 * math.pi * r * h + 1e-3 for a, b, r in zip(ag.areas, other, radii))
    ok = ag.within(5 * h) and routes_agree and not any(ag.truncated)
    detail = ", ".join(f"r={r}: {a:.4f} (spline {b:.4f}) <= {2 * math.pi * r * r + 5 * h:.4f}" for r, a, b in zip(radii, ag.areas, other))
    record(11, "area growth", ok, detail)


# --- 12: determinism --------------------------------------------------------------------


def test_12_determinism(tmp_path):
    argv = ["solve", "--preset", "cosh", "--grid", "torus2:32", "--init", "random:0.1", "--seed", "3"]
    blobs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        code = cli.main([*argv, "--out", str(out)])
        rep = json.loads((out / "solve.json").read_text())
        rep["solver"].pop("wall_time")
        rep["config"]["output"].pop("dir")
        rep.pop("files")
        blobs.append((code, json.dumps(rep, sort_keys=True), (out / "u.csv").read_bytes(), (out / "state.csv").read_bytes()))
    ok = blobs[0] == blobs[1] and blobs[0][0] == 0
    record(12, "deterministic solve reports", ok, f"exit {blobs[0][0]}, {len(blobs[0][1])} report bytes identical: {blobs[0] == blobs[1]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
