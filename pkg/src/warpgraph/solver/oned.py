"""One-dimensional reductions.

A graph t = u(x) over the surface (R^2, dx^2 + F(x)^2 dy^2) that does not
depend on y.  In a product ambient (f = 1) the minimal-graph equation has
the first integral

    F(x) u'(x) / sqrt(1 + u'(x)^2) = C,

so u' = C / sqrt(F^2 - C^2) wherever F^2 > C^2.
"""
from __future__ import annotations

from dataclasses import dataclass
import numpy as np
from scipy.integrate import solve_ivp

from ..warp import WarpingFunction

__all__ = [
    "first_integral_1d",
    "first_integral_spread",
    "OdeResult",
    "ode_solve_1d",
    "warped_surface_laplacian",
    "reduced_residual_1d",
    "transformed_residual_1d",
    "phi_map",
]


def _call(F, x):
    return F.func(x) if isinstance(F, WarpingFunction) else F(x)


def first_integral_1d(F, du, xs) -> np.ndarray:
    """C(x) = F(x) u'(x) / sqrt(1 + u'(x)^2); ``du`` is a callable or sampled u'."""
    xs = np.asarray(xs, dtype=float)
    p = du(xs) if callable(du) else np.asarray(du, dtype=float)
    return _call(F, xs) * p / np.sqrt(1.0 + p * p)


def first_integral_spread(C: np.ndarray) -> float:
    """max |C - median C|."""
    return float(np.max(np.abs(C - np.median(C))))


@dataclass
class OdeResult:
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    reach: tuple[float, float]
    singular: bool
    message: str


def ode_solve_1d(
    F, C: float, x0: float, u0: float, span: tuple[float, float], xs=None, rtol: float = 1e-12, atol: float = 1e-14
) -> OdeResult:
    """Integrate u' = C / sqrt(F^2 - C^2) from (x0, u0) in both directions.

    Integration stops where F^2 - C^2 reaches zero; ``reach`` is the part
    of ``span`` actually covered and ``singular`` says whether a stop
    occurred.  Samples requested outside the reach are dropped.
    """
    lo, hi = float(span[0]), float(span[1])
    if not lo <= x0 <= hi:
        raise ValueError("x0 must lie in span")
    xs = np.linspace(lo, hi, 1001) if xs is None else np.asarray(xs, dtype=float)

    def gap(x):
        return float(_call(F, np.asarray(x))) ** 2 - C * C

    if gap(x0) <= 0:
        raise ValueError(f"F(x0)^2 <= C^2 at x0={x0}")

    def rhs(x, y):
        g = gap(x)
        return [C / np.sqrt(g) if g > 0 else np.inf]

    def event(x, y):
        return gap(x) - 1e-14

    event.terminal = True

    reach = [x0, x0]
    singular = False
    parts_x, parts_u = [np.array([x0])], [np.array([u0])]
    for k, end in ((0, lo), (1, hi)):
        if end == x0:
            continue
        want = xs[(xs < x0) if k == 0 else (xs > x0)]
        want = want[::-1] if k == 0 else want
        sol = solve_ivp(
            rhs, (x0, end), [u0], method="DOP853", rtol=rtol, atol=atol, events=event, dense_output=True
        )
        stop = float(sol.t[-1])
        # status 1: event fired; -1: the step size collapsed just before it
        if sol.status != 0:
            singular = True
        reach[k] = stop
        keep = want[(want >= stop) if k == 0 else (want <= stop)]
        if len(keep) and sol.sol is not None:
            parts_x.append(keep)
            parts_u.append(sol.sol(keep)[0])
    x = np.concatenate(parts_x)
    u = np.concatenate(parts_u)
    order = np.argsort(x)
    x, u = x[order], u[order]
    keep = np.isin(x, xs) | (x == x0) & np.isin(x0, xs)
    x, u = x[keep], u[keep]
    du = C / np.sqrt(_call(F, x) ** 2 - C * C)
    msg = "singular point reached" if singular else "ok"
    return OdeResult(x, u, du, (reach[0], reach[1]), singular, msg)


def warped_surface_laplacian(F: WarpingFunction, phi, dphi, d2phi, x) -> np.ndarray:
    """Laplacian of a y-independent function on dx^2 + F(x)^2 dy^2: phi'' + (F'/F) phi'."""
    x = np.asarray(x, dtype=float)
    return np.asarray(d2phi) + F.d1(x) / F.func(x) * np.asarray(dphi)


def reduced_residual_1d(F: WarpingFunction, f: WarpingFunction, u, du, d2u, x) -> np.ndarray:
    """Minimal-graph residual of t = u(x) in I x_f (R^2, dx^2 + F^2 dy^2), n = 2.

    div(Du/(f W)) - (f'/W)(2 - |Du|^2/f^2) with W = sqrt(f^2 + u'^2), all
    derivatives analytic.
    """
    x = np.asarray(x, dtype=float)
    u, p, pp = (np.asarray(a, dtype=float) for a in (u, du, d2u))
    fu, f1 = f.func(u), f.d1(u)
    W = np.sqrt(fu**2 + p**2)
    dW = (fu * f1 * p + p * pp) / W
    Phi = p / (fu * W)
    dPhi = pp / (fu * W) - p * (f1 * p * W + fu * dW) / (fu * W) ** 2
    div = dPhi + F.d1(x) / F.func(x) * Phi
    return div - (f1 / W) * (2.0 - p**2 / fu**2)


def transformed_residual_1d(F: WarpingFunction, f: WarpingFunction, u, du, d2u, x) -> np.ndarray:
    """Residual of v = psi(u) in div(Dv/Q) - 2 f'(u)/Q, Q = sqrt(1 + |Dv|^2).

    Uses v' = u'/f(u) and v'' = u''/f - f' u'^2 / f^2; equals f(u) times
    `reduced_residual_1d`.
    """
    x = np.asarray(x, dtype=float)
    u, p, pp = (np.asarray(a, dtype=float) for a in (u, du, d2u))
    fu, f1 = f.func(u), f.d1(u)
    v1 = p / fu
    v2 = pp / fu - f1 * p**2 / fu**2
    Q = np.sqrt(1.0 + v1**2)
    return v2 / Q**3 + F.d1(x) / F.func(x) * v1 / Q - 2.0 * f1 / Q


def phi_map(s):
    """s / sqrt(1 + s^2): the flux map of the transformed equation."""
    s = np.asarray(s, dtype=float)
    # written as sign(s)/sqrt(1 + s^-2) so that rounding cannot break monotonicity
    with np.errstate(divide="ignore", over="ignore"):
        far = np.sign(s) / np.sqrt(1.0 + 1.0 / (s * s))
    return np.where(np.abs(s) < 1e-150, s, far)
