"""Nonlinear solvers for the discrete minimal-graph equation R(u) = 0.

Three methods share one report format:

* ``newton_damped``  Newton with the exact residual Jacobian, globalized
  by pseudo-transient continuation and backtracking on ||R||_2.  On a bounded box only interior nodes are
  unknowns (Dirichlet data on the boundary).  When f is constant on the
  range of u the Jacobian is singular along the gradient null modes, so
  the step is computed from the system bordered by those modes.
* ``descent``        Armijo gradient descent on the volume.
* ``flow_relax``     explicit relaxation u <- u + dt W R / n, a
  preconditioned gradient flow of the volume.
"""
from __future__ import annotations

import json
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from ..fiber import FiberGrid
from ..warp import WarpingFunction
from .variational import check_range, ms_residual, residual_jacobian, volume, volume_gradient

__all__ = [
    "METHODS",
    "SCHEMA_VERSION",
    "SolverConfig",
    "SolverReport",
    "FlowResult",
    "solve_minimal",
    "flow_relax",
    "is_constant",
]

METHODS = ("newton_damped", "descent", "flow_relax")
SCHEMA_VERSION = 1
# pseudo step growth floor and allowed residual rise per continuation step
_PTC_MIN_GROWTH = 1.5
_PTC_MAX_RISE = 1.0


@dataclass(frozen=True)
class SolverConfig:
    method: str = "newton_damped"
    tol_residual: float = 1e-10
    max_iter: int = 50
    damping: float = 1.0
    backtrack: float = 0.5
    dt_safety: float = 0.4
    seed: int = 0
    snapshot_every: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if not 0 < self.dt_safety <= 1:
            raise ValueError("dt_safety must lie in (0, 1]")


@dataclass
class SolverReport:
    method: str
    iterations: int
    residuals: list[float]
    converged: bool
    mean: float
    std: float
    min: float
    max: float
    message: str = ""
    wall_time: float = 0.0
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if not self.residuals:
            raise ValueError("residual history must be non-empty")

    def to_dict(self, include_time: bool = True) -> dict:
        d = asdict(self)
        if not include_time:
            d.pop("wall_time")
        return d

    def to_json(self, include_time: bool = True) -> str:
        return json.dumps(self.to_dict(include_time), indent=2, sort_keys=True)


@dataclass
class FlowResult:
    u: np.ndarray
    report: SolverReport
    snapshots: list[np.ndarray] = field(default_factory=list)
    volumes: list[float] = field(default_factory=list)


def is_constant(u, rel_tol: float = 1e-8) -> bool:
    """std(u) < rel_tol (1 + |mean u|)."""
    u = np.asarray(u)
    return bool(np.std(u) < rel_tol * (1.0 + abs(np.mean(u))))


def _report(method, u, history, converged, message, t0) -> SolverReport:
    return SolverReport(
        method=method,
        iterations=len(history) - 1,
        residuals=[float(r) for r in history],
        converged=bool(converged),
        mean=float(np.mean(u)),
        std=float(np.std(u)),
        min=float(np.min(u)),
        max=float(np.max(u)),
        message=message,
        wall_time=time.perf_counter() - t0,
    )


def _inside(f: WarpingFunction, u: np.ndarray) -> bool:
    """Range check with a margin of 1% of the span for finite intervals."""
    if not np.all(np.isfinite(u)):
        return False
    a, b = f.domain.a, f.domain.b
    span = f.domain.span
    margin = 0.01 * span if np.isfinite(span) else 0.0
    lo = a + margin if np.isfinite(a) else -np.inf
    hi = b - margin if np.isfinite(b) else np.inf
    ok = np.all(u > lo) and np.all(u < hi)
    return bool(ok and np.all(np.isfinite(f.func(u))) and np.all(f.func(u) > 0))


def _flat_on_range(f: WarpingFunction, u: np.ndarray) -> bool:
    return bool(np.all(f.d1(u) == 0) and np.all(f.d2(u) == 0))


def _rnorm(grid, f, u) -> tuple[float, float]:
    R = ms_residual(grid, f, u)
    return float(np.linalg.norm(R)), float(np.max(np.abs(R)))


def _newton_step(grid: FiberGrid, f: WarpingFunction, u: np.ndarray, R: np.ndarray, shift=None) -> np.ndarray:
    """Solve J du = -R on the free nodes, or (J - diag(shift)) du = -R when shifted."""
    J = residual_jacobian(grid, f, u)
    free = np.ravel(grid.interior)
    rhs = -np.ravel(R)[free]
    Jf = J[free][:, free].tocsc()
    if shift is not None:
        Jf = (Jf - sparse.diags(np.ravel(shift)[free])).tocsc()
    if grid.periodic and _flat_on_range(f, u):
        K = grid.null_space()
        k = K.shape[1]
        B = sparse.bmat([[Jf, sparse.csc_matrix(K)], [sparse.csc_matrix(K.T), None]], format="csc")
        sol = spla.spsolve(B, np.concatenate([rhs, np.zeros(k)]))
        step = sol[: Jf.shape[0]]
    else:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                step = spla.splu(Jf).solve(rhs)
        except (RuntimeError, spla.MatrixRankWarning):
            step = spla.lsqr(Jf, rhs, atol=1e-14, btol=1e-14, iter_lim=20 * Jf.shape[0])[0]
    if not np.all(np.isfinite(step)):
        raise np.linalg.LinAlgError("singular Jacobian")
    full = np.zeros(grid.size)
    full[free] = step
    return full.reshape(grid.shape)


def _newton(grid, f, u, cfg: SolverConfig, t0):
    """Pseudo-transient continuation that hands over to damped Newton.

    A continuation step is an implicit Euler step of the relaxation flow
    u_t = W R / n with pseudo time step delta, i.e.
    (n / (W delta) - J) du = R.  delta grows with the residual reduction
    (switched evolution relaxation); once it is large the iteration is plain
    Newton with backtracking, and a failed line search restarts the
    continuation.  Starting from steep data, undamped Newton alone tends to
    wander into far-off plateaus.
    """
    n = grid.dim
    l2, linf = _rnorm(grid, f, u)
    history = [linf]
    dt0 = _flow_dt(grid, f, u, cfg.dt_safety)
    delta = 10 * dt0
    for _ in range(cfg.max_iter):
        if linf <= cfg.tol_residual:
            break
        R = ms_residual(grid, f, u)
        if delta is not None:
            W = np.sqrt(f.func(u) ** 2 + _grad_sq(grid, u))
            try:
                du = _newton_step(grid, f, u, R, shift=n / (W * delta))
            except np.linalg.LinAlgError as exc:
                return u, _report(cfg.method, u, history, False, f"singular Jacobian: {exc}", t0)
            trial = u + du
            t2, tinf = _rnorm(grid, f, trial) if _inside(f, trial) else (np.inf, np.inf)
            if t2 > _PTC_MAX_RISE * l2:
                delta *= 0.25
                if delta < 1e-8 * dt0:
                    return u, _report(cfg.method, u, history, False, "continuation stalled", t0)
                continue
            delta *= float(np.clip(l2 / max(t2, 1e-300), _PTC_MIN_GROWTH, 10.0))
            if delta > 1e8:
                delta = None
            u, l2, linf = trial, t2, tinf
            history.append(linf)
            continue
        try:
            du = _newton_step(grid, f, u, R)
        except np.linalg.LinAlgError as exc:
            return u, _report(cfg.method, u, history, False, f"singular Jacobian: {exc}", t0)
        lam = cfg.damping
        accepted = False
        while lam > 1e-3:
            trial = u + lam * du
            if _inside(f, trial):
                t2, tinf = _rnorm(grid, f, trial)
                if t2 < (1 - 1e-4 * lam) * l2 or tinf <= cfg.tol_residual:
                    accepted = True
                    break
            lam *= cfg.backtrack
        if not accepted:
            delta = 10 * _flow_dt(grid, f, u, cfg.dt_safety)
            continue
        u, l2, linf = trial, t2, tinf
        history.append(linf)
    converged = linf <= cfg.tol_residual
    msg = "converged" if converged else "max_iter reached"
    return u, _report(cfg.method, u, history, converged, msg, t0)


def _descent(grid, f, u, cfg: SolverConfig, t0):
    """Armijo steepest descent on the volume in the weighted inner product."""
    vol = volume(grid, f, u)
    _, linf = _rnorm(grid, f, u)
    history = [linf]
    step = cfg.damping * min(grid.spacing) ** 2
    mask = grid.interior
    for _ in range(cfg.max_iter):
        if linf <= cfg.tol_residual:
            break
        g = np.where(mask, volume_gradient(grid, f, u) / grid.weights, 0.0)
        gg = float(np.sum(grid.weights * g * g))
        lam = step / cfg.backtrack
        accepted = False
        while lam > 1e-16:
            trial = u - lam * g
            if _inside(f, trial):
                tv = volume(grid, f, trial)
                if tv <= vol - 1e-4 * lam * gg:
                    accepted = True
                    break
            lam *= cfg.backtrack
        if not accepted:
            break
        step = lam
        u, vol = trial, tv
        _, linf = _rnorm(grid, f, u)
        history.append(linf)
    converged = linf <= cfg.tol_residual
    msg = "converged" if converged else "max_iter reached"
    return u, _report(cfg.method, u, history, converged, msg, t0)


def _flow_dt(grid: FiberGrid, f: WarpingFunction, u: np.ndarray, safety: float) -> float:
    """Explicit stability cap from the spacing and the largest metric coefficient."""
    n = grid.dim
    fu = f.func(u)
    kappa = float(np.max(grid.inv_metric)) / (n * float(np.min(fu)))
    stiff = kappa * sum(1.0 / h**2 for h in grid.spacing)
    stiff += float(np.max(np.abs(f.d1(u)) ** 2 + np.abs(f.d2(u) * fu))) / float(np.min(fu)) ** 2
    return safety / stiff


def flow_relax(grid: FiberGrid, f: WarpingFunction, u0, cfg: SolverConfig | None = None) -> FlowResult:
    """Relax u along u_t = W R(u) / n until ||R||_inf <= tol.

    The step is recomputed from the current state at every iteration.
    Snapshots are kept every ``cfg.snapshot_every`` steps (0 keeps only the
    first and last state).
    """
    cfg = cfg or SolverConfig(method="flow_relax", max_iter=20000)
    t0 = time.perf_counter()
    u = grid.check(u0).copy()
    check_range(grid, f, u)
    n = grid.dim
    mask = grid.interior
    R = ms_residual(grid, f, u)
    history = [float(np.max(np.abs(R)))]
    snaps = [u.copy()]
    vols = [volume(grid, f, u)]
    scale0 = max(1.0, float(np.max(np.abs(u))))
    message = "max_iter reached"
    for k in range(cfg.max_iter):
        if history[-1] <= cfg.tol_residual:
            message = "converged"
            break
        dt = _flow_dt(grid, f, u, cfg.dt_safety)
        W = np.sqrt(f.func(u) ** 2 + _grad_sq(grid, u))
        trial = u + dt * np.where(mask, W * R / n, 0.0)
        if not _inside(f, trial) or np.max(np.abs(trial)) > 1e3 * scale0:
            message = f"blow-up or domain exit at step {k + 1}"
            break
        u = trial
        R = ms_residual(grid, f, u)
        history.append(float(np.max(np.abs(R))))
        vols.append(volume(grid, f, u))
        if cfg.snapshot_every and (k + 1) % cfg.snapshot_every == 0:
            snaps.append(u.copy())
    if len(snaps) == 1 or not np.array_equal(snaps[-1], u):
        snaps.append(u.copy())
    converged = history[-1] <= cfg.tol_residual
    if converged:
        message = "converged"
    return FlowResult(u, _report("flow_relax", u, history, converged, message, t0), snaps, vols)


def _grad_sq(grid, u):
    from ..fiber import gradient

    p = gradient(grid, u)
    gi = grid.inv_metric.reshape((-1,) + (1,) * grid.dim)
    return np.sum(gi * p * p, axis=0)


def solve_minimal(
    grid: FiberGrid, f: WarpingFunction, u0, cfg: SolverConfig | None = None
) -> tuple[np.ndarray, SolverReport]:
    """Drive ms_residual to zero from u0.

    Non-convergence is reported, never raised.  A u0 outside the domain of
    f raises DomainError.
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    u = grid.check(u0).copy()
    check_range(grid, f, u)
    if cfg.method == "newton_damped":
        return _newton(grid, f, u, cfg, t0)
    if cfg.method == "descent":
        return _descent(grid, f, u, cfg, t0)
    res = flow_relax(grid, f, u, cfg)
    return res.u, res.report
