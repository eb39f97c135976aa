"""Warping functions f > 0 on an open interval, with analytic derivatives.

A warping function carries f, f' and f'' as vectorized callables.  The presets
have hand-coded derivatives; tabulated warpings are C2 cubic splines so that
the derivatives stay consistent with the samples.

`classify_warping` reduces the hypotheses of the uniqueness theorems to
numeric proxies over a finite sampling window.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, interpolate, optimize

__all__ = [
    "DomainError",
    "InvalidWarpingError",
    "IntervalDomain",
    "WarpingFunction",
    "PRESETS",
    "preset",
    "from_table",
    "from_spec",
    "eval_bundle",
    "EndpointIntegral",
    "endpoint_integral",
    "WarpClassification",
    "classify_warping",
    "cumulative_integral",
]


class DomainError(ValueError):
    """Raised when a warping function is evaluated outside its open interval."""


class InvalidWarpingError(ValueError):
    """Raised when a sampled warping function is not strictly positive."""


@dataclass(frozen=True)
class IntervalDomain:
    a: float = -math.inf
    b: float = math.inf

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"empty interval ({self.a}, {self.b})")

    @property
    def span(self) -> float:
        return self.b - self.a

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (t > self.a) & (t < self.b)

    def check(self, t) -> None:
        t = np.asarray(t, dtype=float)
        bad = ~self.contains(t) | ~np.isfinite(t)
        if np.any(bad):
            worst = t[bad].ravel()[:5]
            raise DomainError(f"values {worst.tolist()} outside ({self.a}, {self.b})")

    def window(self, half_width: float = 10.0) -> tuple[float, float]:
        """Finite sub-box used for sampling; equals the domain when it is bounded."""
        a, b = self.a, self.b
        if math.isinf(a) and math.isinf(b):
            return -half_width, half_width
        if math.isinf(a):
            return b - 2 * half_width, b
        if math.isinf(b):
            return a, a + 2 * half_width
        return a, b


@dataclass(frozen=True)
class WarpingFunction:
    """A positive function on an open interval with its first two derivatives.

    The callables must accept and return numpy arrays.  Instances are
    immutable and can be shared between threads.
    """

    name: str
    domain: IntervalDomain
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    d1: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    d2: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    kind: str = "preset"

    def __call__(self, t):
        return self.eval(t)

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        self.domain.check(t)
        return self.func(t)

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        self.domain.check(t)
        return self.d1(t)

    def deriv2(self, t):
        t = np.asarray(t, dtype=float)
        self.domain.check(t)
        return self.d2(t)

    def log_deriv2(self, t):
        """(log f)'' = (f'' f - f'^2) / f^2."""
        f, f1, f2 = self.eval(t), self.deriv(t), self.deriv2(t)
        return (f2 * f - f1 * f1) / (f * f)

    def with_domain(self, a: float, b: float) -> "WarpingFunction":
        return WarpingFunction(self.name, IntervalDomain(a, b), self.func, self.d1, self.d2, self.kind)

    def scaled(self, lam: float) -> "WarpingFunction":
        if lam <= 0:
            raise ValueError("scale must be positive")
        return WarpingFunction(
            f"{lam:g}*{self.name}",
            self.domain,
            lambda t: lam * self.func(t),
            lambda t: lam * self.d1(t),
            lambda t: lam * self.d2(t),
            self.kind,
        )


# --- presets -----------------------------------------------------------------

def _constant(t):
    return np.ones_like(t)


def _zero(t):
    return np.zeros_like(t)


def _log_form(p, p1, p2):
    """f = sqrt(p): returns (f, f', f'') from p and its derivatives."""
    f = np.sqrt(p)
    f1 = p1 / (2 * f)
    f2 = p2 / (2 * f) - p1 * p1 / (4 * p * f)
    return f, f1, f2


def _cex_a(t):
    c, s = np.cosh(t), np.sinh(t)
    return _log_form(1 + c**4, 4 * c**3 * s, 12 * c**2 * s**2 + 4 * c**4)


def _cex_b(t):
    # h = sqrt(P) / Q, differentiated through log h = log(P)/2 - log Q
    P = 2 * t**4 + 6 * t**2 + 5
    P1 = 8 * t**3 + 12 * t
    P2 = 24 * t**2 + 12
    Q = t**2 + 2
    Q1 = 2 * t
    h = np.sqrt(P) / Q
    l1 = P1 / (2 * P) - Q1 / Q
    l2 = (P2 * P - P1**2) / (2 * P**2) - (2 * Q - Q1**2) / Q**2
    return h, h * l1, h * (l1**2 + l2)


PRESETS: dict[str, tuple[Callable, Callable, Callable, IntervalDomain]] = {
    "constant": (_constant, _zero, _zero, IntervalDomain()),
    "cosh": (np.cosh, np.sinh, np.cosh, IntervalDomain()),
    "exp": (np.exp, np.exp, np.exp, IntervalDomain()),
    # sqrt(1 + cosh^4 x), the fiber warping of the first counterexample
    "cex_a": (lambda t: _cex_a(t)[0], lambda t: _cex_a(t)[1], lambda t: _cex_a(t)[2], IntervalDomain()),
    # sqrt(2x^4 + 6x^2 + 5) / (x^2 + 2), the parabolic second counterexample
    "cex_b": (lambda t: _cex_b(t)[0], lambda t: _cex_b(t)[1], lambda t: _cex_b(t)[2], IntervalDomain()),
    "one_minus_t": (lambda t: 1.0 - t, lambda t: -np.ones_like(t), _zero, IntervalDomain(-math.inf, 1.0)),
}


def preset(name: str, domain: tuple[float, float] | None = None) -> WarpingFunction:
    try:
        func, d1, d2, dom = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown warping preset {name!r}; choose from {sorted(PRESETS)}") from None
    if domain is not None:
        dom = IntervalDomain(*domain)
    return WarpingFunction(name, dom, func, d1, d2, "preset")


def from_table(source, name: str | None = None) -> WarpingFunction:
    """Tabulated warping from a two-column CSV path or a (t, f) pair of arrays.

    The domain is the open interval between the first and last abscissa.
    """
    if isinstance(source, (tuple, list)) and len(source) == 2:
        t, fv = (np.asarray(a, dtype=float) for a in source)
        name = name or "table"
    else:
        rows = []
        with open(source, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except ValueError:
                    continue  # header line
        if not rows:
            raise ValueError(f"{source}: no numeric rows")
        t, fv = np.array(rows).T
        name = name or str(source)
    order = np.argsort(t)
    t, fv = t[order], fv[order]
    if len(t) < 4:
        raise ValueError("a tabulated warping needs at least 4 samples")
    if np.any(fv <= 0):
        raise InvalidWarpingError("tabulated warping has non-positive samples")
    spline = interpolate.CubicSpline(t, fv, bc_type="not-a-knot")
    d1, d2 = spline.derivative(1), spline.derivative(2)
    return WarpingFunction(
        name,
        IntervalDomain(float(t[0]), float(t[-1])),
        lambda s: spline(s),
        lambda s: d1(s),
        lambda s: d2(s),
        "tabulated",
    )


def from_spec(spec: dict) -> WarpingFunction:
    """Build a warping from a config mapping ``{preset: name}`` or ``{table: path}``."""
    domain = spec.get("domain")
    if "preset" in spec:
        return preset(spec["preset"], tuple(domain) if domain else None)
    if "table" in spec:
        f = from_table(spec["table"])
        return f.with_domain(*domain) if domain else f
    raise ValueError("warp spec needs a 'preset' or a 'table' key")


def eval_bundle(f: WarpingFunction, t: float) -> tuple[float, float, float, float]:
    """(f, f', f'', (log f)'') at an interior point."""
    if not f.domain.contains(t):
        raise DomainError(f"t={t} outside ({f.domain.a}, {f.domain.b})")
    t = np.asarray(float(t))
    v = (float(f.eval(t)), float(f.deriv(t)), float(f.deriv2(t)), float(f.log_deriv2(t)))
    if not all(math.isfinite(x) for x in v):
        raise DomainError(f"non-finite derivative bundle at t={float(t)}")
    return v


# --- integrals ---------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


def cumulative_integral(g: Callable, values, ref: float, max_piece: float = 0.25) -> np.ndarray:
    """Integral of g from ref to each entry of values.

    Breakpoints are the sorted distinct values; each gap is split into pieces
    no longer than max_piece and integrated with 20-point Gauss-Legendre.
    """
    values = np.asarray(values, dtype=float)
    pts = np.unique(np.concatenate([values.ravel(), [ref]]))
    gaps = np.diff(pts)
    acc = np.zeros(len(pts))
    if len(gaps):
        npieces = np.maximum(1, np.ceil(gaps / max_piece).astype(int))
        seg_vals = np.empty(len(gaps))
        for k in np.unique(npieces):
            idx = np.nonzero(npieces == k)[0]
            lo, hi = pts[idx], pts[idx + 1]
            edges = lo[:, None] + (hi - lo)[:, None] * np.linspace(0, 1, k + 1)[None, :]
            a, b = edges[:, :-1], edges[:, 1:]
            nodes = 0.5 * (a + b)[..., None] + 0.5 * (b - a)[..., None] * _GL_X
            seg_vals[idx] = np.sum(0.5 * (b - a)[..., None] * _GL_W * g(nodes), axis=(1, 2))
        acc[1:] = np.cumsum(seg_vals)
    acc -= acc[np.searchsorted(pts, ref)]
    return acc[np.searchsorted(pts, values)]


@dataclass(frozen=True)
class EndpointIntegral:
    finite: bool
    value: float
    error_estimate: float
    indeterminate: bool = False
    windows: int = 0


def endpoint_integral(
    f: WarpingFunction,
    side: str,
    c: float | None = None,
    *,
    rtol: float = 1e-12,
    atol: float = 1e-14,
    cap: float = 1e12,
    max_windows: int = 80,
    first_width: float = 1.0,
    burn_in: int = 8,
) -> EndpointIntegral:
    """Decide whether f is integrable near endpoint a (``side='a'``) or b.

    The integral from c toward the endpoint is accumulated over windows whose
    width doubles toward an infinite endpoint, or halves toward a finite one.
    Each window is integrated adaptively (QUADPACK).  The verdict is finite
    once two consecutive windows are negligible, divergent when the running
    sum passes `cap` or three consecutive windows past the first `burn_in`
    stop shrinking, and
    indeterminate otherwise.
    """
    if side not in ("a", "b"):
        raise ValueError("side must be 'a' or 'b'")
    dom = f.domain
    if c is None:
        lo, hi = dom.window()
        c = 0.5 * (lo + hi)
    if not dom.contains(c):
        raise DomainError(f"c={c} outside the domain")
    end = dom.a if side == "a" else dom.b
    sign = -1.0 if side == "a" else 1.0

    def piece(lo, hi):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(lambda s: float(f.func(np.asarray(s))), lo, hi, limit=200)
        return val, err

    if math.isinf(end):
        edges = [c + sign * first_width * (2.0**k - 1.0) for k in range(max_windows + 1)]
    else:
        gap = abs(end - c)
        edges = [end - sign * gap * 2.0**-k for k in range(max_windows + 1)]

    total, err_total = 0.0, 0.0
    prev = None
    small, stalled = 0, 0
    for k in range(max_windows):
        lo, hi = sorted((edges[k], edges[k + 1]))
        val, err = piece(lo, hi)
        total += val
        err_total += err
        if not math.isfinite(total) or abs(total) > cap:
            return EndpointIntegral(False, math.nan, math.inf, False, k + 1)
        if abs(val) <= atol + rtol * abs(total):
            small += 1
            if small >= 2:
                # geometric tail estimate from the last ratio
                return EndpointIntegral(True, total, err_total + abs(val), False, k + 1)
        else:
            small = 0
            # early windows are transient: f may still vary on the scale of c
            if prev is not None and k >= burn_in and abs(val) >= 0.999 * abs(prev):
                stalled += 1
                if stalled >= 3:
                    return EndpointIntegral(False, math.nan, math.inf, False, k + 1)
            else:
                stalled = 0
        prev = val
    return EndpointIntegral(False, math.nan, math.inf, True, max_windows)


# --- classification ------------------------------------------------------------

@dataclass(frozen=True)
class WarpClassification:
    positive: bool
    inf_f: float
    sup_f: float
    monotone: str  # 'constant' | 'non-decreasing' | 'non-increasing' | 'non-monotone'
    log_convex: bool
    non_locally_constant: bool
    l1_at_a: EndpointIntegral
    l1_at_b: EndpointIntegral
    zeros_of_d1: list[float]
    window: tuple[float, float]

    @property
    def non_increasing(self) -> bool:
        return self.monotone in ("constant", "non-increasing")

    @property
    def non_decreasing(self) -> bool:
        return self.monotone in ("constant", "non-decreasing")

    def to_dict(self) -> dict:
        def integ(e: EndpointIntegral):
            return {
                "finite": e.finite,
                "indeterminate": e.indeterminate,
                "value": None if not e.finite else e.value,
            }

        return {
            "positive": self.positive,
            "inf_f": self.inf_f,
            "sup_f": self.sup_f,
            "monotone": self.monotone,
            "log_convex": self.log_convex,
            "non_locally_constant": self.non_locally_constant,
            "l1_at_a": integ(self.l1_at_a),
            "l1_at_b": integ(self.l1_at_b),
            "zeros_of_d1": list(self.zeros_of_d1),
            "window": list(self.window),
        }


def _sample_points(lo: float, hi: float, n: int) -> np.ndarray:
    # open interval: drop both end points
    return np.linspace(lo, hi, n + 2)[1:-1]


def classify_warping(
    f: WarpingFunction,
    window: tuple[float, float] | None = None,
    n_samples: int = 2001,
    tol: float = 1e-10,
    delta_frac: float = 1 / 50,
    eps_flat: float = 1e-10,
) -> WarpClassification:
    """Numeric proxies for the warping hypotheses of the uniqueness theorems.

    `tol` is the slack granted to the sign conditions (monotonicity and
    log-convexity): raising it can only add properties.  "Non-locally
    constant" means no run of samples of length >= delta_frac * window with
    |f'| < eps_flat.
    """
    lo, hi = window if window is not None else f.domain.window()
    t = _sample_points(lo, hi, n_samples)
    fv = f.eval(t)
    if np.any(~np.isfinite(fv)) or np.any(fv <= 0):
        bad = t[~(fv > 0)][:5]
        raise InvalidWarpingError(f"f is not positive at t={bad.tolist()}")
    d1 = f.deriv(t)
    logd2 = f.log_deriv2(t)

    zeros: list[float] = []
    constant = bool(np.max(np.abs(d1)) <= tol)
    if not constant:
        sgn = np.sign(d1)
        for i in np.nonzero(sgn == 0)[0]:
            zeros.append(float(t[i]))
        for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
            zeros.append(float(optimize.brentq(lambda s: float(f.d1(np.asarray(s))), t[i], t[i + 1], xtol=1e-14)))
        zeros.sort()

    if constant:
        monotone = "constant"
    elif np.min(d1) >= -tol:
        monotone = "non-decreasing"
    elif np.max(d1) <= tol:
        monotone = "non-increasing"
    else:
        monotone = "non-monotone"

    flat = np.abs(d1) < eps_flat
    longest = 0.0
    if np.any(flat):
        step = t[1] - t[0]
        run = 0
        for v in flat:
            run = run + 1 if v else 0
            longest = max(longest, (run - 1) * step if run else 0.0)
        if np.all(flat):
            longest = hi - lo
    non_locally_constant = longest < delta_frac * (hi - lo)

    extra = f.eval(np.array(zeros)) if zeros else np.array([])
    inf_f = float(min(np.min(fv), np.min(extra) if len(extra) else np.inf))
    sup_f = float(max(np.max(fv), np.max(extra) if len(extra) else -np.inf))
    c = 0.5 * (lo + hi)
    return WarpClassification(
        positive=True,
        inf_f=inf_f,
        sup_f=sup_f,
        monotone=monotone,
        log_convex=bool(np.min(logd2) >= -tol),
        non_locally_constant=bool(non_locally_constant),
        l1_at_a=endpoint_integral(f, "a", c),
        l1_at_b=endpoint_integral(f, "b", c),
        zeros_of_d1=zeros,
        window=(float(lo), float(hi)),
    )
