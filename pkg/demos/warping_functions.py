"""Which uniqueness results apply to a given warping function?

The hypotheses are properties of f alone: monotonicity, convexity of
log f, flat stretches, and whether f is integrable up to a finite end of its
interval.  classify_warping turns each into a numeric check over a sampling
window; hypothesis_report combines them with the grid and a candidate u.
"""

import math

import numpy as np

from warpgraph import analysis, fiber, warp
from warpgraph.fields import make_field

cases = [
    ("constant", None),
    ("cosh", None),
    ("exp", None),
    ("exp", (-math.inf, 0.0)),
    ("one_minus_t", None),
    ("cex_a", None),
]

print(f"{'warping':<12}{'domain':<16}{'monotone':<16}{'log-convex':<12}{'L1 at a':<14}{'L1 at b':<14}")
for name, dom in cases:
    f = warp.preset(name, dom)
    cls = warp.classify_warping(f)
    d = f"({f.domain.a:g}, {f.domain.b:g})"
    a = "finite" if cls.l1_at_a.finite else ("divergent" if not cls.l1_at_a.indeterminate else "?")
    b = "finite" if cls.l1_at_b.finite else ("divergent" if not cls.l1_at_b.indeterminate else "?")
    print(f"{name:<12}{d:<16}{cls.monotone:<16}{str(cls.log_convex):<12}{a:<14}{b:<14}")

# -----------------------------------------------------------------------------
# Combined with a torus fiber (a compact stand-in for a complete parabolic
# manifold) and a gentle height function, the report names the results that
# apply and what they conclude.

grid = fiber.torus(16)
u = make_field(grid, "sincos:0.1").value - 0.5
print()
for name, dom in cases:
    f = warp.preset(name, dom)
    rep = analysis.hypothesis_report(grid, f, u)
    print(f"{name:<12} -> {rep.predicted_conclusion:<10} {', '.join(rep.applicable_theorems) or '-'}")

# A tabulated warping goes through a cubic spline, so its derivatives are
# consistent with the samples.
t = np.linspace(-3, 3, 61)
tab = warp.from_table((t, np.cosh(t)), name="cosh table")
print("\ntable vs exact f' at t = 1.23:", float(tab.d1(np.array(1.23))), math.sinh(1.23))
