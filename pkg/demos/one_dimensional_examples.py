"""Bounded-slope minimal graphs that are not constant.

Dropping parabolicity or the sign conditions breaks uniqueness, and two
one-dimensional examples show it.  Both live in a product R x M where M is
the surface dx^2 + F(x)^2 dy^2 and the graph depends on x only.  For such
graphs the minimal-graph equation integrates once:

    F u' / sqrt(1 + u'^2) = C.
"""

import numpy as np

from warpgraph import analysis, fiber, warp
from warpgraph.fiber import MetricKind, laplace_beltrami
from warpgraph.solver import first_integral_1d, ode_solve_1d, psi, transformed_residual_1d

x = np.linspace(-10, 10, 10_001)

# =============================================================================
# Example a: F = sqrt(1 + cosh^4 x) and u = tanh x.  The surface is not
# parabolic, and u is bounded with bounded gradient.

Fa = warp.preset("cex_a")
C = first_integral_1d(Fa, lambda s: 1 / np.cosh(s) ** 2, x)
print("a: first integral in [%.16f, %.16f]" % (C.min(), C.max()))

# Integrating u' = C / sqrt(F^2 - C^2) from the origin recovers tanh.
ode = ode_solve_1d(Fa, 1.0, 0.0, 0.0, (-5.0, 5.0))
print("a: ODE vs tanh, max error %.1e over %d samples" % (np.max(np.abs(ode.u - np.tanh(ode.x))), ode.x.size))

# The positive function sech^2 x is strictly superharmonic on the surface,
# which rules out parabolicity.
xs = np.linspace(-5, 5, 11)
print("a: Laplacian of sech^2 at", xs[::5], "=", analysis.sech_sq_laplacian(xs)[::5])

line = fiber.FiberGrid((401,), (10.0,), "bounded", origin=(-5.0,))
scan = analysis.superharmonic_scan(
    line, MetricKind("warped_surface", density_warp=Fa), 1 / np.cosh(line.coords[0]) ** 2
)
print(f"a: discrete scan, max Laplacian {scan.max_laplacian:.2e}, "
      f"non-positive at {100 * scan.fraction_nonpositive:.0f}% of nodes")
disc = laplace_beltrami(line, MetricKind("warped_surface", density_warp=Fa), 1 / np.cosh(line.coords[0]) ** 2)
exact = analysis.sech_sq_laplacian(line.coords[0])
print("a: discrete vs exact Laplacian, max gap %.1e" % np.max(np.abs(disc - exact)[line.interior]))

# With f = 1 the change of variable v = psi(u) is a shift, and the
# transformed equation holds as well.
one = warp.preset("constant")
t = np.tanh(x)
T = transformed_residual_1d(Fa, one, psi(one, t), 1 - t * t, -2 * t * (1 - t * t), x)
print("a: transformed residual max %.1e" % np.max(np.abs(T)))

# =============================================================================
# Example b: h = sqrt(2x^4 + 6x^2 + 5) / (x^2 + 2) is pinched between
# sqrt(5)/2 and sqrt(2), so the surface is quasi-isometric to the plane and
# therefore parabolic.  Yet w = x + arctan x is minimal, unbounded both ways,
# with bounded gradient.

Fb = warp.preset("cex_b")
C = first_integral_1d(Fb, lambda s: (s * s + 2) / (s * s + 1), x)
print("\nb: first integral deviation %.1e" % np.max(np.abs(C - 1)))
h = Fb.func(np.linspace(-1e3, 1e3, 200_001))
print("b: h ranges over [%.12f, %.12f]; sqrt(5)/2 = %.12f, sqrt(2) = %.12f"
      % (h.min(), h.max(), np.sqrt(5) / 2, np.sqrt(2)))
lo, hi = analysis.product_sandwich_bounds(h)
print("b: metric eigenvalues against the flat plane lie in [%.4f, %.4f]" % (lo, hi))
