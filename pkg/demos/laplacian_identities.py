"""Checking Laplacian identities on a graph by grid refinement.

Each identity expresses the Laplacian of some function of the height
tau = u on the graph in terms of f, f', the slope and the mean curvature.
The left side is computed with a discrete Laplace-Beltrami operator, the
right side pointwise from analytic derivatives, and the gap must shrink
like h^2.  Two alternative closed forms are included as negative controls.
"""

from warpgraph import fiber, geometry, warp
from warpgraph.fields import make_field
from warpgraph.geometry import HypothesisError

cosh = warp.preset("cosh")
flat = warp.preset("constant")

print(f"{'identity':<16}{'warping':<10}{'gap@32':>10}{'gap@64':>10}{'gap@128':>10}{'order':>8}  ok")
for which in ("norm", "dtau", "dftau", "conf_tau", "conf_ftau", "arccot", "F_low", "F_up", "lcos", "lcos_variant",
              "arccot_variant"):
    f = flat if which.startswith("lcos") else cosh
    rep = geometry.identity_report(which, f, field_spec="sincos:0.1")
    g = rep.gaps
    print(f"{which:<16}{f.name:<10}{g[0]:10.2e}{g[1]:10.2e}{g[2]:10.2e}{rep.observed_order:8.3f}  {rep.passed()}")

# -----------------------------------------------------------------------------
# The conformal identities are stated for minimal graphs.  formula_laplacian
# refuses a state whose mean curvature is visibly non-zero unless asked not
# to check.

grid = fiber.torus(32)
state = geometry.assemble_state(grid, cosh, make_field(grid, "sincos:0.1").value)
try:
    geometry.formula_laplacian("conf_tau", state)
except HypothesisError as err:
    print("\n", err)

# On a slice the identities hold to round-off at every resolution.
rep = geometry.identity_report("dtau", cosh, field_spec="const:0.3")
print("slice t = 0.3: exact =", rep.exact, "max gap", max(rep.gaps))
