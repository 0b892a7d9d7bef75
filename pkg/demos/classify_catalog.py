"""Classify every built-in spacetime and a user-written warping function.

The classifier looks at the null convergence condition, then the infimum of
the rigidity quantity Phi over the time window, then at the critical points
of the warping function.
"""
from grwlab import IntervalDomain, classify, expression_model, get_spacetime
from grwlab.warpkit import SpacetimeSpec, builtin_catalog

# Whole catalog in dimension 3, each on its natural domain
for spec in builtin_catalog(n=3, a=1.0):
    rep = classify(spec)
    print(f"{spec.name:18s} {rep.verdict.value:15s} {rep.reason}")

# Restricting the time window changes the answer for the Einstein-de Sitter model:
# Phi = (6n+4)/(9t^2) has a positive infimum on (0, T] but tends to 0 on (0, inf)
eds = get_spacetime("EinsteinDeSitter", n=3)
for window in ("0,1", "0,100", "0,inf"):
    rep = classify(eds, IntervalDomain.parse(window, eds.warp.domain))
    print(f"EinsteinDeSitter on {window:6s} -> {rep.verdict.value}, inf Phi = {rep.inf_phi.value:.4g}")

# A warping function given as text (the grammar knows exp, log, sqrt and pow).
# log cosh is convex, so the null convergence condition fails and nothing is concluded.
spec = SpacetimeSpec(2, expression_model("exp(t) + exp(-t)", IntervalDomain.real_line()))
rep = classify(spec, IntervalDomain(-4.0, 4.0, False, False))
print("f = 2 cosh t:", rep.verdict.value, rep.reason)
