"""Watch the discrete identity residuals shrink like h^2.

A maximal graph is solved on [-2, 2]^2 and only the central [-1, 1]^2 is
inspected, so that every refinement samples the same smooth region.  The
identity for cosh(phi) Lap cosh(phi) and the Laplacian identity for
F = (1+u)^(-1/2) are exact in the continuum; what remains is truncation error.
"""
import math

import numpy as np

from grwlab import compute_fields, get_spacetime
from grwlab.verify import calibrate, check_laplacian_identity, check_nishikawa_identity, maximal_patch

spec = get_spacetime("Example2", n=2, a=2.0)
data = lambda x, y: 0.2 * np.sin(np.pi * x / 4) * np.sin(np.pi * y / 4) + 0.1 * x

rows = []
for nodes in (17, 33, 65, 129):
    surface, outcome = maximal_patch(spec, data, nodes)
    fields = compute_fields(surface)
    ident = check_laplacian_identity(fields).max_discrepancy
    nish = check_nishikawa_identity(surface.grid, 2.0 + surface.u, fields=fields).max_discrepancy
    rows.append((surface.grid.hmax, ident, nish))

print(f"{'h':>10s} {'identity':>12s} {'order':>6s} {'nishikawa':>12s} {'order':>6s}")
for k, (h, a, b) in enumerate(rows):
    if k == 0:
        print(f"{h:10.5f} {a:12.3e} {'':6s} {b:12.3e}")
    else:
        h0, a0, b0 = rows[k - 1]
        pa, pb = math.log(a0 / a) / math.log(h0 / h), math.log(b0 / b) / math.log(h0 / h)
        print(f"{h:10.5f} {a:12.3e} {pa:6.2f} {b:12.3e} {pb:6.2f}")

# Pass thresholds C h^2 come from the same kind of study on the hyperboloid in Minkowski space
constants, table = calibrate()
print("\ncalibrated constants:", constants)
