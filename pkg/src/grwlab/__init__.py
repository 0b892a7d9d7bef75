"""Maximal spacelike graphs in warped product spacetimes ``I x_f R^n``.

Modules
-------
warpkit
    Warping functions, the scalar rigidity criterion and the classifier.
graphgeom
    Finite-difference geometry of graphs ``t = u(x)``.
maxsolver
    Damped Newton solver for the maximal (zero mean curvature) Dirichlet problem.
verify
    Grid checks of the hyperbolic-angle identities and inequalities.
io, cli
    The grwlab/1 file formats and the ``grwlab`` command.
"""

from .config import DEFAULT, Tolerances
from .graphgeom import GraphHypersurface, Grid, compute_fields, mean_curvature
from .maxsolver import DirichletProblem, continuation_solve, solve
from .warpkit import (
    IntervalDomain,
    SpacetimeSpec,
    Verdict,
    classify,
    expression_model,
    get_spacetime,
    phi,
)

__version__ = "0.1.0"
