"""Numerical checks of the angle identities and inequalities on graph surfaces.

Every check returns a :class:`CheckReport`.  A margin field is computed on
the nodes where all stencils fit; the check passes iff its worst margin is
at least ``-C h**2``, where ``C`` is a per-check constant calibrated by a
three-grid study on the unit hyperboloid in Minkowski space (see
:func:`calibrate`).  Continuum statements are exact, so all slack is
discretization error.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT
from .graphgeom import (
    GraphHypersurface,
    Grid,
    UnsupportedDimensionError,
    compute_fields,
    covariant_hessian_norm,
    gauss_curvature,
    laplace_beltrami,
)
from .maxsolver import DirichletProblem, solve
from .warpkit import IntervalDomain, get_spacetime, ncc_check, phi

__all__ = [
    "CheckReport",
    "PreconditionError",
    "check_lemma1_inequality",
    "check_laplacian_identity",
    "check_ricci_bound",
    "check_nishikawa_identity",
    "laplacian_identity_terms",
    "hyperboloid_surface",
    "maximal_patch",
    "calibration_errors",
    "constants_from_table",
    "calibrate",
    "run_checks",
]


class PreconditionError(ValueError):
    """The input surface does not satisfy a check's hypotheses."""


@dataclass
class CheckReport:
    name: str
    nodes: int
    worst_margin: float
    worst_index: tuple
    worst_point: tuple
    tolerance: float
    constant: float
    h: float
    passed: bool
    max_discrepancy: float = float("nan")
    details: dict = field(default_factory=dict)
    margin: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            "check": self.name,
            "nodes": self.nodes,
            "worst_margin": self.worst_margin,
            "worst_index": list(self.worst_index),
            "worst_point": list(self.worst_point),
            "tolerance": self.tolerance,
            "C": self.constant,
            "h": self.h,
            "passed": self.passed,
            "max_discrepancy": self.max_discrepancy,
            "details": self.details,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _report(name, grid, margin, tol, discrepancy=None, details=None):
    C = float(tol.check_constants[name])
    h = grid.hmax
    details = dict(details or {}, grid=grid.to_dict())
    threshold = C * h * h
    valid = np.isfinite(margin)
    vals = np.where(valid, margin, np.inf)
    k = np.unravel_index(int(np.argmin(vals)), vals.shape)
    worst = float(vals[k]) + 0.0  # no negative zero in reports
    point = tuple(float(ax[i]) for ax, i in zip(grid.axes(), k))
    return CheckReport(
        name=name,
        nodes=int(valid.sum()),
        worst_margin=worst,
        worst_index=tuple(int(i) for i in k),
        worst_point=point,
        tolerance=threshold,
        constant=C,
        h=h,
        passed=bool(worst >= -threshold),
        max_discrepancy=float(np.max(np.abs(discrepancy[np.isfinite(discrepancy)])))
        if discrepancy is not None else float("nan"),
        details=details,
        margin=margin,
    )


def _require_maximal(fields):
    grid = fields.grid
    H = fields.mean_curvature[grid.depth_mask(1)]
    res = float(np.max(np.abs(H)))
    limit = 10.0 * grid.hmax ** 2
    if res > limit:
        raise PreconditionError(f"surface is not maximal: max |H| = {res:.3e} exceeds 10 h^2 = {limit:.3e}")
    return res


def _require_ncc(surface, tol):
    u = surface.u
    lo, hi = float(np.min(u)), float(np.max(u))
    warp = surface.spec.warp
    if hi > lo:
        holds, witness = ncc_check(surface.spec, IntervalDomain(lo, hi, False, False), tol=tol)
    else:
        witness = lo
        holds = bool(warp.log_second(lo) <= tol.tol_ncc)
    if not holds:
        raise PreconditionError(f"NCC fails on the surface's time range: (log f)'' > 0 at t={witness!r}")


def _require_n2(fields, name):
    if fields.n != 2:
        raise UnsupportedDimensionError(f"{name} is implemented for n = 2 only")


def _fields(surface, tol):
    return surface if hasattr(surface, "sinh2_phi") else compute_fields(surface, tol)


def check_lemma1_inequality(surface, tol=DEFAULT):
    """``1/2 Lap(sinh^2 phi) - phi(tau) sinh^4 phi >= 0`` on a maximal graph."""
    fields = _fields(surface, tol)
    surface = fields.surface
    res = _require_maximal(fields)
    _require_ncc(surface, tol)
    s2 = fields.sinh2_phi
    lap = laplace_beltrami(fields, s2)
    coeff = np.full(s2.shape, np.nan)
    inner = fields.grid.depth_mask(1)
    coeff[inner] = phi(surface.spec, surface.u[inner])
    margin = 0.5 * lap.values - coeff * s2 * s2
    return _report("lemma1", fields.grid, margin, tol,
                   details={"max_abs_H": res, "depth": lap.depth})


def laplacian_identity_terms(fields):
    """Both sides of ``cosh Lap cosh = |Hess tau|^2 + (warp/angle terms)`` (n = 2)."""
    n = fields.n
    c = fields.cosh_phi
    s2 = fields.sinh2_phi
    q, r, L2 = fields.fp_over_f, fields.fpp_over_f, fields.log_f_second
    lhs = c * laplace_beltrami(fields, c).values
    c2 = c * c
    rhs = (covariant_hessian_norm(fields)
           + n * q * q * c2
           - r * c2 * s2
           + 3.0 * q * q * c2 * s2
           - q * q * (n - 1 + c2 * c2)
           - (n - 1) * L2 * c2 * s2)
    return lhs, rhs


def check_laplacian_identity(surface, tol=DEFAULT, require_maximal=True):
    """Discrepancy between the two sides of the ``cosh(phi) Lap cosh(phi)`` identity."""
    fields = _fields(surface, tol)
    _require_n2(fields, "check_laplacian_identity")
    res = _require_maximal(fields) if require_maximal else float("nan")
    lhs, rhs = laplacian_identity_terms(fields)
    d = lhs - rhs
    return _report("laplacian_identity", fields.grid, -np.abs(d), tol, discrepancy=d,
                   details={"max_abs_H": res})


RICCI_DIRECTIONS = ((1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


def check_ricci_bound(surface, tol=DEFAULT):
    """Gauss curvature non-negativity and ``Ric(Y,Y) >= sum_k <R(Y,U_k)U_k, Y>``.

    The ambient term for a flat fiber is
    ``(n-1)(f'/f)^2 |Y|^2 - (n-2)(log f)'' g(Y, grad tau)^2 - (log f)'' |grad tau|^2 |Y|^2``
    evaluated for 8 fixed unit directions per node.
    """
    fields = _fields(surface, tol)
    _require_n2(fields, "check_ricci_bound")
    res = _require_maximal(fields)
    _require_ncc(fields.surface, tol)
    n = 2
    K = gauss_curvature(fields)
    q, L2 = fields.fp_over_f, fields.log_f_second
    D1 = [np.full(K.shape, np.nan) for _ in range(n)]
    inner = tuple(slice(1, m - 1) for m in fields.grid.nodes)
    for i in range(n):
        D1[i][inner] = fields.extras["D1"][i]
    g = fields.metric
    grad2 = fields.sinh2_phi
    margin = K.copy()
    worst_b = np.full(K.shape, np.inf)
    for y in RICCI_DIRECTIONS:
        norm2 = sum(g[i][j] * y[i] * y[j] for i in range(n) for j in range(n))
        # unit Y = y / |y|_g ; g(Y, grad tau) = Y^i u_i
        gy_tau = sum(y[i] * D1[i] for i in range(n)) / np.sqrt(norm2)
        ambient = (n - 1) * q * q - (n - 2) * L2 * gy_tau ** 2 - L2 * grad2
        worst_b = np.minimum(worst_b, K - ambient)
    margin = np.minimum(margin, worst_b)
    return _report("ricci_bound", fields.grid, margin, tol,
                   details={"max_abs_H": res,
                            "min_gauss_curvature": float(np.nanmin(K)),
                            "min_ricci_minus_ambient": float(np.nanmin(worst_b))})


def _euclidean_metric(grid):
    n = grid.n
    return np.ones(grid.shape), [[np.full(grid.shape, 1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]


def _grad_norm2(grid, s, inv):
    n, h = grid.n, grid.h
    out = np.full(grid.shape, np.nan)
    inner = tuple(slice(1, m - 1) for m in grid.nodes)
    d = []
    for i in range(n):
        plus = list(inner)
        minus = list(inner)
        plus[i] = slice(2, grid.nodes[i])
        minus[i] = slice(0, grid.nodes[i] - 2)
        d.append((s[tuple(plus)] - s[tuple(minus)]) / (2.0 * h[i]))
    total = np.zeros_like(d[0])
    for i in range(n):
        for j in range(n):
            total = total + inv[i][j][inner] * d[i] * d[j]
    out[inner] = total
    return out


def check_nishikawa_identity(grid, u, fields=None, c=None, tol=DEFAULT):
    """``Lap u = 6 |grad F|^2 / F^4 - 2 Lap F / F^3`` for ``F = (1+u)^(-1/2)``.

    ``fields`` selects the induced metric of a graph as background (default
    Euclidean).  With ``c`` given, the caller asserts ``Lap u >= c u^2`` and
    the consequence ``c u^2/(1+u)^2 <= 6 |grad F|^2 - 2 F Lap F`` is checked
    as well.
    """
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0)):
        idx = tuple(int(v) for v in np.argwhere(~(u > 0))[0])
        raise PreconditionError(f"u must be positive; u[{idx}] = {u[idx]!r}")
    if fields is None:
        metric = _euclidean_metric(grid)
    else:
        grid = fields.grid
        metric = (fields.sqrt_det, fields.inverse_metric)
    F = (1.0 + u) ** -0.5
    lap_u = laplace_beltrami(grid, u, metric=metric).values
    lap_F = laplace_beltrami(grid, F, metric=metric).values
    grad_F2 = _grad_norm2(grid, F, metric[1])
    F3 = F ** 3
    rhs = 6.0 * grad_F2 / (F3 * F) - 2.0 * lap_F / F3
    d = lap_u - rhs
    margin = -np.abs(d)
    details = {"background": "euclidean" if fields is None else "induced"}
    if c is not None:
        threshold = float(tol.check_constants["nishikawa"]) * grid.hmax ** 2
        assumed = lap_u - c * u * u
        if np.nanmin(assumed) < -threshold:
            raise PreconditionError(f"Lap u >= c u^2 fails (min Lap u - c u^2 = {np.nanmin(assumed):.3e})")
        corollary = 6.0 * grad_F2 - 2.0 * F * lap_F - c * u * u / (1.0 + u) ** 2
        details["corollary_min_margin"] = float(np.nanmin(corollary))
        margin = np.minimum(margin, corollary)
    return _report("nishikawa", grid, margin, tol, discrepancy=d, details=details)


# ---------------------------------------------------------------------------
# calibration of the C in C*h**2

CALIBRATION_LEVELS = (33, 65, 129)


def hyperboloid_surface(nodes, n=2, extent=1.0):
    """Unit hyperboloid ``u = sqrt(1 + |x|^2)`` in Minkowski space on ``[-extent, extent]^n``."""
    grid = Grid.square(n, nodes, -extent, extent)
    X = grid.coords()
    r2 = sum(x * x for x in X)
    return GraphHypersurface(grid, np.sqrt(1.0 + r2), get_spacetime("Minkowski", n=n)), r2


def calibration_errors(nodes, tol=DEFAULT):
    """Max discretization error of each check's field on the hyperboloid (n = 2).

    Closed forms on the unit hyperboloid: ``1/2 Lap sinh^2 = n + (n+1) r^2``,
    ``cosh Lap cosh = |Hess tau|^2 = n (1 + r^2)``, ``K = -1``.
    """
    surface, r2 = hyperboloid_surface(nodes)
    grid = surface.grid
    fields = compute_fields(surface, tol)
    m2 = grid.depth_mask(2)
    m1 = grid.depth_mask(1)
    lap = laplace_beltrami(fields, fields.sinh2_phi).values
    e_lemma = np.max(np.abs(0.5 * lap[m2] - (2.0 + 3.0 * r2[m2])))
    lhs, rhs = laplacian_identity_terms(fields)
    e_ident = np.max(np.abs((lhs - rhs)[m2]))
    e_ricci = np.max(np.abs(gauss_curvature(fields)[m1] + 1.0))
    nish = check_nishikawa_identity(grid, 1.0 + r2, fields=fields, tol=tol)
    return {
        "lemma1": float(e_lemma),
        "laplacian_identity": float(e_ident),
        "ricci_bound": float(e_ricci),
        "nishikawa": float(nish.max_discrepancy),
        "h": grid.hmax,
    }


CHECK_NAMES = ("lemma1", "laplacian_identity", "ricci_bound", "nishikawa")


def constants_from_table(table, safety=4.0):
    """``C = safety * max_levels(error / h^2)`` per check, rounded up to two digits."""
    constants = {}
    for key in CHECK_NAMES:
        c = safety * max(row[key] / row["h"] ** 2 for row in table)
        mag = 10.0 ** math.floor(math.log10(c)) / 10.0
        constants[key] = round(math.ceil(c / mag) * mag, 12)
    return constants


def calibrate(levels=CALIBRATION_LEVELS, safety=4.0, tol=DEFAULT):
    """Calibrate every check's ``C`` on the hyperboloid.

    Returns ``(constants, table)`` where ``table`` holds the raw errors per level.
    """
    table = [calibration_errors(m, tol) for m in levels]
    return constants_from_table(table, safety), table


def maximal_patch(spec, boundary, nodes, extent=1.0, ratio=2, tol=DEFAULT):
    """Smooth maximal test surface on ``[-extent, extent]^n`` cut from a larger solve.

    Dirichlet solutions on a square are generally not smooth at the corners,
    and that roughness leaks into third derivatives near the boundary.  Here
    the maximal equation is solved on a box ``ratio`` times larger and the
    solution is restricted to the central patch, padded by two nodes so that
    the checks' two-deep interior is exactly the closed patch with ``nodes``
    points per side.  Nested refinements then sample the same physical set.

    Parameters
    ----------
    spec : SpacetimeSpec
    boundary : callable
        ``boundary(*coords) -> ndarray`` evaluated on the outer grid; only
        its values on the outer boundary matter.
    nodes : int
        Odd node count per side of the evaluation patch.
    ratio : int
        Integer size ratio of the outer box to the patch.

    Returns
    -------
    (GraphHypersurface, SolveOutcome)
    """
    if nodes % 2 == 0 or ratio < 2 or int(ratio) != ratio:
        raise ValueError("nodes must be odd and ratio an integer >= 2")
    n = spec.n
    h = 2.0 * extent / (nodes - 1)
    outer = Grid.square(n, ratio * (nodes - 1) + 1, -ratio * extent, ratio * extent)
    data = np.asarray(boundary(*outer.coords()), dtype=float)
    outcome = solve(DirichletProblem(spec, outer, data, tol=tol))
    k = (ratio - 1) * (nodes - 1) // 2 - 2
    m = nodes + 4
    grid = Grid.square(n, m, -extent - 2 * h, extent + 2 * h)
    u = outcome.u[(slice(k, k + m),) * n].copy()
    return GraphHypersurface(grid, u, spec), outcome


def run_checks(surface, names=None, tol=DEFAULT):
    """Run the applicable checks on a graph; returns ``{name: CheckReport or error string}``."""
    names = names or list(CHECK_NAMES)
    fields = compute_fields(surface, tol)
    out = {}
    for name in names:
        try:
            if name == "lemma1":
                out[name] = check_lemma1_inequality(fields, tol)
            elif name == "laplacian_identity":
                out[name] = check_laplacian_identity(fields, tol)
            elif name == "ricci_bound":
                out[name] = check_ricci_bound(fields, tol)
            elif name == "nishikawa":
                # positive test function built from the height, induced metric as background
                v = 1.0 + surface.u - float(np.min(surface.u))
                out[name] = check_nishikawa_identity(fields.grid, v, fields=fields, tol=tol)
            else:
                raise KeyError(name)
        except (PreconditionError, UnsupportedDimensionError) as exc:
            out[name] = f"precondition failed: {exc}"
    return out
