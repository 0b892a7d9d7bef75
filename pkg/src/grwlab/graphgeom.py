"""Discrete geometry of spacelike graphs ``t = u(x)`` in ``I x_f R^n``.

For a graph over the flat fiber the induced metric, hyperbolic angle and
mean curvature have closed forms in terms of ``Du`` and ``f(u)``::

    g_ij      = f^2 delta_ij - u_i u_j,        W^2 = f^2 - |Du|^2
    g^ij      = (delta_ij + u_i u_j / W^2) / f^2
    det g     = f^(2n-2) W^2
    cosh(phi) = f / W,                         sinh^2(phi) = |Du|^2 / W^2

The mean curvature (future normal, ``H = -(1/n) trace A``) is the
Euler-Lagrange operator of the area ``int f^(n-1) W dx`` divided by
``n cosh(phi) sqrt(det g)``::

    n H = (f'/f) ((n-1) W^2 + f^2) / (f W) + div(f^(n-1) Du / W) / f^n

so that a slice ``u = t0`` has ``H = f'(t0)/f(t0)``.  The divergence is
discretized in conservative form with face-centred fluxes.

Arrays live on the full node grid; quantities that need a stencil are NaN
where the stencil does not fit, and every field reports the depth of the
region on which it is valid (1 = all interior nodes).
"""

import warnings
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .config import DEFAULT
from .warpkit import DomainError

__all__ = [
    "Grid",
    "GraphHypersurface",
    "GeometryFields",
    "SpacelikeError",
    "UnsupportedDimensionError",
    "RestrictedOutputWarning",
    "spacelike_check",
    "compute_fields",
    "mean_curvature",
    "laplace_beltrami",
    "covariant_hessian_norm",
    "gauss_curvature",
    "derivatives",
]


class SpacelikeError(ValueError):
    """The surface violates ``|Du|^2 < f(u)^2 - eps_space^2``."""


class UnsupportedDimensionError(ValueError):
    pass


class RestrictedOutputWarning(UserWarning):
    """A stencil output was restricted to a smaller interior than usual."""


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on ``prod [lower_i, upper_i]``."""

    lower: tuple
    upper: tuple
    nodes: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        nodes = tuple(int(v) for v in np.atleast_1d(self.nodes))
        if not (len(lower) == len(upper) == len(nodes)):
            raise ValueError("lower, upper and nodes must have one entry per axis")
        if len(nodes) not in (2, 3):
            raise UnsupportedDimensionError(f"grids are 2- or 3-dimensional, got n={len(nodes)}")
        if min(nodes) < 5:
            raise ValueError(f"need at least 5 nodes per axis, got {nodes}")
        if any(not hi > lo for lo, hi in zip(lower, upper)):
            raise ValueError("each axis needs upper > lower")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def square(cls, n=2, nodes=65, lower=-1.0, upper=1.0):
        return cls((lower,) * n, (upper,) * n, (nodes,) * n)

    @property
    def n(self):
        return len(self.nodes)

    @property
    def shape(self):
        return self.nodes

    @property
    def h(self):
        return tuple((hi - lo) / (m - 1) for lo, hi, m in zip(self.lower, self.upper, self.nodes))

    @property
    def hmax(self):
        return max(self.h)

    def axes(self):
        return [np.linspace(lo, hi, m) for lo, hi, m in zip(self.lower, self.upper, self.nodes)]

    def coords(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def depth_mask(self, depth):
        """Nodes at index distance >= ``depth`` from the boundary."""
        mask = np.zeros(self.shape, dtype=bool)
        if all(m > 2 * depth for m in self.nodes):
            mask[tuple(slice(depth, m - depth) for m in self.nodes)] = True
        return mask

    @property
    def boundary_mask(self):
        return ~self.depth_mask(1)

    def translated(self, shift):
        shift = np.broadcast_to(np.asarray(shift, dtype=float), (self.n,))
        return Grid(tuple(np.add(self.lower, shift)), tuple(np.add(self.upper, shift)), self.nodes)

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper), "nodes": list(self.nodes)}

    @classmethod
    def from_dict(cls, data):
        return cls(tuple(data["lower"]), tuple(data["upper"]), tuple(data["nodes"]))


# ---------------------------------------------------------------------------
# finite differences; all return arrays on the interior block [1:-1]^n

def _view(a, offsets):
    idx = tuple(slice(1 + o, a.shape[k] - 1 + o) for k, o in enumerate(offsets))
    return a[idx]


def _shifted(a, pairs):
    o = [0] * a.ndim
    for axis, step in pairs:
        o[axis] += step
    return _view(a, o)


def _d1(a, i, h):
    return (_shifted(a, [(i, 1)]) - _shifted(a, [(i, -1)])) / (2.0 * h[i])


def _d2(a, i, j, h):
    if i == j:
        return (_shifted(a, [(i, 1)]) - 2.0 * _view(a, [0] * a.ndim) + _shifted(a, [(i, -1)])) / (h[i] * h[i])
    return (_shifted(a, [(i, 1), (j, 1)]) - _shifted(a, [(i, 1), (j, -1)])
            - _shifted(a, [(i, -1), (j, 1)]) + _shifted(a, [(i, -1), (j, -1)])) / (4.0 * h[i] * h[j])


def _d3_mixed(a, i, j, h):
    """``d_i d_i d_j a`` for ``i != j`` on a 3x3 stencil."""
    def dii(s):
        return (_shifted(a, [(i, 1), (j, s)]) - 2.0 * _shifted(a, [(j, s)]) + _shifted(a, [(i, -1), (j, s)])) / (h[i] * h[i])
    return (dii(1) - dii(-1)) / (2.0 * h[j])


def _pad(interior, shape, fill=np.nan):
    out = np.full(shape, fill, dtype=float)
    out[tuple(slice(1, m - 1) for m in shape)] = interior
    return out


def derivatives(grid, u, order=2):
    """Central-difference derivatives of ``u`` on interior nodes.

    Returns ``(D1, D2, D3)``: lists ``D1[i]``, ``D2[i][j]`` and, for
    ``order >= 3``, ``D3[(i, i, j)]`` for the mixed third derivatives
    ``u_iij`` (i != j).  Arrays have the interior block shape.
    """
    h = grid.h
    n = grid.n
    D1 = [_d1(u, i, h) for i in range(n)]
    D2 = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            D2[i][j] = D2[j][i] = _d2(u, i, j, h)
    D3 = {}
    if order >= 3:
        for i in range(n):
            for j in range(n):
                if i != j:
                    D3[(i, i, j)] = _d3_mixed(u, i, j, h)
    return D1, D2, D3


# ---------------------------------------------------------------------------

@dataclass
class GraphHypersurface:
    grid: Grid
    u: np.ndarray
    spec: object

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != self.grid.shape:
            raise ValueError(f"u has shape {self.u.shape}, grid needs {self.grid.shape}")
        if self.spec.n != self.grid.n:
            raise ValueError(f"spacetime fiber dimension {self.spec.n} != grid dimension {self.grid.n}")
        if not np.all(np.isfinite(self.u)):
            raise ValueError("u must be finite at every node")
        inside = self.spec.warp.domain.contains(self.u)
        if not np.all(inside):
            idx = tuple(int(v) for v in np.argwhere(~inside)[0])
            raise DomainError(f"u[{idx}] = {self.u[idx]!r} lies outside the warp domain {self.spec.warp.domain}")


@dataclass(frozen=True)
class SpacelikeReport:
    ok: bool
    margin: float
    worst_index: tuple
    eps_space: float

    def __bool__(self):
        return self.ok


def _margin_field(surface):
    grid, u = surface.grid, surface.u
    D1 = [_d1(u, i, grid.h) for i in range(grid.n)]
    du2 = sum(d * d for d in D1)
    f = surface.spec.warp.evaluate(_view(u, [0] * grid.n))[0]
    return f * f - du2


def spacelike_check(surface, tol=DEFAULT):
    """Minimum over interior nodes of ``f(u)^2 - |Du|^2`` and whether it exceeds ``eps_space^2``."""
    margin = _margin_field(surface)
    k = np.unravel_index(int(np.argmin(margin)), margin.shape)
    worst = float(margin[k])
    return SpacelikeReport(bool(worst > tol.eps_space ** 2), worst, tuple(int(v) + 1 for v in k), tol.eps_space)


def _require_spacelike(surface, tol):
    rep = spacelike_check(surface, tol)
    if not rep.ok:
        raise SpacelikeError(
            f"surface is not spacelike with margin eps_space={tol.eps_space:g}: "
            f"min f^2-|Du|^2 = {rep.margin:.6g} at node {rep.worst_index}")
    return rep


def mean_curvature(surface, tol=DEFAULT, check=True):
    """Mean curvature ``H`` on interior nodes (interior block shape), conservative flux form."""
    grid, u, spec = surface.grid, surface.u, surface.spec
    n, h = grid.n, grid.h
    warp = spec.warp
    if check:
        _require_spacelike(surface, tol)
    centre = _view(u, [0] * n)
    D1 = [_d1(u, i, h) for i in range(n)]
    du2 = sum(d * d for d in D1)
    f = warp.evaluate(centre)[0]
    q = warp.ratios(centre)[0]
    W2 = f * f - du2
    W = np.sqrt(W2)
    source = q * ((n - 1) * W2 + f * f) / (f * W)

    # central tangential derivatives on the extended block: interior in all axes but i
    div = np.zeros_like(centre)
    for i in range(n):
        # faces between node k and k+1 along axis i, for k = 0..N_i-2, other axes interior
        sl_lo = [slice(1, m - 1) for m in grid.nodes]
        sl_hi = list(sl_lo)
        sl_lo[i] = slice(0, grid.nodes[i] - 1)
        sl_hi[i] = slice(1, grid.nodes[i])
        u_lo, u_hi = u[tuple(sl_lo)], u[tuple(sl_hi)]
        uf = 0.5 * (u_lo + u_hi)
        grad2 = ((u_hi - u_lo) / h[i]) ** 2
        di = (u_hi - u_lo) / h[i]
        for j in range(n):
            if j == i:
                continue
            tj = []
            for sl in (sl_lo, sl_hi):
                plus, minus = list(sl), list(sl)
                plus[j] = slice(sl[j].start + 1, sl[j].stop + 1)
                minus[j] = slice(sl[j].start - 1, sl[j].stop - 1)
                tj.append((u[tuple(plus)] - u[tuple(minus)]) / (2.0 * h[j]))
            grad2 = grad2 + (0.5 * (tj[0] + tj[1])) ** 2
        ff = warp.evaluate(uf)[0]
        Wf2 = ff * ff - grad2
        if check and np.min(Wf2) <= tol.eps_space ** 2:
            raise SpacelikeError(f"face values along axis {i} violate the spacelike margin (min {np.min(Wf2):.3g})")
        flux = ff ** (n - 1) * di / np.sqrt(Wf2)
        hi_idx = [slice(None)] * n
        lo_idx = [slice(None)] * n
        hi_idx[i] = slice(1, None)
        lo_idx[i] = slice(0, -1)
        div = div + (flux[tuple(hi_idx)] - flux[tuple(lo_idx)]) / h[i]
    return (source + div / f ** n) / n


@dataclass
class GeometryFields:
    """Per-node geometry of a spacelike graph; NaN on boundary nodes.

    ``metric[i][j]``, ``inverse_metric[i][j]``, ``shape_operator[i][j]``
    (``A^i_j``) and ``grad_tau[i]`` are full-grid arrays.
    """

    surface: GraphHypersurface
    metric: list
    inverse_metric: list
    sqrt_det: np.ndarray
    cosh_phi: np.ndarray
    sinh2_phi: np.ndarray
    mean_curvature: np.ndarray
    mean_curvature_nodal: np.ndarray
    grad_tau: list
    grad_tau_norm2: np.ndarray
    shape_operator: list
    f: np.ndarray
    fp_over_f: np.ndarray
    fpp_over_f: np.ndarray
    log_f_second: np.ndarray
    depth: int = 1
    extras: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.surface.grid

    @property
    def n(self):
        return self.surface.grid.n

    @property
    def valid(self):
        return self.grid.depth_mask(self.depth)


def compute_fields(surface, tol=DEFAULT):
    """Induced metric, angle, mean curvature and shape operator at interior nodes."""
    _require_spacelike(surface, tol)
    grid, u, spec = surface.grid, surface.u, surface.spec
    n, shape = grid.n, grid.shape
    warp = spec.warp
    centre = _view(u, [0] * n)
    D1, D2, _ = derivatives(grid, u, order=2)
    du2 = sum(d * d for d in D1)
    f = warp.evaluate(centre)[0]
    q, r = warp.ratios(centre)
    L2 = warp.log_second(centre)
    f2 = f * f
    W2 = f2 - du2
    W = np.sqrt(W2)

    metric = [[_pad((f2 if i == j else 0.0) - D1[i] * D1[j], shape) for j in range(n)] for i in range(n)]
    inv = [[_pad(((1.0 if i == j else 0.0) + D1[i] * D1[j] / W2) / f2, shape) for j in range(n)] for i in range(n)]
    sqrt_det = _pad(f ** (n - 1) * W, shape)
    cosh = _pad(f / W, shape)
    sinh2 = _pad(du2 / W2, shape)
    grad_tau = [_pad(D1[i] / W2, shape) for i in range(n)]
    # |grad tau|^2 contracted through the inverse metric (independent of the closed form)
    gt2 = np.zeros_like(centre)
    for i in range(n):
        for j in range(n):
            gt2 = gt2 + _view(inv[i][j], [0] * n) * D1[i] * D1[j]

    # second fundamental form II_ij = g(N, D_{X_i} X_j) and A = g^{-1} II
    fp = q * f
    II = [[(f / W) * (-D2[i][j] - (f * fp if i == j else 0.0) + 2.0 * q * D1[i] * D1[j]) for j in range(n)]
          for i in range(n)]
    inv_c = [[_view(inv[i][j], [0] * n) for j in range(n)] for i in range(n)]
    A = [[sum(inv_c[i][k] * II[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    H_nodal = -sum(A[i][i] for i in range(n)) / n

    H = mean_curvature(surface, tol, check=False)
    return GeometryFields(
        surface=surface,
        metric=metric,
        inverse_metric=inv,
        sqrt_det=sqrt_det,
        cosh_phi=cosh,
        sinh2_phi=sinh2,
        mean_curvature=_pad(H, shape),
        mean_curvature_nodal=_pad(H_nodal, shape),
        grad_tau=grad_tau,
        grad_tau_norm2=_pad(gt2, shape),
        shape_operator=[[_pad(A[i][j], shape) for j in range(n)] for i in range(n)],
        f=_pad(f, shape),
        fp_over_f=_pad(q, shape),
        fpp_over_f=_pad(r, shape),
        log_f_second=_pad(L2, shape),
        extras={"D1": D1, "D2": D2},
    )


@dataclass
class StencilField:
    """A derived node field together with the interior depth on which it is valid."""

    values: np.ndarray
    depth: int

    @property
    def mask(self):
        return np.isfinite(self.values)

    def restricted(self):
        return self.values[self.mask]


def _field_depth(grid, s):
    for d in range(0, min(grid.nodes) // 2 + 1):
        if np.all(np.isfinite(s[grid.depth_mask(d)])):
            return d
    return None


def laplace_beltrami(fields, s, metric=None):
    """Laplace-Beltrami ``(1/sqrt g) d_i (sqrt g g^ij d_j s)`` of a node field.

    Diagonal terms use face-averaged coefficients (compact three-point form),
    mixed terms nested central differences.  With ``s`` and the metric valid
    on all interior nodes the result is valid on the two-deep interior.
    ``metric`` may be a ``(sqrt_det, inverse_metric)`` pair on a plain grid
    (``fields`` is then a :class:`Grid`).
    """
    if metric is None:
        grid = fields.grid
        sqrt_det, inv = fields.sqrt_det, fields.inverse_metric
        metric_depth = fields.depth
    else:
        grid = fields
        sqrt_det, inv = metric
        metric_depth = _field_depth(grid, sqrt_det)
    n, h = grid.n, grid.h
    s = np.asarray(s, dtype=float)
    s_depth = _field_depth(grid, s)
    if s_depth is None or metric_depth is None:
        raise ValueError("field has no finite interior region")
    in_depth = max(s_depth, metric_depth)
    out_depth = in_depth + 1
    if out_depth > 2:
        warnings.warn(f"Laplace-Beltrami output restricted to depth {out_depth} (input valid from depth {in_depth})",
                      RestrictedOutputWarning, stacklevel=2)
    if not grid.depth_mask(out_depth).any():
        raise ValueError(f"grid {grid.nodes} has no nodes at depth {out_depth}")
    # coefficients A^ij = sqrt(g) g^ij on all nodes (NaN where undefined)
    A = [[sqrt_det * inv[i][j] for j in range(n)] for i in range(n)]
    s0 = np.where(np.isfinite(s), s, 0.0)
    out = np.zeros(tuple(m - 2 for m in grid.nodes))
    for i in range(n):
        a_c = _view(A[i][i], [0] * n)
        a_p = 0.5 * (a_c + _shifted(A[i][i], [(i, 1)]))
        a_m = 0.5 * (a_c + _shifted(A[i][i], [(i, -1)]))
        sc = _view(s0, [0] * n)
        out = out + (a_p * (_shifted(s0, [(i, 1)]) - sc) - a_m * (sc - _shifted(s0, [(i, -1)]))) / (h[i] * h[i])
        for j in range(n):
            if j == i:
                continue
            # d_i (A^ij d_j s): flux at nodes i +- 1
            def flux(step):
                aij = _shifted(A[i][j], [(i, step)])
                ds = (_shifted(s0, [(i, step), (j, 1)]) - _shifted(s0, [(i, step), (j, -1)])) / (2.0 * h[j])
                return aij * ds
            out = out + (flux(1) - flux(-1)) / (2.0 * h[i])
    out = out / _view(sqrt_det, [0] * n)
    full = _pad(out, grid.shape)
    full[~grid.depth_mask(out_depth)] = np.nan
    return StencilField(full, out_depth)


def _christoffel_terms(fields):
    """Chain-rule derivatives of g_ij = f(u)^2 delta_ij - u_i u_j from central differences of u."""
    grid = fields.grid
    n = grid.n
    D1, D2 = fields.extras["D1"], fields.extras["D2"]
    c = [0] * n
    f = _view(fields.f, c)
    q = _view(fields.fp_over_f, c)
    f2p = 2.0 * f * f * q  # d(f^2)/dt
    dg = [[[f2p * D1[k] * (1.0 if a == b else 0.0) - D2[a][k] * D1[b] - D1[a] * D2[b][k]
            for k in range(n)] for b in range(n)] for a in range(n)]
    inv = [[_view(fields.inverse_metric[i][j], c) for j in range(n)] for i in range(n)]
    gamma = [[[sum(0.5 * inv[k][l] * (dg[l][j][i] + dg[l][i][j] - dg[i][j][l]) for l in range(n))
               for j in range(n)] for i in range(n)] for k in range(n)]
    return dg, gamma, inv


def covariant_hessian_norm(fields, tau=None):
    """``|Hess tau|^2`` with Christoffel symbols of the induced metric (n = 2)."""
    if fields.n != 2:
        raise UnsupportedDimensionError("covariant_hessian_norm is implemented for n = 2 only")
    grid = fields.grid
    n = 2
    u = fields.surface.u if tau is None else np.asarray(tau, dtype=float)
    D1, D2, _ = derivatives(grid, u, order=2)
    _, gamma, inv = _christoffel_terms(fields)
    hess = [[D2[i][j] - sum(gamma[k][i][j] * D1[k] for k in range(n)) for j in range(n)] for i in range(n)]
    total = np.zeros_like(D1[0])
    for i, j, k, l in product(range(n), repeat=4):
        total = total + inv[i][k] * inv[j][l] * hess[i][j] * hess[k][l]
    return _pad(total, grid.shape)


def gauss_curvature(fields):
    """Intrinsic Gauss curvature of the induced metric by the Brioschi formula (n = 2).

    Metric derivatives come from the chain rule on central differences of
    ``u``; all stencils fit in 3x3, so the field is valid on every interior node.
    """
    if fields.n != 2:
        raise UnsupportedDimensionError("gauss_curvature is implemented for n = 2 only")
    grid = fields.grid
    u = fields.surface.u
    D1, D2, D3 = derivatives(grid, u, order=3)
    c = [0, 0]
    f = _view(fields.f, c)
    q = _view(fields.fp_over_f, c)
    r = _view(fields.fpp_over_f, c)
    ux, uy = D1
    uxx, uxy, uyy = D2[0][0], D2[0][1], D2[1][1]
    uxxy, uxyy = D3[(0, 0, 1)], D3[(1, 1, 0)]
    P = f * f
    Px, Py = 2 * P * q * ux, 2 * P * q * uy
    # d^2(f^2)/dt^2 = 2 (f'^2 + f f'') = 2 P (q^2 + r)
    Ptt = 2 * P * (q * q + r)
    Pxx = Ptt * ux * ux + 2 * P * q * uxx
    Pyy = Ptt * uy * uy + 2 * P * q * uyy
    E = P - ux * ux
    F = -ux * uy
    G = P - uy * uy
    Eu = Px - 2 * ux * uxx
    Ev = Py - 2 * ux * uxy
    Gu = Px - 2 * uy * uxy
    Gv = Py - 2 * uy * uyy
    Fu = -uxx * uy - ux * uxy
    Fv = -uxy * uy - ux * uyy
    Evv = Pyy - 2 * uxy * uxy - 2 * ux * uxyy
    Guu = Pxx - 2 * uxy * uxy - 2 * uy * uxxy
    Fuv = -uxxy * uy - uxx * uyy - uxy * uxy - ux * uxyy

    def det3(m):
        return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))

    m1 = [[-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev],
          [Fv - 0.5 * Gu, E, F],
          [0.5 * Gv, F, G]]
    m2 = [[0.0 * E, 0.5 * Ev, 0.5 * Gu],
          [0.5 * Ev, E, F],
          [0.5 * Gu, F, G]]
    K = (det3(m1) - det3(m2)) / (E * G - F * F) ** 2
    return _pad(K, grid.shape)
