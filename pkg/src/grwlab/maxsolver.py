"""Damped Newton solver for the maximal-graph Dirichlet problem ``H[u] = 0``.

Boundary nodes carry Dirichlet data; the unknowns are the interior values.
The Jacobian is assembled from forward-difference directional derivatives
of the residual, one per colour of a 3**n colouring of the grid (the
residual stencil has Chebyshev radius one, so nodes of equal colour never
share a stencil).  Step lengths are halved until the spacelike margin holds
and the max-norm residual decreases.
"""

import enum
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .config import DEFAULT
from .graphgeom import GraphHypersurface, SpacelikeError, mean_curvature, spacelike_check
from .warpkit import ParameterError

__all__ = [
    "Status",
    "DirichletProblem",
    "SolveOutcome",
    "InfeasibleProblemError",
    "residual",
    "harmonic_extension",
    "solve",
    "continuation_solve",
]


class InfeasibleProblemError(ValueError):
    """Boundary data or initial guess violate the spacelike margin."""


class Status(str, enum.Enum):
    CONVERGED = "CONVERGED"
    MAX_ITER = "MAX_ITER"
    SPACELIKE_BREAKDOWN = "SPACELIKE_BREAKDOWN"


def _interior(grid):
    return tuple(slice(1, m - 1) for m in grid.nodes)


def residual(spec, grid, u, tol=DEFAULT):
    """Mean curvature ``H[u]`` on interior nodes (NaN on the boundary)."""
    surface = GraphHypersurface(grid, u, spec)
    out = np.full(grid.shape, np.nan)
    out[_interior(grid)] = mean_curvature(surface, tol)
    return out


def _laplacian_matrix(grid):
    """Sparse interior 5/7-point Laplacian and the boundary coupling operator."""
    n = grid.n
    inner = tuple(m - 2 for m in grid.nodes)
    size = int(np.prod(inner))
    index = np.arange(size).reshape(inner)
    rows, cols, vals = [], [], []
    diag = np.zeros(inner)
    for i in range(n):
        w = 1.0 / grid.h[i] ** 2
        diag -= 2.0 * w
        for step in (-1, 1):
            src = [slice(None)] * n
            dst = [slice(None)] * n
            if step == 1:
                src[i], dst[i] = slice(0, -1), slice(1, None)
            else:
                src[i], dst[i] = slice(1, None), slice(0, -1)
            rows.append(index[tuple(src)].ravel())
            cols.append(index[tuple(dst)].ravel())
            vals.append(np.full(rows[-1].shape, w))
    rows.append(index.ravel())
    cols.append(index.ravel())
    vals.append(diag.ravel())
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))


def harmonic_extension(grid, boundary):
    """Discrete harmonic function with the boundary values of ``boundary``."""
    boundary = np.asarray(boundary, dtype=float)
    lap = _laplacian_matrix(grid)
    base = np.where(grid.boundary_mask, boundary, 0.0)
    # boundary contribution = Laplacian stencil applied to base, restricted to interior
    rhs = np.zeros(tuple(m - 2 for m in grid.nodes))
    for i in range(grid.n):
        w = 1.0 / grid.h[i] ** 2
        for step in (-1, 1):
            o = [slice(1, m - 1) for m in grid.nodes]
            o[i] = slice(1 + step, grid.nodes[i] - 1 + step)
            rhs += w * base[tuple(o)]
    sol = spla.spsolve(lap.tocsc(), -rhs.ravel())
    out = base.copy()
    out[_interior(grid)] = sol.reshape(rhs.shape)
    return out


@dataclass
class DirichletProblem:
    """Maximal graph problem on ``grid`` with Dirichlet data on the boundary nodes.

    ``boundary`` is a full-grid array whose boundary entries are used.
    ``initial`` defaults to the harmonic extension of the boundary data.
    """

    spec: object
    grid: object
    boundary: np.ndarray
    initial: np.ndarray = None
    tol: object = DEFAULT

    def __post_init__(self):
        self.boundary = np.asarray(self.boundary, dtype=float)
        if self.boundary.shape != self.grid.shape:
            raise ValueError(f"boundary array has shape {self.boundary.shape}, grid needs {self.grid.shape}")
        self._check_boundary()
        if self.initial is None:
            self.initial = harmonic_extension(self.grid, self.boundary)
        else:
            self.initial = np.asarray(self.initial, dtype=float).copy()
            bm = self.grid.boundary_mask
            if not np.allclose(self.initial[bm], self.boundary[bm], rtol=0.0, atol=1e-12):
                raise InfeasibleProblemError("initial guess does not match the boundary data")
            self.initial[bm] = self.boundary[bm]
        surface = GraphHypersurface(self.grid, self.initial, self.spec)
        rep = spacelike_check(surface, self.tol)
        if not rep.ok:
            raise InfeasibleProblemError(
                f"initial guess is not spacelike: min f^2-|Du|^2 = {rep.margin:.4g} at node {rep.worst_index}")
        try:
            mean_curvature(surface, self.tol)
        except SpacelikeError as exc:
            raise InfeasibleProblemError(f"initial guess is not spacelike: {exc}") from None

    def _check_boundary(self):
        grid, b = self.grid, self.boundary
        bm = grid.boundary_mask
        domain = self.spec.warp.domain
        if not np.all(domain.contains(b[bm])):
            raise InfeasibleProblemError(f"boundary data leave the warp domain {domain}")
        eps2 = self.tol.eps_space ** 2
        for i in range(grid.n):
            lo = [slice(None)] * grid.n
            hi = [slice(None)] * grid.n
            lo[i], hi[i] = slice(0, -1), slice(1, None)
            both = bm[tuple(lo)] & bm[tuple(hi)]
            slope = (b[tuple(hi)] - b[tuple(lo)]) / grid.h[i]
            mid = 0.5 * (b[tuple(hi)] + b[tuple(lo)])
            f = self.spec.warp.evaluate(np.where(both, mid, b[tuple(lo)]))[0]
            bad = both & ~(slope * slope < f * f - eps2)
            if np.any(bad):
                idx = tuple(int(v) for v in np.argwhere(bad)[0])
                raise InfeasibleProblemError(
                    f"boundary data are not spacelike between nodes {idx} and its +1 neighbour on axis {i}: "
                    f"slope {slope[idx]:.4g} vs f = {f[idx]:.4g}")


@dataclass
class SolveOutcome:
    u: np.ndarray
    history: list
    iterations: int
    status: Status
    message: str = ""
    residual_max: float = float("nan")
    stages: list = field(default_factory=list)

    @property
    def converged(self):
        return self.status is Status.CONVERGED


class _System:
    def __init__(self, problem):
        self.spec = problem.spec
        self.grid = problem.grid
        self.tol = problem.tol
        self.inner = tuple(m - 2 for m in self.grid.nodes)
        self.sl = _interior(self.grid)
        self._pattern = self._colour_pattern()

    def residual(self, u, check=True):
        surface = GraphHypersurface.__new__(GraphHypersurface)
        surface.grid, surface.u, surface.spec = self.grid, u, self.spec
        return mean_curvature(surface, self.tol, check=check)

    def admissible(self, u):
        if not np.all(self.spec.warp.domain.contains(u)):
            return False
        surface = GraphHypersurface.__new__(GraphHypersurface)
        surface.grid, surface.u, surface.spec = self.grid, u, self.spec
        return spacelike_check(surface, self.tol).ok

    def _colour_pattern(self):
        n = self.grid.n
        idx = np.indices(self.inner)
        colour = np.zeros(self.inner, dtype=int)
        for k in range(n):
            colour = colour * 3 + (idx[k] % 3)
        index = np.arange(int(np.prod(self.inner))).reshape(self.inner)
        pattern = []
        for c in range(3 ** n):
            entries = []
            for off in product((-1, 0, 1), repeat=n):
                # rows r whose neighbour r + off is interior and of colour c
                src = []
                dst = []
                for k, o in enumerate(off):
                    m = self.inner[k]
                    src.append(slice(max(0, -o), m - max(0, o)))
                    dst.append(slice(max(0, o), m - max(0, -o)))
                sel = colour[tuple(dst)] == c
                rows = index[tuple(src)][sel]
                cols = index[tuple(dst)][sel]
                if rows.size:
                    entries.append((rows, cols))
            pattern.append((colour == c, entries))
        return pattern

    def jacobian(self, u, r0):
        eps = np.sqrt(np.finfo(float).eps)
        ui = u[self.sl]
        step = eps * np.maximum(np.abs(ui), 1.0)
        rows, cols, vals = [], [], []
        r0f = r0.ravel()
        for mask, entries in self._pattern:
            up = u.copy()
            up[self.sl] = ui + np.where(mask, step, 0.0)
            dr = (self.residual(up, check=False) - r0).ravel()
            stepf = step.ravel()
            for rr, cc in entries:
                rows.append(rr)
                cols.append(cc)
                vals.append(dr[rr] / stepf[cc])
        size = r0f.size
        return sparse.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                 shape=(size, size))


def solve(problem):
    """Damped Newton iteration from ``problem.initial``.

    Non-convergence and spacelike breakdown are reported in the returned
    :class:`SolveOutcome`, never raised.
    """
    tol = problem.tol
    system = _System(problem)
    u = problem.initial.copy()
    r = system.residual(u)
    norm = float(np.max(np.abs(r)))
    history = [(0, norm, 1.0)]
    it = 0
    while True:
        if norm <= tol.solver_tol:
            return SolveOutcome(u, history, it, Status.CONVERGED, "max |H| below tolerance", norm)
        if it >= tol.max_iter:
            return SolveOutcome(u, history, it, Status.MAX_ITER, f"no convergence in {tol.max_iter} iterations", norm)
        J = system.jacobian(u, r)
        delta = spla.spsolve(J, -r.ravel()).reshape(r.shape)
        lam = 1.0
        accepted = False
        margin_ok_seen = False
        while lam >= tol.damping_floor:
            trial = u.copy()
            trial[system.sl] = u[system.sl] + lam * delta
            if np.all(np.isfinite(trial)) and system.admissible(trial):
                try:
                    rt = system.residual(trial)
                except SpacelikeError:
                    rt = None
                if rt is not None:
                    margin_ok_seen = True
                    nt = float(np.max(np.abs(rt)))
                    if nt < norm:
                        u, r, norm = trial, rt, nt
                        accepted = True
                        break
            lam *= 0.5
        it += 1
        if not accepted:
            if margin_ok_seen:
                return SolveOutcome(u, history, it, Status.MAX_ITER,
                                    "damping reached the floor without residual decrease", norm)
            return SolveOutcome(u, history, it, Status.SPACELIKE_BREAKDOWN,
                                "no damped step above the floor preserves the spacelike margin", norm)
        history.append((it, norm, lam))


def continuation_solve(problem, steps):
    """Solve with boundary data ramped from a constant level in ``steps`` stages.

    Stage ``k`` uses ``base + (k/steps) (boundary - base)`` and warm-starts
    from the previous stage plus the harmonic extension of the data
    increment.  ``base`` is 0 when 0 lies in the warp domain, otherwise the
    mean boundary value.
    """
    if int(steps) != steps or steps < 1:
        raise ParameterError(f"continuation needs steps >= 1, got {steps}")
    steps = int(steps)
    if steps == 1:
        return solve(problem)
    grid, bm = problem.grid, problem.grid.boundary_mask
    domain = problem.spec.warp.domain
    base = 0.0 if domain.contains(0.0) else float(np.mean(problem.boundary[bm]))
    target = np.where(bm, problem.boundary, base)
    prev_b = np.full(grid.shape, base)
    u = None
    history, stages = [], []
    total = 0
    outcome = None
    for k in range(1, steps + 1):
        b_k = target if k == steps else base + (k / steps) * (target - base)
        if u is None:
            guess = harmonic_extension(grid, b_k)
        else:
            guess = u + harmonic_extension(grid, b_k - prev_b)
            guess[bm] = b_k[bm]
        stage = DirichletProblem(problem.spec, grid, b_k, guess, problem.tol)
        outcome = solve(stage)
        history.extend((total + i, nrm, lam) for i, nrm, lam in outcome.history)
        total += outcome.iterations
        stages.append({"stage": k, "status": outcome.status.value, "iterations": outcome.iterations,
                       "residual_max": outcome.residual_max})
        if not outcome.converged:
            break
        u, prev_b = outcome.u, b_k
    return SolveOutcome(outcome.u, history, total, outcome.status,
                        f"stage {len(stages)}/{steps}: {outcome.message}", outcome.residual_max, stages)
