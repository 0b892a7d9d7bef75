import numpy as np
import pytest

from grwlab.config import DEFAULT
from grwlab.graphgeom import Grid
from grwlab.maxsolver import (
    DirichletProblem,
    InfeasibleProblemError,
    Status,
    continuation_solve,
    harmonic_extension,
    residual,
    solve,
)
from grwlab.warpkit import ParameterError, get_spacetime

EX1 = get_spacetime("Example1", n=2)
MINK = get_spacetime("Minkowski", n=2)


def sine_data(grid, amp=0.2):
    X, Y = grid.coords()
    return amp * np.sin(np.pi * X / 2) * np.sin(np.pi * Y / 2)


def test_harmonic_extension_reproduces_affine():
    g = Grid.square(2, 17)
    X, Y = g.coords()
    u = 0.3 * X - 0.2 * Y + 0.1
    np.testing.assert_allclose(harmonic_extension(g, u), u, atol=1e-14)


@pytest.mark.parametrize("a", [0.3, 0.6])
def test_affine_recovery_from_perturbed_guess(a):
    g = Grid.square(2, 33)
    X, Y = g.coords()
    exact = a * (0.6 * X + 0.8 * Y)
    guess = exact + 0.05 * np.sin(np.pi * (X + 1) / 2) * np.sin(np.pi * (Y + 1) / 2)
    out = solve(DirichletProblem(MINK, g, exact, initial=guess))
    assert out.converged and out.iterations >= 2
    assert np.max(np.abs(out.u - exact)) <= 10 * g.hmax ** 2


def test_rigidity_from_non_slice_guess():
    g = Grid.square(2, 33)
    X, Y = g.coords()
    guess = 0.5 * (1 - X ** 2) * (1 - Y ** 2)
    out = solve(DirichletProblem(EX1, g, np.zeros(g.shape), initial=guess))
    assert out.converged
    assert np.max(np.abs(out.u)) <= 1e-8


def test_history_is_monotone():
    g = Grid.square(2, 33)
    out = solve(DirichletProblem(EX1, g, sine_data(g, 0.4)))
    norms = [h[1] for h in out.history]
    assert out.converged and len(norms) >= 3
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert all(0 < lam <= 1 for _, _, lam in out.history[1:])
    r = residual(EX1, g, out.u)
    assert np.nanmax(np.abs(r)) == pytest.approx(out.residual_max)
    assert out.residual_max <= DEFAULT.solver_tol


def test_frame_invariance_bitwise():
    g = Grid.square(2, 33)
    b = sine_data(g, 0.3)
    u0 = solve(DirichletProblem(EX1, g, b)).u
    # translating the domain by a fiber vector leaves the data, and the solution, unchanged
    shifted = g.translated((0.5, -0.25))
    u1 = solve(DirichletProblem(EX1, shifted, b)).u
    assert np.array_equal(u0, u1)


def test_solution_is_deterministic():
    g = Grid.square(2, 33)
    b = sine_data(g, 0.3)
    a = solve(DirichletProblem(EX1, g, b))
    c = solve(DirichletProblem(EX1, g, b))
    assert np.array_equal(a.u, c.u) and a.history == c.history


def test_continuation_contract():
    g = Grid.square(2, 33)
    X, Y = g.coords()
    b = 0.9 * X
    p = DirichletProblem(MINK, g, b)
    with pytest.raises(ParameterError):
        continuation_solve(p, 0)
    with pytest.raises(ParameterError):
        continuation_solve(p, 1.5)
    one = continuation_solve(p, 1)
    assert np.array_equal(one.u, solve(p).u)
    four = continuation_solve(p, 4)
    assert four.converged and len(four.stages) == 4
    assert np.max(np.abs(four.u - b)) <= 10 * g.hmax ** 2


def test_steep_data_with_continuation():
    g = Grid.square(2, 33)
    X, Y = g.coords()
    b = 0.45 * np.sin(1.5 * X) * np.cos(Y)
    out = continuation_solve(DirichletProblem(EX1, g, b), 3)
    assert out.converged and out.residual_max <= DEFAULT.solver_tol


def test_infeasible_inputs():
    g = Grid.square(2, 17)
    X, Y = g.coords()
    with pytest.raises(InfeasibleProblemError):
        DirichletProblem(MINK, g, 1.2 * X)
    with pytest.raises(InfeasibleProblemError):
        DirichletProblem(EX1, g, np.zeros(g.shape), initial=np.full(g.shape, 0.1))
    with pytest.raises(InfeasibleProblemError):
        # matches the boundary but is not spacelike inside
        DirichletProblem(MINK, g, np.zeros(g.shape), initial=np.sin(np.pi * (X + 1)) * np.sin(np.pi * (Y + 1)))
    with pytest.raises(InfeasibleProblemError, match="warp domain"):
        DirichletProblem(get_spacetime("Example2", n=2, a=1), g, np.full(g.shape, 1.5))
    with pytest.raises(ValueError):
        DirichletProblem(EX1, g, np.zeros((3, 3)))


def test_max_iter_status():
    g = Grid.square(2, 33)
    tol = DEFAULT.with_overrides(max_iter=1)
    out = solve(DirichletProblem(EX1, g, sine_data(g, 0.4), tol=tol))
    assert out.status is Status.MAX_ITER and not out.converged
    assert out.iterations == 1
