import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grwlab.graphgeom import (
    GraphHypersurface,
    Grid,
    RestrictedOutputWarning,
    SpacelikeError,
    UnsupportedDimensionError,
    compute_fields,
    covariant_hessian_norm,
    gauss_curvature,
    laplace_beltrami,
    mean_curvature,
    spacelike_check,
)
from grwlab.verify import hyperboloid_surface
from grwlab.warpkit import DomainError, builtin_catalog, get_spacetime


def rate(errors, hs):
    return [math.log(a / b) / math.log(h1 / h2) for a, b, h1, h2 in zip(errors, errors[1:], hs, hs[1:])]


def test_grid_basics():
    g = Grid.square(2, 5, -1.0, 1.0)
    assert g.h == (0.5, 0.5) and g.shape == (5, 5)
    assert g.depth_mask(1).sum() == 9 and g.depth_mask(2).sum() == 1
    assert g.boundary_mask.sum() == 16
    assert Grid.from_dict(g.to_dict()) == g
    with pytest.raises(ValueError):
        Grid.square(2, 4)
    with pytest.raises(UnsupportedDimensionError):
        Grid.square(4, 9)


@pytest.mark.parametrize("n", [2, 3])
def test_slice_mean_curvature(n):
    g = Grid.square(n, 9)
    for spec in builtin_catalog(n=n, a=1.0):
        for t0 in (0.2, 0.5, 0.9):
            s = GraphHypersurface(g, np.full(g.shape, t0), spec)
            q = spec.warp.ratios(t0)[0]
            H = mean_curvature(s)
            assert np.max(np.abs(H - q)) <= 1e-12, spec.name


def test_affine_minkowski_is_exactly_maximal():
    g = Grid.square(2, 17)
    X, Y = g.coords()
    s = GraphHypersurface(g, 0.6 * X - 0.7 * Y + 0.1, get_spacetime("Minkowski", n=2))
    assert np.max(np.abs(mean_curvature(s))) <= 1e-11  # roundoff over h^2
    F = compute_fields(s)
    assert np.nanmax(np.abs(F.mean_curvature_nodal)) <= 1e-11


def test_hyperboloid_second_order():
    errs = {"H": [], "K": [], "lap": []}
    hs = []
    for m in (33, 65, 129):
        s, r2 = hyperboloid_surface(m)
        F = compute_fields(s)
        m1, m2 = s.grid.depth_mask(1), s.grid.depth_mask(2)
        hs.append(s.grid.hmax)
        errs["H"].append(np.max(np.abs(F.mean_curvature[m1] - 1.0)))
        errs["K"].append(np.max(np.abs(gauss_curvature(F)[m1] + 1.0)))
        lap = laplace_beltrami(F, F.sinh2_phi).values
        errs["lap"].append(np.max(np.abs(0.5 * lap[m2] - (2.0 + 3.0 * r2[m2]))))
    for key, e in errs.items():
        for p in rate(e, hs):
            assert abs(p - 2.0) <= 0.3, (key, e)


def test_nodal_and_flux_curvature_agree():
    g = Grid.square(2, 65)
    X, Y = g.coords()
    u = 0.2 * np.sin(X) * np.cos(0.5 * Y)
    F = compute_fields(GraphHypersurface(g, u, get_spacetime("Example1", n=2)))
    diff = np.nanmax(np.abs(F.mean_curvature - F.mean_curvature_nodal))
    assert diff <= 5 * g.hmax ** 2


smooth_u = st.tuples(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(0.5, 2.0), st.floats(-0.3, 0.3))


@settings(max_examples=25, deadline=None)
@given(c=smooth_u)
def test_angle_and_gradient_identities(c):
    a, b, k, t0 = c
    g = Grid.square(2, 17)
    X, Y = g.coords()
    u = t0 + a * np.sin(k * X) * np.cos(Y) + b * X * Y
    spec = get_spacetime("Example1", n=2)
    s = GraphHypersurface(g, u, spec)
    F = compute_fields(s)
    inner = g.depth_mask(1)
    np.testing.assert_allclose((F.cosh_phi ** 2 - F.sinh2_phi)[inner], 1.0, rtol=0, atol=1e-12)
    # |grad tau|^2 from the inverse metric equals sinh^2 phi
    np.testing.assert_allclose(F.grad_tau_norm2[inner], F.sinh2_phi[inner], rtol=1e-12, atol=1e-14)


def test_laplace_beltrami_self_adjoint():
    g = Grid.square(2, 41)
    X, Y = g.coords()
    spec = get_spacetime("Example2", n=2, a=2)
    F = compute_fields(GraphHypersurface(g, 0.3 * X + 0.2 * np.sin(2 * Y) * X, spec))
    bump = lambda cx, cy: np.where((X - cx) ** 2 + (Y - cy) ** 2 < 0.36,
                                   np.cos(np.pi * np.hypot(X - cx, Y - cy) / 1.2) ** 4, 0.0)
    v, w = bump(0.1, 0.0), bump(-0.1, 0.2)
    Lv = np.nan_to_num(laplace_beltrami(F, v).values)
    Lw = np.nan_to_num(laplace_beltrami(F, w).values)
    sq = np.nan_to_num(F.sqrt_det)
    a, b = np.sum(sq * w * Lv), np.sum(sq * v * Lw)
    assert abs(a - b) <= 1e-12 * max(abs(a), 1.0)


def test_laplace_beltrami_euclidean_exact():
    g = Grid.square(2, 9)
    X, Y = g.coords()
    F = compute_fields(GraphHypersurface(g, np.zeros(g.shape), get_spacetime("Minkowski", n=2)))
    lap = laplace_beltrami(F, X * X + 3 * X * Y - Y).values
    # metric data live on depth >= 1, so the output is valid from depth 2
    np.testing.assert_allclose(lap[g.depth_mask(2)], 2.0, atol=1e-12)
    assert np.all(np.isnan(lap[~g.depth_mask(2)]))


def test_restricted_output_warning():
    g = Grid.square(2, 17)
    F = compute_fields(GraphHypersurface(g, np.zeros(g.shape), get_spacetime("Minkowski", n=2)))
    s = laplace_beltrami(F, F.sinh2_phi)
    assert s.depth == 2
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        laplace_beltrami(F, np.ones(g.shape))
    with pytest.warns(RestrictedOutputWarning):
        deeper = laplace_beltrami(F, s.values)
    assert deeper.depth == 3


def test_hessian_of_slice_vanishes_and_dimension_guard():
    g = Grid.square(2, 9)
    F = compute_fields(GraphHypersurface(g, np.full(g.shape, 0.4), get_spacetime("Example1", n=2)))
    assert np.nanmax(np.abs(covariant_hessian_norm(F))) == 0.0
    g3 = Grid.square(3, 7)
    F3 = compute_fields(GraphHypersurface(g3, np.zeros(g3.shape), get_spacetime("Example1", n=3)))
    with pytest.raises(UnsupportedDimensionError):
        gauss_curvature(F3)
    with pytest.raises(UnsupportedDimensionError):
        covariant_hessian_norm(F3)


def test_spacelike_and_domain_errors():
    g = Grid.square(2, 9)
    X, _ = g.coords()
    s = GraphHypersurface(g, 1.5 * X, get_spacetime("Minkowski", n=2))
    rep = spacelike_check(s)
    assert not rep.ok and rep.margin < 0
    with pytest.raises(SpacelikeError):
        mean_curvature(s)
    with pytest.raises(DomainError):
        GraphHypersurface(g, np.full(g.shape, 1.0), get_spacetime("Example2", n=2, a=1))
    with pytest.raises(ValueError):
        GraphHypersurface(g, np.zeros((9, 8)), get_spacetime("Example1", n=2))
    with pytest.raises(ValueError):
        GraphHypersurface(g, np.zeros(g.shape), get_spacetime("Example1", n=3))
