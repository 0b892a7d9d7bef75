import json
import math

import numpy as np
import pytest

from grwlab.config import DEFAULT
from grwlab.graphgeom import GraphHypersurface, Grid, compute_fields, laplace_beltrami
from grwlab.maxsolver import DirichletProblem, solve
from grwlab.verify import (
    CHECK_NAMES,
    PreconditionError,
    calibrate,
    check_laplacian_identity,
    check_lemma1_inequality,
    check_nishikawa_identity,
    check_ricci_bound,
    laplacian_identity_terms,
    maximal_patch,
    run_checks,
)
from grwlab.warpkit import IntervalDomain, SpacetimeSpec, expression_model, get_spacetime, phi

EX1 = get_spacetime("Example1", n=2)


@pytest.fixture(scope="module")
def solved_ex1():
    g = Grid.square(2, 33)
    X, Y = g.coords()
    out = solve(DirichletProblem(EX1, g, 0.2 * np.sin(np.pi * X / 2) * np.sin(np.pi * Y / 2)))
    assert out.converged
    return GraphHypersurface(g, out.u, EX1)


def slice_surface(t0=0.0, nodes=17, spec=EX1):
    g = Grid.square(2, nodes)
    return GraphHypersurface(g, np.full(g.shape, t0), spec)


def plane_surface(nodes=17):
    g = Grid.square(2, nodes)
    X, Y = g.coords()
    return GraphHypersurface(g, 0.5 * X - 0.3 * Y, get_spacetime("Minkowski", n=2))


def test_lemma1_trivial_cases():
    rep = check_lemma1_inequality(slice_surface())
    assert rep.worst_margin == 0.0 and rep.passed
    rep = check_lemma1_inequality(plane_surface())
    assert abs(rep.worst_margin) <= 1e-10 and rep.passed


def test_laplacian_identity_trivial_cases():
    for s in (slice_surface(), plane_surface()):
        rep = check_laplacian_identity(s)
        assert rep.max_discrepancy <= 1e-10 and rep.passed


def test_ricci_trivial_cases():
    rep = check_ricci_bound(slice_surface())
    assert rep.details["min_gauss_curvature"] == 0.0
    assert rep.worst_margin == 0.0 and rep.passed
    rep = check_ricci_bound(plane_surface())
    assert abs(rep.worst_margin) <= 1e-10 and rep.passed


def test_checks_pass_on_solved_surface(solved_ex1):
    for check in (check_lemma1_inequality, check_ricci_bound, check_laplacian_identity):
        rep = check(solved_ex1)
        assert rep.nodes > 0
        assert rep.passed == (rep.worst_margin >= -rep.tolerance)
    assert check_lemma1_inequality(solved_ex1).passed
    assert check_ricci_bound(solved_ex1).passed


def test_lemma1_coefficient_is_phi(solved_ex1):
    F = compute_fields(solved_ex1)
    rep = check_lemma1_inequality(F)
    s2 = F.sinh2_phi
    m2 = F.grid.depth_mask(2)
    lap = laplace_beltrami(F, s2).values
    coeff = phi(EX1, solved_ex1.u)
    np.testing.assert_allclose(rep.margin[m2], (0.5 * lap - coeff * s2 * s2)[m2], rtol=0, atol=1e-14)
    # recover the coefficient where sinh^2 phi is far from zero
    big = m2 & (s2 > 0.05)
    assert big.sum() > 50
    recovered = (0.5 * lap - rep.margin)[big] / s2[big] ** 2
    np.testing.assert_allclose(recovered, coeff[big], rtol=1e-12)


def test_identity_terms_vanish_on_slice_at_critical_time():
    F = compute_fields(slice_surface(0.0))
    lhs, rhs = laplacian_identity_terms(F)
    m = F.grid.depth_mask(2)
    assert np.all(lhs[m] == 0.0) and np.all(rhs[m] == 0.0)


def test_non_maximal_surface_is_rejected():
    g = Grid.square(2, 17)
    X, Y = g.coords()
    s = GraphHypersurface(g, 0.3 * X * Y + 0.2, EX1)
    with pytest.raises(PreconditionError, match=r"max \|H\|"):
        check_lemma1_inequality(s)
    with pytest.raises(PreconditionError, match=r"max \|H\|"):
        check_laplacian_identity(s)


def test_ncc_precondition():
    spec = SpacetimeSpec(2, expression_model("exp(t^2)", IntervalDomain.real_line()))
    with pytest.raises(PreconditionError, match="NCC"):
        check_lemma1_inequality(slice_surface(0.0, spec=spec))


def test_nishikawa_constant_is_exact():
    g = Grid.square(2, 17)
    rep = check_nishikawa_identity(g, np.full(g.shape, 2.0))
    assert rep.max_discrepancy == 0.0 and rep.worst_margin == 0.0 and rep.passed


def nishikawa_rates(make, levels=(33, 65, 129)):
    errs, hs = [], []
    for m in levels:
        g, u = make(m)
        errs.append(check_nishikawa_identity(g, u).max_discrepancy)
        hs.append(g.hmax)
    return errs, [math.log(a / b) / math.log(h1 / h2) for a, b, h1, h2 in zip(errs, errs[1:], hs, hs[1:])]


def test_nishikawa_convergence():
    def sines(m):
        g = Grid.square(2, m, -math.pi, math.pi)
        X, Y = g.coords()
        return g, 1 + np.sin(X) * np.sin(Y) + 2

    def parabola(m):
        g = Grid.square(2, m)
        X, _ = g.coords()
        return g, X * X + 1

    for make in (sines, parabola):
        errs, rates = nishikawa_rates(make)
        assert all(r >= 1.7 for r in rates), (errs, rates)


def test_nishikawa_corollary_and_positivity():
    g = Grid.square(2, 33)
    X, _ = g.coords()
    u = X * X + 1  # Lap u = 2 >= c u^2 for c <= 1/2 on [-1, 1]^2
    rep = check_nishikawa_identity(g, u, c=0.5)
    assert rep.passed and "corollary_min_margin" in rep.details
    with pytest.raises(PreconditionError):
        check_nishikawa_identity(g, u, c=5.0)
    with pytest.raises(PreconditionError, match="positive"):
        check_nishikawa_identity(g, u - 1.0)


def test_patch_identity_convergence():
    errs = []
    for m in (17, 33, 65):
        s, out = maximal_patch(EX1, lambda x, y: 0.2 * np.sin(np.pi * x / 4) * np.sin(np.pi * y / 4), m)
        assert out.converged
        rep = check_laplacian_identity(s)
        assert rep.nodes == m * m
        errs.append(rep.max_discrepancy)
    rates = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(r >= 1.7 for r in rates), (errs, rates)


def test_run_checks_and_report_json(solved_ex1):
    out = run_checks(solved_ex1)
    assert set(out) == set(CHECK_NAMES)
    for rep in out.values():
        doc = json.loads(rep.to_json())
        assert doc["check"] in CHECK_NAMES and doc["C"] > 0
        assert doc["details"]["grid"]["nodes"] == [33, 33]
    again = run_checks(solved_ex1)
    assert all(out[k].to_json() == again[k].to_json() for k in out)


def test_run_checks_reports_preconditions():
    g = Grid.square(3, 9)
    s = GraphHypersurface(g, np.zeros(g.shape), get_spacetime("Example1", n=3))
    out = run_checks(s, ["ricci_bound"])
    assert isinstance(out["ricci_bound"], str) and "n = 2" in out["ricci_bound"]


def test_stored_constants_cover_calibration():
    constants, table = calibrate()
    for key, c in constants.items():
        assert DEFAULT.check_constants[key] >= c, key
    for row in table:
        for key in CHECK_NAMES:
            assert row[key] <= DEFAULT.check_constants[key] * row["h"] ** 2
