import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grwlab import jets
from grwlab.jets import (
    ExpressionError,
    Jet,
    compile_expression,
    compile_field_expression,
    compile_log_expression,
)


def _fd(fn, t, h=1e-4):
    """Central differences of a scalar function: (f, f', f'')."""
    f0, fp, fm = fn(t), fn(t + h), fn(t - h)
    return f0, (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)


def test_gaussian_jet():
    j = jets.exp(-Jet.variable(1.5) ** 2)
    e = math.exp(-2.25)
    assert j.value == pytest.approx(e, rel=1e-15)
    assert j.d1 == pytest.approx(-3.0 * e, rel=1e-15)
    assert j.d2 == pytest.approx((4 * 2.25 - 2) * e, rel=1e-14)


def test_quotient_and_reverse_ops():
    t = Jet.variable(2.0)
    j = 1.0 / (1.0 + t * t)
    # d/dt (1+t^2)^-1 = -2t/(1+t^2)^2, second = (6t^2-2)/(1+t^2)^3
    assert j.value == pytest.approx(0.2)
    assert j.d1 == pytest.approx(-4.0 / 25.0)
    assert j.d2 == pytest.approx(22.0 / 125.0)
    k = 3.0 - t
    assert (k.value, k.d1, k.d2) == (1.0, -1.0, 0.0)


def test_array_components():
    t = np.linspace(0.5, 2.0, 7)
    j = jets.sqrt(Jet.variable(t))
    np.testing.assert_allclose(j.d1, 0.5 / np.sqrt(t))
    np.testing.assert_allclose(j.d2, -0.25 * t ** -1.5)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(-2.0, 2.0), a=st.floats(0.2, 3.0), p=st.floats(-2.5, 2.5))
def test_jet_matches_finite_differences(t, a, p):
    text = "exp(-t^2/a) * pow(2 + t^2, p) + sqrt(a + t^2) / (3 + t)"
    params = {"a": a, "p": p}
    fn = compile_expression(text, params)
    j = fn(Jet.variable(t))
    f0, f1, f2 = _fd(lambda s: fn(Jet.variable(s)).value, t)
    assert j.value == pytest.approx(f0, rel=1e-12)
    assert j.d1 == pytest.approx(f1, rel=1e-6, abs=1e-6)
    assert j.d2 == pytest.approx(f2, rel=1e-4, abs=1e-4)


@pytest.mark.parametrize("text", [
    "__import__('os')",
    "t.real",
    "lambda t: t",
    "sin(t)",
    "x + 1",
    "exp(t, 2)",
    "t if t else 1",
    "[t]",
    "True + t",
    "t +",
])
def test_grammar_rejects(text):
    with pytest.raises(ExpressionError):
        compile_expression(text)


def test_caret_power_and_constants():
    fn = compile_expression("t^2 + pi - e")
    j = fn(Jet.variable(3.0))
    assert j.value == pytest.approx(9.0 + math.pi - math.e)
    assert j.d1 == 6.0 and j.d2 == 2.0


def test_constant_expression_lifts_to_jet():
    j = compile_expression("2^3")(Jet.variable(1.0))
    assert (j.value, j.d1, j.d2) == (8.0, 0.0, 0.0)


@settings(max_examples=40, deadline=None)
@given(t=st.floats(-5.0, 5.0))
def test_log_space_agrees_with_direct(t):
    text = "exp(-t^2) * sqrt(4 + t^2) / pow(1 + t^2, 1.5)"
    direct = jets.log(compile_expression(text)(Jet.variable(t)))
    logged = compile_log_expression(text)(Jet.variable(t))
    for a, b in zip((direct.value, direct.d1, direct.d2), (logged.value, logged.d1, logged.d2)):
        assert a == pytest.approx(b, rel=1e-11, abs=1e-11)


def test_log_space_survives_underflow():
    j = compile_log_expression("exp(-t^2)")(Jet.variable(1e4))
    assert (j.value, j.d1, j.d2) == (-1e8, -2e4, -2.0)


def test_field_expression():
    fn = compile_field_expression("0.5*sin(pi*x1/2)*x2^2 + abs(x2)", ["x1", "x2"])
    x = np.array([1.0, -1.0])
    y = np.array([2.0, -3.0])
    np.testing.assert_allclose(fn(x, y), [4.0, -1.5])
    assert fn(1.0, 0.0).shape == ()
    with pytest.raises(ExpressionError):
        fn(1.0)
    with pytest.raises(ExpressionError):
        compile_field_expression("t + 1", ["x1"])
