"""Second-order forward-mode differentiation and a small warp-expression grammar.

A :class:`Jet` carries ``(value, d1, d2)``, the truncated Taylor data of a
scalar function of one variable.  Components may be floats or numpy arrays,
so a single pass evaluates ``f, f', f''`` on a whole sample grid.

>>> t = Jet.variable(1.0)
>>> j = exp(-t * t)
>>> round(j.d2, 12) == round(2 * 2.718281828459045 ** -1, 12)
True
"""

import ast
import math

import numpy as np

__all__ = ["Jet", "exp", "log", "sqrt", "power", "compile_expression",
           "compile_log_expression",
           "compile_field_expression", "ExpressionError"]


def _lift(x):
    if isinstance(x, Jet):
        return x
    return Jet(x, 0.0, 0.0)


def _chain(a, g0, g1, g2):
    # g0, g1, g2 = g(a), g'(a), g''(a)
    return Jet(g0, g1 * a.d1, g2 * a.d1 * a.d1 + g1 * a.d2)


class Jet:
    """Truncated second-order jet ``value + d1*e + d2*e**2/2``."""

    __slots__ = ("value", "d1", "d2")
    __array_priority__ = 1000

    def __init__(self, value, d1=0.0, d2=0.0):
        self.value = value
        self.d1 = d1
        self.d2 = d2

    @classmethod
    def variable(cls, t):
        return cls(t, np.ones_like(t) if isinstance(t, np.ndarray) else 1.0, 0.0)

    def __repr__(self):
        return f"Jet({self.value!r}, {self.d1!r}, {self.d2!r})"

    def __neg__(self):
        return Jet(-self.value, -self.d1, -self.d2)

    def __pos__(self):
        return self

    def __add__(self, other):
        other = _lift(other)
        return Jet(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2)

    __radd__ = __add__

    def __sub__(self, other):
        other = _lift(other)
        return Jet(self.value - other.value, self.d1 - other.d1, self.d2 - other.d2)

    def __rsub__(self, other):
        return _lift(other) - self

    def __mul__(self, other):
        other = _lift(other)
        return Jet(
            self.value * other.value,
            self.d1 * other.value + self.value * other.d1,
            self.d2 * other.value + 2.0 * self.d1 * other.d1 + self.value * other.d2,
        )

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.value
        return _chain(self, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))

    def __truediv__(self, other):
        return self * _lift(other).reciprocal()

    def __rtruediv__(self, other):
        return _lift(other) * self.reciprocal()

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return power(_lift(other), self)


def exp(a):
    a = _lift(a)
    e = np.exp(a.value)
    return _chain(a, e, e, e)


def log(a):
    a = _lift(a)
    v = a.value
    return _chain(a, np.log(v), 1.0 / v, -1.0 / (v * v))


def sqrt(a):
    a = _lift(a)
    s = np.sqrt(a.value)
    return _chain(a, s, 0.5 / s, -0.25 / (s * a.value))


def power(a, p):
    a = _lift(a)
    if isinstance(p, Jet):
        return exp(p * log(a))
    p = float(p)
    if p == 0.0:
        return Jet(np.ones_like(a.value) if isinstance(a.value, np.ndarray) else 1.0, 0.0, 0.0)
    v = a.value
    if p.is_integer() and p > 0:
        g0 = v ** p
        g1 = p * v ** (p - 1)
        g2 = p * (p - 1) * v ** (p - 2) if p >= 2 else 0.0 * v
        return _chain(a, g0, g1, g2)
    return _chain(a, v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))


class ExpressionError(ValueError):
    """Raised for warp expressions outside the supported grammar."""


_FUNCS = {"exp": exp, "log": log, "sqrt": sqrt, "pow": power}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.Pow: lambda a, b: power(a, b) if isinstance(a, Jet) or isinstance(b, Jet) else np.power(a, b),
}


def _build(node, params, variables, funcs):
    """Compile an AST node into ``fn(*args)``; ``variables`` maps names to argument slots."""
    def sub(child):
        return _build(child, params, variables, funcs)

    if isinstance(node, ast.Expression):
        return sub(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        v = float(node.value)
        return lambda *x: v
    if isinstance(node, ast.Name):
        if node.id in variables:
            k = variables[node.id]
            return lambda *x: x[k]
        if node.id in params:
            v = float(params[node.id])
            return lambda *x: v
        if node.id in ("pi", "e"):
            v = getattr(math, node.id)
            return lambda *x: v
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = sub(node.operand)
        if isinstance(node.op, ast.USub):
            return lambda *x: -inner(*x)
        return inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = sub(node.left), sub(node.right)
        return lambda *x: op(left(*x), right(*x))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in funcs:
        fn = funcs[node.func.id]
        nargs = 2 if node.func.id == "pow" else 1
        if len(node.args) != nargs or node.keywords:
            raise ExpressionError(f"{node.func.id} takes {nargs} argument(s)")
        args = [sub(a) for a in node.args]
        return lambda *x: fn(*(a(*x) for a in args))
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def _parse(text):
    try:
        return ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None


def compile_expression(text, params=None):
    """Compile ``text`` in the variable ``t`` into a function ``Jet -> Jet``.

    Accepted: numeric literals, ``t``, named parameters, ``+ - * /``, ``^`` or
    ``**``, and ``exp``, ``sqrt``, ``log``, ``pow``.
    """
    fn = _build(_parse(text), params or {}, {"t": 0}, _FUNCS)

    def evaluate(t):
        return _lift(fn(t))

    return evaluate



def _depends_on(node, name):
    return any(isinstance(n, ast.Name) and n.id == name for n in ast.walk(node))


def compile_log_expression(text, params=None):
    """Compile ``text`` into ``Jet -> Jet`` evaluating ``log f`` in log space.

    Products, quotients, constant powers, ``sqrt`` and ``exp`` are taken
    apart before any logarithm is formed, so ``exp(-t^2)`` yields ``-t^2``
    exactly even where ``f`` itself underflows.  Other subexpressions fall
    back to ``log`` of their value, which is NaN where they are not positive.
    """
    params = params or {}

    def direct(node):
        return _build(node, params, {"t": 0}, _FUNCS)

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            name, args = node.func.id, node.args
            if name == "exp" and len(args) == 1:
                return direct(args[0])
            if name == "sqrt" and len(args) == 1:
                inner = build(args[0])
                return lambda t: 0.5 * inner(t)
            if name == "pow" and len(args) == 2 and not _depends_on(args[1], "t"):
                return _scaled(build(args[0]), direct(args[1]))
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Mult):
                a, b = build(node.left), build(node.right)
                return lambda t: a(t) + b(t)
            if isinstance(node.op, ast.Div):
                a, b = build(node.left), build(node.right)
                return lambda t: a(t) - b(t)
            if isinstance(node.op, ast.Pow) and not _depends_on(node.right, "t"):
                return _scaled(build(node.left), direct(node.right))
        value = direct(node)
        return lambda t: log(_lift(value(t)))

    def _scaled(inner, exponent):
        p = float(exponent(0.0))
        return lambda t: p * inner(t)

    with np.errstate(all="ignore"):
        fn = build(_parse(text))

    def evaluate(t):
        with np.errstate(all="ignore"):
            return _lift(fn(t))

    return evaluate


_ARRAY_FUNCS = {
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "pow": np.power,
    "sin": np.sin, "cos": np.cos, "tan": np.tan,
    "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh, "abs": np.abs,
}


def compile_field_expression(text, variables, params=None):
    """Compile ``text`` into a numpy function of the named ``variables``.

    Used for boundary data and test fields, e.g.
    ``compile_field_expression("0.2*sin(pi*x1/2)", ["x1", "x2"])``.
    Same grammar as :func:`compile_expression` plus trigonometric and
    hyperbolic functions and ``abs``.
    """
    slots = {name: k for k, name in enumerate(variables)}
    fn = _build(_parse(text), params or {}, slots, _ARRAY_FUNCS)

    def evaluate(*args):
        if len(args) != len(slots):
            raise ExpressionError(f"expected {len(slots)} arguments, got {len(args)}")
        arrays = [np.asarray(a, dtype=float) for a in args]
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        return np.broadcast_to(np.asarray(fn(*arrays), dtype=float), shape).copy()

    return evaluate
