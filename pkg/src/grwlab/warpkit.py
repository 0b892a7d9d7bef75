"""Warping functions, the scalar rigidity criteria, and the classifier.

A GRW spacetime ``I x_f R^n`` is fixed by the fiber dimension ``n`` and a
positive warping function ``f`` on an open interval ``I``.  Everything the
classifier needs is a function of ``t`` alone:

* the null convergence condition for a flat fiber, ``(log f)'' <= 0``;
* ``phi(t) = (n+1) (f'/f)**2 - n f''/f`` and its infimum over a window;
* the critical points of ``f`` (the only candidate maximal slices).

Built-in models carry hand-coded derivatives of ``log f``; user expressions
are differentiated with :mod:`grwlab.jets`.  Numerical differentiation is
never used to produce a result.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import jets
from .config import DEFAULT

__all__ = [
    "DomainError",
    "PositivityError",
    "ParameterError",
    "InvalidWindowError",
    "IntervalDomain",
    "WarpingModel",
    "SpacetimeSpec",
    "CriticalPoint",
    "Verdict",
    "ClassificationReport",
    "eval_warp",
    "ncc_check",
    "phi",
    "inf_phi",
    "critical_points",
    "classify",
    "builtin_catalog",
    "get_spacetime",
    "expression_model",
    "spacetime_from_dict",
]


class DomainError(ValueError):
    """A time value lies outside the interval where the warp is defined."""


class PositivityError(ValueError):
    """The warping function evaluated to a non-positive number."""


class ParameterError(ValueError):
    """Invalid model parameter (e.g. a degenerate interval)."""


class InvalidWindowError(ValueError):
    """A sampling window that is empty or not contained in the domain."""


def _fmt_end(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    x = float(x)
    # integral values print without a trailing ".0"; others round-trip exactly
    return str(int(x)) if x.is_integer() and abs(x) < 2 ** 53 else repr(x)


def _parse_end(x):
    if isinstance(x, str):
        return float(x.strip().replace("infinity", "inf"))
    return float(x)


@dataclass(frozen=True)
class IntervalDomain:
    lower: float
    upper: float
    lower_open: bool = True
    upper_open: bool = True

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise InvalidWindowError(f"empty interval: lower={lo}, upper={hi}")
        # infinite ends are always open
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "lower_open", bool(self.lower_open or math.isinf(lo)))
        object.__setattr__(self, "upper_open", bool(self.upper_open or math.isinf(hi)))

    @classmethod
    def real_line(cls):
        return cls(-math.inf, math.inf)

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        lo_ok = t > self.lower if self.lower_open else t >= self.lower
        hi_ok = t < self.upper if self.upper_open else t <= self.upper
        return lo_ok & hi_ok

    def within(self, other):
        """True if every point of ``self`` lies in ``other``."""
        if self.lower < other.lower or self.upper > other.upper:
            return False
        if self.lower == other.lower and other.lower_open and not self.lower_open:
            return False
        if self.upper == other.upper and other.upper_open and not self.upper_open:
            return False
        return True

    def __str__(self):
        left = "(" if self.lower_open else "["
        right = ")" if self.upper_open else "]"
        return f"{left}{_fmt_end(self.lower)},{_fmt_end(self.upper)}{right}"

    def to_dict(self):
        return {
            "lo": _fmt_end(self.lower) if math.isinf(self.lower) else self.lower,
            "hi": _fmt_end(self.upper) if math.isinf(self.upper) else self.upper,
            "lo_open": self.lower_open,
            "hi_open": self.upper_open,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            _parse_end(data["lo"]),
            _parse_end(data["hi"]),
            data.get("lo_open", True),
            data.get("hi_open", True),
        )

    @classmethod
    def parse(cls, text, domain=None):
        """Parse ``"lo,hi"``, optionally bracketed as in ``"(0,10]"``.

        Without brackets a finite end is closed when it lies inside
        ``domain`` (or when no domain is given), otherwise open.
        """
        text = text.strip()
        lo_open = hi_open = None
        if text and text[0] in "([":
            lo_open = text[0] == "("
            text = text[1:]
        if text and text[-1] in ")]":
            hi_open = text[-1] == ")"
            text = text[:-1]
        parts = text.split(",")
        if len(parts) != 2:
            raise InvalidWindowError(f"window must be 'lo,hi', got {text!r}")
        lo, hi = (_parse_end(p) for p in parts)
        if lo_open is None:
            lo_open = bool(domain is not None and not domain.contains(lo))
        if hi_open is None:
            hi_open = bool(domain is not None and not domain.contains(hi))
        return cls(lo, hi, lo_open, hi_open)


def _as_output(x, scalar):
    if scalar:
        return float(x)
    return x


class WarpingModel:
    """A positive warping function on an open interval.

    Parameters
    ----------
    name : str
        Human-readable label.
    kind : str
        Catalog kind or ``"expression"``; used for serialization.
    params : dict
        Model parameters, serialized verbatim.
    domain : IntervalDomain
    log_jet : callable, optional
        ``t -> (log f, (log f)', (log f)'')`` on arrays.
    jet : callable, optional
        ``Jet -> Jet`` evaluating ``f`` itself; used for expressions.
    formula : str
        Display string, e.g. ``"t^(2/3)"``.
    """

    def __init__(self, name, kind, params, domain, log_jet=None, jet=None, formula=""):
        if (log_jet is None) == (jet is None):
            raise ValueError("exactly one of log_jet / jet is required")
        self.name = name
        self.kind = kind
        self.params = dict(params)
        self.domain = domain
        self.formula = formula
        self._log_jet = log_jet
        self._jet = jet

    def __repr__(self):
        return f"WarpingModel({self.name!r}, f={self.formula}, I={self.domain})"

    def _check_domain(self, t):
        inside = self.domain.contains(t)
        if not np.all(inside):
            bad = np.asarray(t, dtype=float)[~inside] if np.ndim(t) else t
            first = float(np.ravel(bad)[0])
            raise DomainError(f"t={first!r} is outside the domain I={self.domain} of {self.name}")

    def _f_jet(self, t):
        j = self._jet(jets.Jet.variable(t))
        f, d1, d2 = (np.broadcast_to(np.asarray(c, dtype=float), np.shape(t)) for c in (j.value, j.d1, j.d2))
        bad = ~(f > 0)
        if np.any(bad):
            first = float(np.ravel(np.asarray(t, dtype=float)[bad] if np.ndim(t) else t)[0])
            raise PositivityError(f"f({first!r}) <= 0 for {self.name}")
        return f, d1, d2

    def evaluate(self, t):
        """Return ``(f, f', f'')`` at ``t`` (scalar or array)."""
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        self._check_domain(t)
        if self._jet is not None:
            f, d1, d2 = self._f_jet(t)
        else:
            L, L1, L2 = self._log_jet(t)
            f = np.exp(L)
            if np.any(~(f > 0)):
                raise PositivityError(f"f underflows to 0 for {self.name} at some t in {np.ravel(t)[:3]}...")
            d1 = f * L1
            d2 = f * (L2 + L1 * L1)
        return tuple(_as_output(np.broadcast_to(c, t.shape).copy() if not scalar else c, scalar) for c in (f, d1, d2))

    def ratios(self, t):
        """Return ``(f'/f, f''/f)`` at ``t`` without forming ``f`` where possible."""
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        self._check_domain(t)
        if self._jet is not None:
            f, d1, d2 = self._f_jet(t)
            q, r = d1 / f, d2 / f
        else:
            _, L1, L2 = self._log_jet(t)
            q = np.broadcast_to(L1, t.shape)
            r = np.broadcast_to(L2 + L1 * L1, t.shape)
        return _as_output(q, scalar), _as_output(r, scalar)

    def log_second(self, t):
        """``(log f)''(t)``."""
        scalar = np.ndim(t) == 0
        t = np.asarray(t, dtype=float)
        self._check_domain(t)
        if self._jet is not None:
            f, d1, d2 = self._f_jet(t)
            q = d1 / f
            out = d2 / f - q * q
        else:
            out = np.broadcast_to(self._log_jet(t)[2], t.shape)
        return _as_output(out, scalar)

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params)}


@dataclass(frozen=True)
class SpacetimeSpec:
    """``I x_f R^n`` with metric ``-dt^2 + f(t)^2 |dx|^2``."""

    n: int
    warp: WarpingModel
    name: str = ""

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ParameterError(f"fiber dimension n must be an integer >= 2, got {self.n}")
        if not self.name:
            object.__setattr__(self, "name", self.warp.name)

    def to_dict(self):
        return {
            "name": self.name,
            "n": int(self.n),
            "warp": self.warp.to_dict(),
            "domain": self.warp.domain.to_dict(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# catalog

def _zeros_like(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def _minkowski(t):
    z = _zeros_like(t)
    return z, z, z


def _example1(t):
    return -t * t, -2.0 * t, np.full_like(t, -2.0)


def _example2(a):
    a2 = a * a

    def log_jet(t):
        d = a2 - t * t
        return 0.5 * np.log(d), -t / d, -(a2 + t * t) / (d * d)

    return log_jet


def _steady_state(t):
    return t, np.ones_like(t), _zeros_like(t)


def _einstein_de_sitter(t):
    return (2.0 / 3.0) * np.log(t), 2.0 / (3.0 * t), -2.0 / (3.0 * t * t)


def _radiation(a):
    def log_jet(t):
        return 0.5 * np.log(2.0 * a * t), 0.5 / t, -0.5 / (t * t)

    return log_jet


def _positive_param(kind, a):
    a = float(a)
    if not a > 0 or math.isinf(a):
        raise ParameterError(f"{kind} requires a finite parameter a > 0, got a={a}")
    return a


def _make_model(kind, params):
    real = IntervalDomain.real_line()
    half = IntervalDomain(0.0, math.inf)
    if kind == "minkowski":
        return WarpingModel("Minkowski", kind, {}, real, log_jet=_minkowski, formula="1")
    if kind == "example1":
        return WarpingModel("Example1", kind, {}, real, log_jet=_example1, formula="exp(-t^2)")
    if kind == "example2":
        a = _positive_param("Example2", params.get("a", 1.0))
        return WarpingModel("Example2", kind, {"a": a}, IntervalDomain(-a, a), log_jet=_example2(a),
                            formula="sqrt(a^2-t^2)")
    if kind == "steady_state":
        return WarpingModel("SteadyState", kind, {}, real, log_jet=_steady_state, formula="exp(t)")
    if kind == "einstein_de_sitter":
        return WarpingModel("EinsteinDeSitter", kind, {}, half, log_jet=_einstein_de_sitter, formula="t^(2/3)")
    if kind == "radiation":
        a = _positive_param("Radiation", params.get("a", 1.0))
        return WarpingModel("Radiation", kind, {"a": a}, half, log_jet=_radiation(a),
                            formula="(2*a*t)^(1/2)")
    if kind == "expression":
        return expression_model(params["expr"], IntervalDomain.from_dict(params["domain"]),
                                name=params.get("name", "expression"),
                                params={k: v for k, v in params.items() if k not in ("expr", "domain", "name")})
    raise ParameterError(f"unknown warp kind {kind!r}")


CATALOG_KINDS = {
    "Minkowski": "minkowski",
    "Example1": "example1",
    "Example2": "example2",
    "SteadyState": "steady_state",
    "EinsteinDeSitter": "einstein_de_sitter",
    "Radiation": "radiation",
}


def get_spacetime(name, n=3, **params):
    """Look up a catalog spacetime by name, e.g. ``get_spacetime("Example2", n=2, a=2)``."""
    if name not in CATALOG_KINDS:
        raise KeyError(f"no catalog spacetime named {name!r}")
    params = {k: v for k, v in params.items() if v is not None}
    return SpacetimeSpec(n, _make_model(CATALOG_KINDS[name], params), name)


def builtin_catalog(n=3, a=1.0):
    return [get_spacetime(name, n=n, a=a) if CATALOG_KINDS[name] in ("example2", "radiation")
            else get_spacetime(name, n=n) for name in CATALOG_KINDS]


def expression_model(expr, domain, name="expression", params=None):
    """Warping model from an expression in ``t``, e.g. ``"exp(-t^2)"`` or ``"1 + t^2"``.

    ``log f`` and its derivatives are taken from a direct evaluation of
    ``f`` where that is a normal positive float, and from a log-space
    compilation of the same expression elsewhere (underflow, overflow).
    """
    params = dict(params or {})
    direct = jets.compile_expression(expr, params)
    logspace = jets.compile_log_expression(expr, params)
    # direct values are trusted well inside the float range only: 1/f^2 enters (log f)''
    lo_f, hi_f = 1e-150, 1e150

    def log_jet(t):
        t = np.asarray(t, dtype=float)
        var = jets.Jet.variable(t)
        with np.errstate(all="ignore"):
            fj = direct(var)
            f = np.broadcast_to(np.asarray(fj.value, dtype=float), t.shape)
            dj = jets.log(fj)
            sj = logspace(var)
        pairs = [tuple(np.broadcast_to(np.asarray(c, dtype=float), t.shape) for c in pair)
                 for pair in ((dj.value, sj.value), (dj.d1, sj.d1), (dj.d2, sj.d2))]
        ok = (f >= lo_f) & (f <= hi_f)
        for a, _ in pairs:
            ok &= np.isfinite(a)
        parts = [np.where(ok, a, b) for a, b in pairs]
        bad = ~np.isfinite(parts[0]) | ~np.isfinite(parts[1]) | ~np.isfinite(parts[2])
        if np.any(bad):
            first = float(np.ravel(t[bad] if t.ndim else t)[0])
            raise PositivityError(f"f({first!r}) is not a positive finite number for {name} = {expr}")
        return tuple(parts)

    stored = dict(params, expr=expr, domain=domain.to_dict(), name=name)
    return WarpingModel(name, "expression", stored, domain, log_jet=log_jet, formula=expr)


def spacetime_from_dict(data):
    warp = data["warp"]
    params = dict(warp.get("params", {}))
    if warp["kind"] == "expression" and "domain" not in params:
        params["domain"] = data["domain"]
    model = _make_model(warp["kind"], params)
    return SpacetimeSpec(int(data["n"]), model, data.get("name", model.name))


# ---------------------------------------------------------------------------
# scalar criteria

def eval_warp(model, t):
    """``(f(t), f'(t), f''(t))``; raises DomainError / PositivityError."""
    return model.evaluate(t)


def phi(spec, t):
    """``(n+1) (f'/f)^2 - n f''/f`` at ``t``."""
    q, r = spec.warp.ratios(t)
    n = spec.n
    return (n + 1) * q * q - n * r


class _Scan:
    """Sampling of a window, compactified by ``t = tan(s)`` when unbounded."""

    def __init__(self, window, domain, points):
        if not isinstance(window, IntervalDomain):
            raise InvalidWindowError(f"window must be an IntervalDomain, got {window!r}")
        if not window.within(domain):
            raise InvalidWindowError(f"window {window} is not contained in the domain {domain}")
        if points < 2:
            raise InvalidWindowError(f"need at least 2 samples, got {points}")
        self.window = window
        self.points = int(points)
        self.compact = math.isinf(window.lower) or math.isinf(window.upper)
        if self.compact:
            self.s_lo, self.s_hi = math.atan(window.lower), math.atan(window.upper)
        else:
            self.s_lo, self.s_hi = window.lower, window.upper

    def to_t(self, s):
        s = np.asarray(s, dtype=float)
        return np.tan(s) if self.compact else s

    def nodes(self, a=None, b=None):
        """``points`` nodes on ``[a, b]``, dropping ends that are open window ends."""
        a = self.s_lo if a is None else a
        b = self.s_hi if b is None else b
        s = np.linspace(a, b, self.points)
        keep = np.ones(s.shape, dtype=bool)
        if a <= self.s_lo and self.window.lower_open:
            keep[0] = False
        if b >= self.s_hi and self.window.upper_open:
            keep[-1] = False
        s = s[keep]
        t = self.to_t(s)
        inside = self.window.contains(t)
        return s[inside], t[inside]

    def probes(self, eps):
        """Near-endpoint samples at shrinking offsets, one triple per open finite-limit end."""
        span = self.s_hi - self.s_lo
        out = []
        for side, edge, is_open in (("lower", self.s_lo, self.window.lower_open),
                                    ("upper", self.s_hi, self.window.upper_open)):
            if not is_open:
                continue
            sign = 1.0 if side == "lower" else -1.0
            s = np.array([edge + sign * eps * span * 10.0 ** -k for k in range(3)])
            t = self.to_t(s)
            if np.all(self.window.contains(t)) and np.all(np.isfinite(t)):
                out.append((side, s, t))
        return out


def _aitken(v):
    """Limit estimate of a 3-term sequence, or None if it is not contracting."""
    v1, v2, v3 = (float(x) for x in v)
    if not all(math.isfinite(x) for x in (v1, v2, v3)):
        return None
    d1, d2 = v2 - v1, v3 - v2
    if abs(d2) > abs(d1):
        return None
    denom = d2 - d1
    if denom == 0.0:
        return v3
    return v3 - d2 * d2 / denom


@dataclass(frozen=True)
class InfimumResult:
    value: float
    argmin: float
    from_limit: bool = False
    limit_side: str = ""

    def to_dict(self):
        return {
            "value": self.value,
            "argmin": _fmt_end(self.argmin) if math.isinf(self.argmin) else self.argmin,
            "from_limit": self.from_limit,
            "limit_side": self.limit_side,
        }


def inf_phi(spec, window, tol=DEFAULT):
    """Infimum of :func:`phi` over ``window``.

    Adaptive scan with ``tol.refine_rounds`` refinements around the running
    minimum.  At open ends, ``phi`` is probed at geometrically shrinking
    offsets and a converging limit (Aitken extrapolation) counts as a value
    of the infimum.
    """
    scan = _Scan(window, spec.warp.domain, tol.scan_points)
    s, t = scan.nodes()
    values = phi(spec, t)
    k = int(np.argmin(values))
    best_v, best_t = float(values[k]), float(t[k])
    for _ in range(tol.refine_rounds):
        a = s[max(k - 1, 0)]
        b = s[min(k + 1, len(s) - 1)]
        if a == b:
            break
        s, t = scan.nodes(a, b)
        values = phi(spec, t)
        k = int(np.argmin(values))
        if values[k] < best_v:
            best_v, best_t = float(values[k]), float(t[k])
    result = InfimumResult(best_v, best_t)
    for side, _, tp in scan.probes(tol.probe_eps):
        vp = phi(spec, tp)
        j = int(np.argmin(vp))
        if vp[j] < result.value:
            result = InfimumResult(float(vp[j]), float(tp[j]))
        limit = _aitken(vp)
        if limit is not None and limit < result.value:
            edge = window.lower if side == "lower" else window.upper
            result = InfimumResult(limit, edge, True, side)
    return result


def ncc_check(spec, window, samples=None, tol=DEFAULT):
    """Null convergence condition ``(log f)'' <= tol_ncc`` on ``window``.

    Returns ``(holds, witness)`` where ``witness`` is the smallest sampled
    ``t`` violating the condition, or None.
    """
    samples = tol.scan_points if samples is None else samples
    scan = _Scan(window, spec.warp.domain, samples)
    s, t = scan.nodes()
    values = spec.warp.log_second(t)
    all_t = [t]
    all_v = [values]
    k = int(np.argmax(values))
    for _ in range(tol.refine_rounds):
        a, b = s[max(k - 1, 0)], s[min(k + 1, len(s) - 1)]
        if a == b:
            break
        s, t = scan.nodes(a, b)
        values = spec.warp.log_second(t)
        all_t.append(t)
        all_v.append(values)
        k = int(np.argmax(values))
    for _, _, tp in scan.probes(tol.probe_eps):
        all_t.append(tp)
        all_v.append(spec.warp.log_second(tp))
    t_all = np.concatenate(all_t)
    v_all = np.concatenate(all_v)
    bad = v_all > tol.tol_ncc
    if not np.any(bad):
        return True, None
    return False, float(np.min(t_all[bad]))


@dataclass(frozen=True)
class CriticalPoint:
    """A zero of ``f'``; ``t_end`` is set when ``f'`` vanishes on a whole run of samples."""

    t: float
    degenerate: bool = False
    t_end: object = None

    def to_dict(self):
        return {"t": self.t, "degenerate": self.degenerate, "t_end": self.t_end}


def _bisect(fn, a, b, fa):
    """Bisection for a sign change of ``fn`` on ``[a, b]`` down to adjacent floats."""
    for _ in range(2000):
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        fm = fn(m)
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return a if abs(fn(a)) <= abs(fn(b)) else b


def critical_points(model, window, tol=DEFAULT):
    """Zeros of ``f'`` in ``window``, located through ``f'/f`` (same zeros, no underflow).

    Sign changes are refined by bisection.  Interior minima of ``|f'/f|``
    without a sign change are refined through the sign change of
    ``(f'/f)'`` and kept, flagged degenerate, when ``|f'/f| <= tol_root``
    there.  Roots where ``f''`` also vanishes are flagged degenerate too.
    """
    scan = _Scan(window, model.domain, tol.scan_points)
    s, t = scan.nodes()

    def q_of_s(x):
        return float(model.ratios(float(scan.to_t(x)))[0])

    def dq_of_s(x):
        return float(model.log_second(float(scan.to_t(x))))

    q = np.asarray(model.ratios(t)[0], dtype=float)
    roots = []
    runs = []
    k = 0
    while k < len(s):
        if q[k] == 0.0:
            j = k
            while j + 1 < len(s) and q[j + 1] == 0.0:
                j += 1
            if j > k:
                runs.append(CriticalPoint(float(t[k]), True, float(t[j])))
            else:
                roots.append(float(s[k]))
            k = j + 1
            continue
        if k + 1 < len(s) and q[k] * q[k + 1] < 0:
            roots.append(_bisect(q_of_s, float(s[k]), float(s[k + 1]), float(q[k])))
        k += 1
    aq = np.abs(q)
    for k in range(1, len(s) - 1):
        if q[k] == 0.0 or q[k - 1] * q[k] < 0 or q[k] * q[k + 1] < 0:
            continue
        if not (aq[k] <= aq[k - 1] and aq[k] <= aq[k + 1] and (aq[k] < aq[k - 1] or aq[k] < aq[k + 1])):
            continue
        a, b = float(s[k - 1]), float(s[k + 1])
        da, db = dq_of_s(a), dq_of_s(b)
        if da * db < 0:
            x = _bisect(dq_of_s, a, b, da)
        else:
            x = float(s[k])
        if abs(q_of_s(x)) <= tol.tol_root:
            roots.append(x)
    points = []
    for x in sorted(set(roots)):
        t0 = float(scan.to_t(x))
        _, r = model.ratios(t0)
        points.append(CriticalPoint(t0, bool(abs(r) <= tol.tol_root)))
    return sorted(points + runs, key=lambda c: c.t)


class Verdict(str, Enum):
    UNIQUE_SLICE = "UNIQUE_SLICE"
    NON_EXISTENCE = "NON_EXISTENCE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class ClassificationReport:
    spacetime: dict
    tau_window: IntervalDomain
    ncc_holds: bool
    ncc_witness: object
    inf_phi: InfimumResult
    critical_points: list
    verdict: Verdict
    reason: str
    slices: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "spacetime": self.spacetime,
            "tau_window": self.tau_window.to_dict(),
            "ncc_holds": self.ncc_holds,
            "ncc_witness": self.ncc_witness,
            "inf_phi": self.inf_phi.to_dict(),
            "critical_points": [c.to_dict() for c in self.critical_points],
            "verdict": self.verdict.value,
            "slices": list(self.slices),
            "reason": self.reason,
            "tolerances": dict(self.tolerances),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def classify(spec, tau_window=None, tol=DEFAULT):
    """Apply the rigidity criterion for flat-fiber GRW spacetimes.

    ``tau_window`` encodes what is assumed about the hypersurface's time
    range: ``(0, T]`` means bounded away from future infinity, the whole
    domain means no assumption.
    """
    window = spec.warp.domain if tau_window is None else tau_window
    holds, witness = ncc_check(spec, window, tol=tol)
    inf = inf_phi(spec, window, tol=tol)
    cps = critical_points(spec.warp, window, tol=tol)
    record = {k: getattr(tol, k) for k in ("tol_ncc", "tol_inf", "tol_root", "scan_points",
                                          "refine_rounds", "probe_eps")}
    slices = []
    if not holds:
        verdict, reason = Verdict.INCONCLUSIVE, f"NCC fails: (log f)'' > 0 at t={witness!r}"
    elif inf.value <= tol.tol_inf:
        verdict = Verdict.INCONCLUSIVE
        reason = f"infimum condition fails: inf phi = {inf.value:.6g} <= tol_inf"
    elif cps:
        verdict = Verdict.UNIQUE_SLICE
        slices = [c.t for c in cps]
        reason = "NCC holds, inf phi > 0; a complete maximal hypersurface must be a slice t = t0 with f'(t0) = 0"
    else:
        verdict = Verdict.NON_EXISTENCE
        reason = "NCC holds, inf phi > 0 and f' has no zero in the window: no complete maximal hypersurface"
    return ClassificationReport(spec.to_dict(), window, holds, witness, inf, cps, verdict, reason, slices, record)
