"""Command-line front end: ``grwlab <subcommand> [options]``.

Subcommands ``catalog``, ``classify``, ``solve``, ``verify`` and
``convergence``.  Every run except ``catalog`` writes its outputs under a
fresh run directory ``<root>/<timestamp>-<config hash>`` together with a
``manifest.json`` that echoes the fully resolved configuration.  The root
is ``--out``, else ``$GRWLAB_OUT``, else ``./grwlab-runs``.  Report files
never contain timestamps, so reruns of the same configuration give
byte-identical reports.

Exit codes: 0 success, 1 usage error, 2 infeasible input, 3 check failure.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .config import DEFAULT, Tolerances
from .graphgeom import GraphHypersurface, Grid, SpacelikeError, compute_fields, laplace_beltrami
from .jets import ExpressionError, compile_field_expression
from .maxsolver import DirichletProblem, InfeasibleProblemError, continuation_solve, solve
from .verify import (
    CHECK_NAMES,
    PreconditionError,
    calibration_errors,
    check_nishikawa_identity,
    constants_from_table,
    hyperboloid_surface,
    laplacian_identity_terms,
    run_checks,
)
from .warpkit import (
    CATALOG_KINDS,
    DomainError,
    IntervalDomain,
    InvalidWindowError,
    ParameterError,
    PositivityError,
    SpacetimeSpec,
    builtin_catalog,
    classify,
    expression_model,
    get_spacetime,
    phi,
    spacetime_from_dict,
)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_CHECK = 0, 1, 2, 3

# --tol-* flag -> Tolerances field
TOL_FLAGS = {
    "tol_ncc": "tol_ncc",
    "tol_inf": "tol_inf",
    "tol_root": "tol_root",
    "tol_solver": "solver_tol",
    "tol_space": "eps_space",
    "max_iter": "max_iter",
}
CONVERGENCE_CASES = ("hyperboloid", "plane", "slice")
EXACT_LEVEL = 1e-12


class UsageError(Exception):
    pass


class NotFound(UsageError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the contract reserves 2 for infeasible input
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# argument parsing
#
# Shared options are defined with SUPPRESS defaults so that a flag given
# before the subcommand is not reset by the subparser.

def _global_options():
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("global options")
    g.add_argument("--config", metavar="FILE", help="JSON file of option values; flags override it")
    g.add_argument("--out", metavar="DIR", help="output root (default $GRWLAB_OUT or ./grwlab-runs)")
    g.add_argument("--serial", action="store_true",
                   help="force the bit-reproducible serial code path")
    g.add_argument("--seed", type=int, help="seed for randomized test data (default 0)")
    for flag in TOL_FLAGS:
        kind = int if flag == "max_iter" else float
        name = "--" + flag.replace("_", "-")
        g.add_argument(name, type=kind, metavar="X", help=f"override tolerance {TOL_FLAGS[flag]}")
    return p


def _spacetime_options():
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("spacetime")
    g.add_argument("--spacetime", help="catalog name or inline JSON spacetime")
    g.add_argument("--n", type=int, help="fiber dimension")
    g.add_argument("--a", type=float, help="catalog parameter a (Example2, Radiation)")
    g.add_argument("--expr", help="inline warping function of t, e.g. 'exp(-t^2)'")
    g.add_argument("--domain", help="interval of --expr, e.g. '-inf,inf' or '(0,inf)'")
    return p


def _grid_options():
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("grid and data")
    g.add_argument("--nodes", type=int, help="nodes per axis on [-extent, extent]^n")
    g.add_argument("--extent", type=float, help="half side length of the square (default 1)")
    g.add_argument("--boundary", help="boundary data in x1..xn (or x, y, z); default '0'")
    g.add_argument("--initial", help="initial guess expression; default harmonic extension")
    g.add_argument("--continuation", type=int, help="number of continuation stages (default 1)")
    return p


def build_parser():
    common = _global_options()
    space = _spacetime_options()
    grid = _grid_options()
    parser = _Parser(prog="grwlab", description="Maximal hypersurfaces in warped product spacetimes.",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")

    p = sub.add_parser("catalog", parents=[common], help="list built-in spacetimes")
    p.add_argument("--json", action="store_true", default=None, help="machine-readable listing")
    p.add_argument("--name", help="show a single entry")
    p.add_argument("--n", type=int, help="fiber dimension recorded in the listing (default 3)")
    p.add_argument("--a", type=float, help="parameter for Example2 and Radiation (default 1)")

    p = sub.add_parser("classify", parents=[common, space], help="apply the rigidity criterion")
    p.add_argument("--window", help="time window of the hypersurface, e.g. '0,10' or '(0,10]'")
    p.add_argument("--json", action="store_true", default=None, help="print the full report as JSON")

    sub.add_parser("solve", parents=[common, space, grid], help="solve a maximal Dirichlet problem")

    p = sub.add_parser("verify", parents=[common, space, grid], help="run the numerical checks")
    p.add_argument("--surface", metavar="FILE", help="grwlab/1 surface JSON; default: solve inline")
    p.add_argument("--checks", help=f"comma list from {','.join(CHECK_NAMES)} (default: all)")
    p.add_argument("--field", help="positive test field for the nishikawa check (Euclidean background)")
    p.add_argument("--c", type=float, help="constant c of the assumed bound Lap u >= c u^2")

    p = sub.add_parser("convergence", parents=[common], help="grid refinement study")
    p.add_argument("--case", help=f"one of {', '.join(CONVERGENCE_CASES)}")
    p.add_argument("--levels", help="comma list of node counts, at least 3 (default 33,65,129)")
    p.add_argument("--n", type=int, help="fiber dimension (default 2)")
    return parser


def _options(args):
    """Merge defaults < config file < command-line flags."""
    opts = {}
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        opts.update({k.replace("-", "_"): v for k, v in data.items()})
    opts.update({k: v for k, v in vars(args).items() if v is not None})
    return opts


def _tolerances(opts):
    base = opts.get("tolerances")
    tol = Tolerances.from_dict({**DEFAULT.to_dict(), **base}) if base else DEFAULT
    return tol.with_overrides(**{field: opts.get(flag) for flag, field in TOL_FLAGS.items()})


# ---------------------------------------------------------------------------
# resolution of spacetimes and grids

def _spacetime(opts, n_default):
    n = int(opts.get("n", n_default))
    if opts.get("expr"):
        domain = IntervalDomain.parse(str(opts.get("domain", "-inf,inf")))
        return SpacetimeSpec(n, expression_model(opts["expr"], domain), "expression")
    name = opts.get("spacetime")
    if name is None:
        raise UsageError("a spacetime is required: --spacetime NAME|JSON or --expr")
    if isinstance(name, dict) or str(name).lstrip().startswith("{"):
        data = name if isinstance(name, dict) else json.loads(name)
        data = {"n": n, **data}
        return spacetime_from_dict(data)
    if name not in CATALOG_KINDS:
        raise NotFound(f"no catalog spacetime named {name!r}; see 'grwlab catalog'")
    return get_spacetime(name, n=n, a=opts.get("a"))


def _grid(opts, n):
    if opts.get("nodes") is None:
        raise UsageError("missing grid spec: --nodes is required")
    extent = float(opts.get("extent", 1.0))
    return Grid.square(n, int(opts["nodes"]), -extent, extent)


def _field(text, grid):
    names = [f"x{i + 1}" for i in range(grid.n)]
    alias = ["x", "y", "z"][: grid.n]
    coords = grid.coords()
    fn = compile_field_expression(str(text), names + alias)
    return fn(*coords, *coords)


# ---------------------------------------------------------------------------
# run directories

def _root(opts):
    return Path(opts.get("out") or os.environ.get("GRWLAB_OUT") or "grwlab-runs")


def _run_dir(config):
    text = io.dumps(config)
    digest = hashlib.sha256(text.encode()).hexdigest()[:10]
    root = Path(config["out"])
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    path = root / f"{stamp}-{digest}"
    k = 1
    while path.exists():
        path = root / f"{stamp}-{digest}-{k}"
        k += 1
    path.mkdir(parents=True)
    io.write_json(path / "manifest.json", "manifest", {"config": config})
    return path


def _config(command, opts, tol, **extra):
    config = {
        "subcommand": command,
        "out": str(_root(opts)),
        "serial": bool(opts.get("serial", False)),
        "seed": int(opts.get("seed", 0)),
        "tolerances": tol.to_dict(),
    }
    config.update(extra)
    return config


# ---------------------------------------------------------------------------
# subcommands

def cmd_catalog(opts, out):
    n = int(opts.get("n", 3))
    entries = builtin_catalog(n=n, a=float(opts.get("a", 1.0)))
    if opts.get("name"):
        entries = [s for s in entries if s.name == opts["name"]]
        if not entries:
            raise NotFound(f"no catalog spacetime named {opts['name']!r}")
    if opts.get("json"):
        listing = [{"name": s.name, "formula": s.warp.formula, "interval": str(s.warp.domain),
                    "domain": s.warp.domain.to_dict(), "params": s.warp.params, "n": s.n}
                   for s in entries]
        out.write(io.dumps(listing))
        return EXIT_OK
    for s in entries:
        params = "  ".join(f"{k}={v:g}" for k, v in s.warp.params.items())
        line = f"{s.name}  f={s.warp.formula}  I={s.warp.domain}"
        out.write(line + (f"  {params}" if params else "") + "\n")
    return EXIT_OK


def cmd_classify(opts, out):
    tol = _tolerances(opts)
    spec = _spacetime(opts, 3)
    domain = spec.warp.domain
    window = IntervalDomain.parse(str(opts["window"]), domain) if opts.get("window") else domain
    config = _config("classify", opts, tol, spacetime=spec.to_dict(), window=window.to_dict())
    report = classify(spec, window, tol)
    run = _run_dir(config)
    io.write_classification(run / "classification.json", report)
    if opts.get("json"):
        out.write(io.dumps(report.to_dict()))
    else:
        out.write(f"spacetime: {spec.name} (n={spec.n})  window: {window}\n")
        out.write(f"NCC holds: {report.ncc_holds}  inf phi: {report.inf_phi.value:.12g}\n")
        if report.slices:
            out.write("slices: " + ", ".join(f"t={t:.12g}" for t in report.slices) + "\n")
        out.write(f"verdict: {report.verdict.value}\n")
    out.write(f"run directory: {run}\n")
    return EXIT_OK


def _solve(opts, tol):
    spec = _spacetime(opts, 2)
    grid = _grid(opts, spec.n)
    boundary = _field(opts.get("boundary", "0"), grid)
    initial = _field(opts["initial"], grid) if opts.get("initial") else None
    problem = DirichletProblem(spec, grid, boundary, initial, tol)
    steps = int(opts.get("continuation", 1))
    outcome = continuation_solve(problem, steps) if steps != 1 else solve(problem)
    return spec, grid, outcome


def _solve_config(command, opts, tol, spec, grid):
    return _config(command, opts, tol, spacetime=spec.to_dict(), grid=grid.to_dict(),
                   boundary=str(opts.get("boundary", "0")), initial=opts.get("initial"),
                   continuation=int(opts.get("continuation", 1)))


def _outcome_dict(outcome, surface):
    u = outcome.u
    doc = {
        "status": outcome.status.value,
        "converged": outcome.converged,
        "iterations": outcome.iterations,
        "residual_max": outcome.residual_max,
        "message": outcome.message,
        "max_abs_u": float(np.max(np.abs(u))),
        "stages": outcome.stages,
    }
    try:
        fields = compute_fields(surface)
        doc["max_sinh2_phi"] = float(np.nanmax(fields.sinh2_phi))
    except SpacelikeError:
        fields = None
    return doc, fields


def cmd_solve(opts, out):
    tol = _tolerances(opts)
    spec, grid, outcome = _solve(opts, tol)
    run = _run_dir(_solve_config("solve", opts, tol, spec, grid))
    surface = GraphHypersurface(grid, outcome.u, spec)
    io.write_surface(run / "surface.json", surface)
    io.write_history(run / "history.csv", outcome.history)
    doc, fields = _outcome_dict(outcome, surface)
    if fields is not None:
        io.write_fields(run / "fields", fields)
    io.write_json(run / "outcome.json", "solve_outcome", {"outcome": doc})
    out.write(f"status: {doc['status']}  iterations: {doc['iterations']}  "
              f"residual: {doc['residual_max']:.3e}  max|u|: {doc['max_abs_u']:.3e}\n")
    out.write(f"run directory: {run}\n")
    return EXIT_OK if outcome.converged else EXIT_CHECK


def _write_checks(run, results, out):
    ok = True
    for name, rep in results.items():
        if isinstance(rep, str):
            io.write_json(run / f"check_{name}.json", "check_error", {"check": name, "error": rep})
            out.write(f"{name:<20} ERROR  {rep}\n")
            ok = False
            continue
        io.write_check_report(run / f"check_{name}.json", rep)
        flag = "PASS" if rep.passed else "FAIL"
        out.write(f"{name:<20} {flag}   worst margin {rep.worst_margin:+.3e}  "
                  f"threshold -{rep.tolerance:.3e}  at {tuple(round(x, 6) for x in rep.worst_point)}\n")
        ok = ok and rep.passed
    return ok


def cmd_verify(opts, out):
    tol = _tolerances(opts)
    if opts.get("field") is not None:
        n = int(opts.get("n", 2))
        grid = _grid(opts, n)
        u = _field(opts["field"], grid)
        config = _config("verify", opts, tol, grid=grid.to_dict(), field=str(opts["field"]),
                         c=opts.get("c"), checks=["nishikawa"])
        try:
            results = {"nishikawa": check_nishikawa_identity(grid, u, c=opts.get("c"), tol=tol)}
        except PreconditionError as exc:
            results = {"nishikawa": f"precondition failed: {exc}"}
        run = _run_dir(config)
    else:
        names = [c.strip() for c in opts["checks"].split(",")] if opts.get("checks") else None
        unknown = [c for c in names or [] if c not in CHECK_NAMES]
        if unknown:
            raise UsageError(f"unknown check(s) {unknown}; choose from {list(CHECK_NAMES)}")
        if opts.get("surface"):
            surface = io.read_surface(opts["surface"])
            config = _config("verify", opts, tol, surface=str(opts["surface"]), checks=names,
                             spacetime=surface.spec.to_dict(), grid=surface.grid.to_dict())
        else:
            spec, grid, outcome = _solve(opts, tol)
            config = _solve_config("verify", opts, tol, spec, grid)
            config["checks"] = names
            if not outcome.converged:
                run = _run_dir(config)
                out.write(f"inline solve did not converge: {outcome.message}\nrun directory: {run}\n")
                return EXIT_CHECK
            surface = GraphHypersurface(grid, outcome.u, spec)
        run = _run_dir(config)
        if not opts.get("surface"):
            io.write_surface(run / "surface.json", surface)
        results = run_checks(surface, names, tol)
    ok = _write_checks(run, results, out)
    out.write(f"run directory: {run}\n")
    return EXIT_OK if ok else EXIT_CHECK


def _levels(opts):
    text = opts.get("levels", "33,65,129")
    try:
        levels = [int(x) for x in str(text).split(",")] if not isinstance(text, list) else [int(x) for x in text]
    except ValueError:
        raise UsageError(f"--levels must be a comma list of integers, got {text!r}") from None
    if len(levels) < 3:
        raise ParameterError(f"a convergence study needs at least 3 grid levels, got {len(levels)}")
    if sorted(levels) != levels or len(set(levels)) != len(levels):
        raise ParameterError("grid levels must be strictly increasing")
    return levels


def convergence_errors(case, nodes, n=2, tol=DEFAULT):
    """Max-node errors of the geometry and check fields on one grid level."""
    if case == "hyperboloid":
        surface, r2 = hyperboloid_surface(nodes, n=n)
        fields = compute_fields(surface, tol)
        m1 = surface.grid.depth_mask(1)
        errors = {"mean_curvature": float(np.max(np.abs(fields.mean_curvature[m1] - 1.0)))}
        if n == 2:
            errors.update({k: v for k, v in calibration_errors(nodes, tol).items() if k != "h"})
        return errors, surface.grid.hmax
    if case == "plane":
        spec = get_spacetime("Minkowski", n=n)
        grid = Grid.square(n, nodes)
        X = grid.coords()
        u = sum((0.5 / (i + 1)) * x for i, x in enumerate(X))
    elif case == "slice":
        spec = get_spacetime("Example1", n=n)
        grid = Grid.square(n, nodes)
        u = np.full(grid.shape, 0.3)
    else:
        raise UsageError(f"unknown case {case!r}; choose from {', '.join(CONVERGENCE_CASES)}")
    fields = compute_fields(GraphHypersurface(grid, u, spec), tol)
    m1, m2 = grid.depth_mask(1), grid.depth_mask(2)
    q = fields.fp_over_f
    errors = {"mean_curvature": float(np.max(np.abs((fields.mean_curvature - q)[m1])))}
    s2 = fields.sinh2_phi
    lap = laplace_beltrami(fields, s2).values
    errors["lemma1"] = float(np.max(np.abs((0.5 * lap - phi(spec, u) * s2 * s2)[m2])))
    if n == 2 and case == "plane":
        lhs, rhs = laplacian_identity_terms(fields)
        errors["laplacian_identity"] = float(np.max(np.abs((lhs - rhs)[m2])))
    return errors, grid.hmax


def _orders(table, key):
    errs = [row["errors"][key] for row in table]
    if max(errs) <= EXACT_LEVEL:
        return "exact"
    out = []
    for a, b in zip(table, table[1:]):
        ea, eb = a["errors"][key], b["errors"][key]
        out.append(math.log(ea / eb) / math.log(a["h"] / b["h"]) if ea > 0 and eb > 0 else float("nan"))
    return out


def cmd_convergence(opts, out):
    tol = _tolerances(opts)
    case = opts.get("case")
    if case not in CONVERGENCE_CASES:
        raise UsageError(f"--case must be one of {', '.join(CONVERGENCE_CASES)}, got {case!r}")
    levels = _levels(opts)
    n = int(opts.get("n", 2))
    config = _config("convergence", opts, tol, case=case, levels=levels, n=n)
    table = []
    for nodes in levels:
        errors, h = convergence_errors(case, nodes, n, tol)
        table.append({"nodes": nodes, "h": h, "errors": errors})
    keys = list(table[0]["errors"])
    orders = {k: _orders(table, k) for k in keys}
    result = {"case": case, "levels": table, "orders": orders}
    if case == "hyperboloid" and n == 2:
        flat = [dict(row["errors"], h=row["h"]) for row in table]
        result["calibrated_constants"] = constants_from_table(flat)
    run = _run_dir(config)
    io.write_json(run / "convergence.json", "convergence", result)
    rows = [{"nodes": r["nodes"], "h": r["h"], **r["errors"]} for r in table]
    with open(run / "convergence.csv", "w") as fh:
        fh.write(",".join(["nodes", "h"] + keys) + "\n")
        for r in rows:
            fh.write(",".join([str(r["nodes"]), io.FLOAT_FMT % r["h"]] + [io.FLOAT_FMT % r[k] for k in keys]) + "\n")
    out.write(f"case: {case}  levels: {levels}\n")
    for k in keys:
        errs = "  ".join(f"{row['errors'][k]:.3e}" for row in table)
        o = orders[k]
        rate = o if isinstance(o, str) else "  ".join(f"{x:.2f}" for x in o)
        out.write(f"{k:<20} errors {errs}   order {rate}\n")
    if "calibrated_constants" in result:
        out.write("calibrated C: " + json.dumps(result["calibrated_constants"], sort_keys=True) + "\n")
    out.write(f"run directory: {run}\n")
    return EXIT_OK


COMMANDS = {
    "catalog": cmd_catalog,
    "classify": cmd_classify,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "convergence": cmd_convergence,
}


def main(argv=None, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: " + ", ".join(COMMANDS))
        opts = _options(args)
        return COMMANDS[args.command](opts, out)
    except NotFound as exc:
        err.write(f"grwlab: not found: {exc}\n")
        return EXIT_USAGE
    except (UsageError, ParameterError, InvalidWindowError, ExpressionError, KeyError,
            json.JSONDecodeError, io.FormatError) as exc:
        err.write(f"grwlab: usage error: {exc}\n")
        return EXIT_USAGE
    except (InfeasibleProblemError, DomainError, PositivityError, SpacelikeError) as exc:
        err.write(f"grwlab: infeasible input: {exc}\n")
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
