"""Reading and writing the ``grwlab/1`` JSON + CSV file formats.

Every JSON document carries ``"format": "grwlab/1"`` and a ``"kind"``.
Numeric CSV values are written with 17 significant digits so that a
write/read round trip is exact.  Floats that are not finite are written as
``nan``/``inf`` in CSV and as strings in JSON.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from .graphgeom import GraphHypersurface, Grid
from .warpkit import spacetime_from_dict

FORMAT = "grwlab/1"
FLOAT_FMT = "%.17g"

# scalar GeometryFields members exported one CSV each
FIELD_NAMES = (
    "cosh_phi",
    "sinh2_phi",
    "mean_curvature",
    "mean_curvature_nodal",
    "grad_tau_norm2",
    "sqrt_det",
    "f",
    "fp_over_f",
    "fpp_over_f",
    "log_f_second",
)


class FormatError(ValueError):
    """A file does not follow the grwlab/1 layout."""


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(doc):
    """Deterministic JSON text (sorted keys, fixed indent, trailing newline)."""
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def write_json(path, kind, body):
    doc = {"format": FORMAT, "kind": kind}
    doc.update(body)
    Path(path).write_text(dumps(doc))
    return Path(path)


def read_json(path, kind=None):
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT:
        raise FormatError(f"{path}: expected format {FORMAT!r}, got {doc.get('format')!r}")
    if kind is not None and doc.get("kind") != kind:
        raise FormatError(f"{path}: expected kind {kind!r}, got {doc.get('kind')!r}")
    return doc


# ---------------------------------------------------------------------------
# spacetimes

def write_spacetime(path, spec):
    return write_json(path, "spacetime", {"spacetime": spec.to_dict()})


def read_spacetime(path):
    return spacetime_from_dict(read_json(path, "spacetime")["spacetime"])


# ---------------------------------------------------------------------------
# surfaces: JSON header + row-major CSV of u

def _matrix(u):
    """2-D view of ``u`` in row-major order (last axis varies fastest)."""
    u = np.asarray(u, dtype=float)
    return u.reshape(-1, u.shape[-1])


def write_surface(path, surface):
    """Write ``path`` (JSON header) and ``<stem>.csv`` next to it; returns both paths."""
    path = Path(path)
    values = path.with_suffix(".csv")
    np.savetxt(values, _matrix(surface.u), fmt=FLOAT_FMT, delimiter=",")
    write_json(path, "surface", {
        "grid": surface.grid.to_dict(),
        "spacetime": surface.spec.to_dict(),
        "values": values.name,
        "layout": "row-major, last axis fastest",
    })
    return path, values


def read_surface(path):
    path = Path(path)
    doc = read_json(path, "surface")
    grid = Grid.from_dict(doc["grid"])
    data = np.loadtxt(path.parent / doc["values"], delimiter=",", ndmin=2)
    if data.size != int(np.prod(grid.shape)):
        raise FormatError(f"{doc['values']}: {data.size} values for a grid of shape {grid.shape}")
    u = data.reshape(grid.shape)
    return GraphHypersurface(grid, u, spacetime_from_dict(doc["spacetime"]))


# ---------------------------------------------------------------------------
# per-node CSV with coordinates

def write_node_csv(path, grid, columns):
    """One row per node: ``x1..xn`` then the named columns (row-major node order)."""
    coords = [c.ravel() for c in grid.coords()]
    names = [f"x{i + 1}" for i in range(grid.n)] + list(columns)
    data = np.column_stack(coords + [np.asarray(v, dtype=float).ravel() for v in columns.values()])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",", header=",".join(names), comments="")
    return Path(path)


def read_node_csv(path):
    """Return ``{column: 1-D array}`` from a file written by :func:`write_node_csv`."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def write_fields(directory, fields, names=FIELD_NAMES):
    """Export scalar geometry fields, one ``field_<name>.csv`` per field."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name in names:
        written.append(write_node_csv(directory / f"field_{name}.csv", fields.grid,
                                      {name: getattr(fields, name)}))
    n = fields.grid.n
    metric = {f"g{i + 1}{j + 1}": fields.metric[i][j] for i in range(n) for j in range(i, n)}
    written.append(write_node_csv(directory / "field_metric.csv", fields.grid, metric))
    return written


# ---------------------------------------------------------------------------
# solver history and reports

def write_history(path, history):
    """Residual history as CSV with columns iteration, residual_norm, damping."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "residual_norm", "damping"])
        for it, norm, lam in history:
            w.writerow([int(it), FLOAT_FMT % norm, FLOAT_FMT % lam])
    return Path(path)


def read_history(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(int(r["iteration"]), float(r["residual_norm"]), float(r["damping"])) for r in rows]


def write_check_report(path, report, margins=True):
    """``<path>`` JSON report plus ``<stem>_margin.csv`` per-node margins when available."""
    path = Path(path)
    body = {"report": report.to_dict()}
    if margins and report.margin is not None:
        csv_path = path.with_name(path.stem + "_margin.csv")
        grid = Grid(*_grid_args(report))
        write_node_csv(csv_path, grid, {"margin": report.margin})
        body["margins"] = csv_path.name
    write_json(path, "check_report", body)
    return path


def _grid_args(report):
    g = report.details.get("grid")
    if g is None:
        raise FormatError("check report carries no grid; cannot export margins")
    return tuple(g["lower"]), tuple(g["upper"]), tuple(g["nodes"])


def write_classification(path, report):
    return write_json(path, "classification", {"report": report.to_dict()})
