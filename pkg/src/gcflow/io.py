"""File formats and atomic writes.

Every writer renders to a string first and lands it with ``os.replace`` from a
temporary file in the target directory, so readers never see partial files.
Floats are written with ``repr`` (shortest round-trip form), which makes the
output a pure function of the values.
"""
import csv
import io as _io
import json
import os
import tempfile

import numpy as np

FIELD_COLUMNS = ("x", "y", "u", "v", "rho", "p", "L", "M", "N", "kappa")


def atomic_write_text(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(a):
    return repr(float(a))


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        obj = float(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps_json(obj):
    return json.dumps(_plain(obj), sort_keys=True, indent=1) + "\n"


def write_json(path, obj):
    atomic_write_text(path, dumps_json(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def table_text(header, columns):
    """CSV text with one row per entry of the (equal-length) ``columns``."""
    cols = [np.asarray(c, dtype=float).ravel() for c in columns]
    buf = _io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*cols):
        buf.write(",".join(_num(a) for a in row) + "\n")
    return buf.getvalue()


def write_table(path, header, columns):
    atomic_write_text(path, table_text(header, columns))


def read_table(path):
    """``{column: 1d array}`` from a header-first numeric CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [[float(a) for a in r] for r in reader if r]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {h: data[:, i] for i, h in enumerate(header)}


def write_field_csv(path, field):
    """Row-major (x outer, y inner) dump of a :class:`~gcflow.solver.SolutionField`."""
    X, Y = np.meshgrid(field.x, field.y, indexing="ij")
    L, M, N = field.lmn()
    write_table(path, FIELD_COLUMNS,
                (X, Y, field.u, field.v, field.rho, field.p, L, M, N, field.kappa))


def read_field_csv(path, y0=None, y1=None, periodic=None):
    """Inverse of :func:`write_field_csv`.

    The y-extent defaults to the cell-centred reading of the samples (one
    spacing wide cells around each centre).
    """
    from .solver import SolutionField

    t = read_table(path)
    missing = [c for c in ("x", "y", "u", "v", "kappa") if c not in t]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    x = np.unique(t["x"])
    y = np.unique(t["y"])
    nx, ny = x.size, y.size
    if nx * ny != t["x"].size:
        raise ValueError(f"{path}: samples do not form a tensor grid")
    order = np.lexsort((t["y"], t["x"]))
    shape = (nx, ny)

    def grid(c):
        return t[c][order].reshape(shape)

    dy = (y[-1] - y[0]) / max(ny - 1, 1)
    y0 = y[0] - 0.5 * dy if y0 is None else y0
    y1 = y[-1] + 0.5 * dy if y1 is None else y1
    periodic = False if periodic is None else periodic
    return SolutionField(x, y, grid("u"), grid("v"), grid("kappa"), float(y0), float(y1), periodic)


def obj_text(points):
    """Wavefront OBJ for a structured ``(nx, ny, 3)`` grid with quad faces.

    Vertices are numbered row-major from 1; face ``(i, j)`` joins vertices
    ``(i, j), (i+1, j), (i+1, j+1), (i, j+1)``.
    """
    nx, ny = points.shape[:2]
    buf = _io.StringIO()
    for p in points.reshape(-1, 3):
        buf.write(f"v {_num(p[0])} {_num(p[1])} {_num(p[2])}\n")
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j + 1
            buf.write(f"f {a} {a + ny} {a + ny + 1} {a + 1}\n")
    return buf.getvalue()


def write_obj(path, points):
    atomic_write_text(path, obj_text(np.asarray(points, dtype=float)))


def read_obj_vertices(path):
    with open(path, encoding="utf-8") as fh:
        return np.array([[float(a) for a in line.split()[1:4]] for line in fh if line.startswith("v ")])
