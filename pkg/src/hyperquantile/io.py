"""CSV and JSON I/O.

Two CSV layouts are accepted, chosen by header:

* Poincare disk: ``x,y[,label]``
* hyperboloid: ``x0,x1,x2[,label]`` (generally ``x0..xn``)

Lines starting with ``#`` are comments; files written here start with
``# schema_version=1``. Floats are written with 17 significant digits so a
write/read round trip is lossless.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

from . import geometry as geo
from .solver import Dataset

SCHEMA_VERSION = 1


class InputError(ValueError):
    """Malformed input file."""


def _fmt(v):
    return format(float(v), ".17g")


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_csv(text, source="<input>", model=None):
    """Parse CSV text into ``(Dataset, model)`` where model is 'poincare' or 'hyperboloid'."""
    rows = []
    header = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = next(csv.reader([line]))
        fields = [f.strip() for f in fields]
        if header is None:
            header = [f.lower() for f in fields]
            continue
        rows.append((lineno, fields))
    if header is None:
        raise InputError(f"{source}: missing header")
    has_label = header[-1] == "label"
    cols = header[:-1] if has_label else header
    if cols == ["x", "y"]:
        detected = "poincare"
    elif len(cols) >= 3 and cols == [f"x{i}" for i in range(len(cols))]:
        detected = "hyperboloid"
    else:
        raise InputError(f"{source}: unrecognized header {','.join(header)!r}")
    model = model or detected
    if not rows:
        raise InputError(f"{source}: no data rows")
    coords, labels = [], []
    for lineno, fields in rows:
        if len(fields) != len(header):
            raise InputError(f"{source}: line {lineno}: expected {len(header)} fields, got {len(fields)}")
        try:
            vals = [float(f) for f in fields[:len(cols)]]
        except ValueError:
            raise InputError(f"{source}: line {lineno}: non-numeric coordinate") from None
        if not all(np.isfinite(vals)):
            raise InputError(f"{source}: line {lineno}: non-finite coordinate")
        if model == "poincare":
            if vals[0] ** 2 + vals[1] ** 2 >= 1.0:
                raise InputError(f"{source}: line {lineno}: point outside the unit disk")
        else:
            v = np.array(vals)
            if v[0] <= 0 or abs(geo.minkowski_inner(v, v) + 1.0) > 1e-6 * max(1.0, v[0] ** 2):
                raise InputError(f"{source}: line {lineno}: point not on the hyperboloid")
        coords.append(vals)
        if has_label:
            labels.append(fields[-1])
    arr = np.array(coords)
    # hyperboloid rows are kept verbatim so that write -> read is lossless
    pts = geo.from_ball(arr) if model == "poincare" else arr
    return Dataset(pts, labels if has_label else None), model


def read_csv(path, model=None):
    with open(path, newline="") as fh:
        return parse_csv(fh.read(), source=os.fspath(path), model=model)


def format_csv(data: Dataset, model="hyperboloid"):
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    if model == "poincare":
        coords = geo.to_ball(data.points)
        head = ["x", "y"]
    elif model == "hyperboloid":
        coords = data.points
        head = [f"x{i}" for i in range(coords.shape[1])]
    else:
        raise ValueError(f"unknown model {model!r}")
    if data.labels is not None:
        head.append("label")
    w.writerow(head)
    for i, row in enumerate(coords):
        out = [_fmt(v) for v in row]
        if data.labels is not None:
            out.append(data.labels[i])
        w.writerow(out)
    return buf.getvalue()


def write_csv(path, data: Dataset, model="hyperboloid"):
    atomic_write(path, format_csv(data, model))


def point_json(p):
    """A point in both models."""
    p = np.asarray(p, dtype=float)
    return {"hyperboloid": [float(v) for v in p], "poincare": [float(v) for v in geo.to_ball(p)]}


def dump_json(obj):
    return json.dumps({"schema_version": SCHEMA_VERSION, **obj}, indent=2, allow_nan=False) + "\n"


def write_json(path, obj):
    atomic_write(path, dump_json(obj))
