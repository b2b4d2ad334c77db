"""JSON/CSV serialization glue.

Graph JSON schema: {"n": int, "d": int, "H": [[...]*d]*n, "A": [[...]*n]*n,
"omega": [...]} with omega optional (uniform default). Numbers are written
with 17 significant digits so round-trips are exact; all writes go through
a temp file and rename so no partial output survives an error.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile

import numpy as np

from .graphs import AttributedGraph


class SchemaError(ValueError):
    pass


def _fmt(x):
    if isinstance(x, float):
        return float(format(x, ".17g"))
    return x


def _round_floats(obj):
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round_floats(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return _fmt(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def graph_to_dict(g: AttributedGraph) -> dict:
    return {
        "n": g.n,
        "d": g.d,
        "H": g.H.tolist(),
        "A": g.A.tolist(),
        "omega": g.omega.tolist(),
    }


def graph_from_dict(obj: dict) -> AttributedGraph:
    for key in ("n", "d", "H", "A"):
        if key not in obj:
            raise SchemaError(f"missing required field {key!r}")
    n, d = int(obj["n"]), int(obj["d"])
    H, A = obj["H"], obj["A"]
    if len(H) != n:
        raise SchemaError(f"H has {len(H)} rows, expected {n}")
    for i, row in enumerate(H):
        if len(row) != d:
            raise SchemaError(f"H[{i}] has length {len(row)}, expected {d}")
    if len(A) != n:
        raise SchemaError(f"A has {len(A)} rows, expected {n}")
    for i, row in enumerate(A):
        if len(row) != n:
            raise SchemaError(f"A[{i}] has length {len(row)}, expected {n}")
    omega = obj.get("omega")
    if omega is not None and len(omega) != n:
        raise SchemaError(f"omega has length {len(omega)}, expected {n}")
    try:
        return AttributedGraph(H=np.array(H, float), A=np.array(A, float), omega=omega)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def read_graph_json(path) -> AttributedGraph:
    with open(path) as fh:
        return graph_from_dict(json.load(fh))


def atomic_write_text(path, text: str):
    """Write to a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, json.dumps(_round_floats(obj), indent=2) + "\n")


def dumps_json(obj) -> str:
    return json.dumps(_round_floats(obj), indent=2)


def write_graph_json(path, g: AttributedGraph):
    write_json(path, graph_to_dict(g))


def write_csv(path, header, rows):
    """CSV mirror for bench reports (atomic like the JSON path)."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
