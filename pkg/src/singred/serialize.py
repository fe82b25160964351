"""Deterministic JSON records and CSV tables.

Floats are written with 17 significant digits, enough to round-trip every
double exactly; keys are sorted so that equal records give equal bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .errors import InputError
from .lie import LieAlgebra, get_algebra


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj, indent=1, _level=0) -> str:
    obj = _plain(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k, ensure_ascii=False)}: {dumps(v, indent, _level + 1)}"
                          for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple, set)):
        seq = sorted(obj) if isinstance(obj, set) else list(obj)
        if not seq:
            return "[]"
        if all(isinstance(_plain(v), (int, float, bool)) or v is None for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        body = ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def loads(text: str):
    return json.loads(text)


def write_record(path, record, meta=None):
    """Write ``record`` to path and, if given, ``meta`` to the sibling .meta.json."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(record) + "\n", encoding="utf-8")
    if meta is not None:
        meta_path = path.with_name(path.stem + ".meta.json")
        meta_path.write_text(dumps(meta) + "\n", encoding="utf-8")
    return path


def table_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(float(v), ".17g") if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


def write_table(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(table_text(header, rows), encoding="utf-8")
    return path


# -- algebra documents -----------------------------------------------------------


def algebra_to_document(algebra: LieAlgebra):
    doc = {
        "name": algebra.name,
        "dim": algebra.dim,
        "c": algebra.structure_constants.tolist(),
        "labels": list(algebra.labels),
    }
    if algebra.rep is not None:
        doc["rep"] = algebra.rep.tolist()
    if algebra.metric is not None:
        doc["metric"] = algebra.metric.tolist()
    return doc


def algebra_from_document(doc) -> LieAlgebra:
    """A catalog name or a mapping with dim, c, labels, rep, metric."""
    if isinstance(doc, str):
        return get_algebra(doc)
    if not isinstance(doc, dict):
        raise InputError("algebra must be a catalog name or an object")
    if "dim" not in doc or "c" not in doc:
        if "name" in doc:
            return get_algebra(doc["name"])
        raise InputError("algebra document needs 'dim' and 'c'")
    k = int(doc["dim"])
    c = np.asarray(doc["c"], dtype=float)
    if c.shape != (k, k, k):
        raise InputError(f"'c' has shape {c.shape}, expected ({k}, {k}, {k})")
    alg = LieAlgebra(c, tuple(doc.get("labels", ())), doc.get("rep"), doc.get("metric"),
                     doc.get("name", "custom"), bool(doc.get("orthogonal", True)))
    return alg.validate()
