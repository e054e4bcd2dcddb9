"""Deterministic JSON and CSV output.

Floats are always written with 17 significant digits so that a reloaded
file reproduces every value bit for bit.  Non-finite floats are written as
the bare tokens ``Infinity``/``-Infinity``/``NaN``, which :func:`json.loads`
accepts.
"""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np


def _float_token(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    tok = format(x, ".17g")
    if "e" not in tok and "." not in tok and "n" not in tok:
        tok += ".0"
    return tok


def _encode(obj: Any, out: list[str], indent: int | None, level: int) -> None:
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    elif isinstance(obj, (np.integer,)):
        obj = int(obj)
    elif isinstance(obj, np.bool_):
        obj = bool(obj)

    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_float_token(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        out.append("{")
        for i, (k, v) in enumerate(items):
            if i:
                out.append(",")
            if indent is not None:
                out.append("\n" + " " * (indent * (level + 1)))
            out.append(json.dumps(str(k)))
            out.append(": " if indent is not None else ":")
            _encode(v, out, indent, level + 1)
        if indent is not None:
            out.append("\n" + " " * (indent * level))
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        # numeric rows stay on one line to keep point files compact
        flat = all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj)
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", " if (flat and indent is not None) else ",")
            if indent is not None and not flat:
                out.append("\n" + " " * (indent * (level + 1)))
            _encode(v, out, indent, level + 1)
        if indent is not None and not flat and obj:
            out.append("\n" + " " * (indent * level))
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int | None = 1) -> str:
    out: list[str] = []
    _encode(obj, out, indent, 0)
    return "".join(out) + "\n"


def loads(text: str) -> Any:
    return json.loads(text)


def write_json(path: str | Path, obj: Any) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path: str | Path) -> Any:
    return loads(Path(path).read_text())


def points_csv(points: np.ndarray, weights: np.ndarray | None = None) -> str:
    """Row-per-node CSV with an optional weight column."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    d = points.shape[1] if points.ndim == 2 else 0
    header = [f"x{j + 1}" for j in range(d)]
    if weights is not None:
        header.append("weight")
    writer.writerow(header)
    for i, row in enumerate(points):
        cells = [_float_token(float(v)) for v in row]
        if weights is not None:
            cells.append(_float_token(float(weights[i])))
        writer.writerow(cells)
    return buf.getvalue()
