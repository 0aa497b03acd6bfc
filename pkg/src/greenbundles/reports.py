"""Deterministic JSON and CSV report writers."""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np


def to_jsonable(obj):
    """Recursively convert numpy values, tuples and dataclass-like objects."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj):
    """Canonical JSON: sorted keys, fixed separators, ``repr``-exact floats."""
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def csv_text(header, rows, plot_data=False):
    """CSV, or whitespace-separated columns with a ``#`` header for gnuplot."""
    rows = [[to_jsonable(v) for v in r] for r in rows]
    if plot_data:
        lines = ["# " + " ".join(header)]
        lines += [" ".join(repr(v) if isinstance(v, float) else str(v) for v in r) for r in rows]
        return "\n".join(lines) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_csv(path, header, rows, plot_data=False):
    with open(path, "w") as fh:
        fh.write(csv_text(header, rows, plot_data))
