"""CSV and JSON serialisation of experiment results.

Every CSV has a header row, ``.`` decimals and LF line endings.  Floats are
written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .transport import SELECTION_CSV_HEADER

__all__ = [
    "SCHEMAS",
    "write_csv",
    "read_csv",
    "write_summary",
    "format_value",
]

BENCHMARK_HEADER = ("objective", "method", "N", "mu", "success_rate", "error_inf", "fitness",
                    "iterations", "w_iter", "cts")
SEGMENT_HEADER = ("image", "method", "d", "psnr", "rmse", "thresholds")
LOSS_HEADER = ("epoch", "loss")
PREDICTION_HEADER = ("x", "target", "prediction")

# header -> column types; "thresholds" is a space-separated integer list
SCHEMAS = {
    BENCHMARK_HEADER: (str, str, int, float, float, float, float, float, float, float),
    SEGMENT_HEADER: (str, str, int, float, float, "ints"),
    LOSS_HEADER: (int, float),
    PREDICTION_HEADER: (float, float, float),
    tuple(SELECTION_CSV_HEADER): (int, int, float, float, float, int),
}


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(format_value(x) for x in v)
    return str(v)


def write_csv(path, header, rows) -> Path:
    """Write ``rows`` (dicts keyed by ``header`` or sequences) atomically."""
    header = tuple(header)
    if header not in SCHEMAS:
        raise ValueError(f"no schema registered for header {header}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            vals = [row[h] for h in header] if isinstance(row, dict) else list(row)
            if len(vals) != len(header):
                raise ValueError(f"row has {len(vals)} fields, header has {len(header)}")
            w.writerow([format_value(v) for v in vals])
    os.replace(tmp, path)
    return path


def _parse(kind, text):
    if text == "":
        return None
    if kind == "ints":
        return [int(t) for t in text.split()]
    if kind is float:
        return float(text)
    return kind(text)


def read_csv(path):
    """Read a CSV written by :func:`write_csv`, checking it against its schema.

    Returns ``(header, rows)`` with rows as dicts of typed values.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        try:
            header = tuple(next(r))
        except StopIteration:
            raise ValueError(f"{path}: empty file, header row missing") from None
        if header not in SCHEMAS:
            raise ValueError(f"{path}: unrecognised header {header}")
        kinds = SCHEMAS[header]
        rows = []
        for lineno, fields in enumerate(r, start=2):
            if len(fields) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(fields)}")
            try:
                rows.append({h: _parse(k, f) for h, k, f in zip(header, kinds, fields)})
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return header, rows


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (float, np.floating)):
        f = float(o)
        return f if math.isfinite(f) else str(f)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def write_summary(path, config: dict, aggregates) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"config": _jsonable(config), "results": _jsonable(aggregates)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
