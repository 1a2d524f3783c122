"""Report documents: JSON, and CSV with ``# key: value`` preamble lines."""

from __future__ import annotations

import io
import json
import math

import numpy as np

SCHEMA_VERSION = "spectral-fdr/1"


def _plain(value):
    """Convert numpy containers and scalars into JSON-ready Python values."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def to_json(report: dict) -> str:
    return json.dumps(_plain(report), indent=2, allow_nan=False) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g") if math.isfinite(v) else ""
    return str(v)


def to_csv(meta: dict, columns: dict) -> str:
    """Scalar ``meta`` entries as comment lines, then one table of ``columns``."""
    buf = io.StringIO()
    for key, value in meta.items():
        value = _plain(value)
        if isinstance(value, (list, dict)):
            value = json.dumps(value, separators=(",", ":"))
        buf.write(f"# {key}: {_fmt(value)}\n")
    names = list(columns)
    buf.write(",".join(names) + "\n")
    length = max((len(columns[c]) for c in names), default=0)
    for i in range(length):
        cells = []
        for c in names:
            col = columns[c]
            cells.append(_fmt(col[i]) if i < len(col) else "")
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def read_csv_report(text: str) -> tuple:
    """Inverse of :func:`to_csv`: ``(meta, columns)`` with float columns."""
    meta = {}
    lines = text.splitlines()
    body = []
    for ln in lines:
        if ln.startswith("# "):
            key, _, value = ln[2:].partition(": ")
            meta[key] = value
        elif ln.strip():
            body.append(ln)
    if not body:
        return meta, {}
    names = body[0].split(",")
    cols = {c: [] for c in names}
    for ln in body[1:]:
        for c, cell in zip(names, ln.split(",")):
            if cell != "":
                cols[c].append(float(cell))
    return meta, {c: np.array(v) for c, v in cols.items()}
