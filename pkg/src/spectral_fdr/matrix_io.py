"""Delimited-text matrix ingestion."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np


class MatrixParseError(ValueError):
    pass


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def read_matrix(path) -> np.ndarray:
    """Read a comma- or tab-separated numeric matrix.

    A single header row is skipped when any of its cells is non-numeric.
    Missing values, ragged rows and non-finite entries are rejected.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {path}: {exc.strerror or exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MatrixParseError(f"{path}: empty file")
    delim = "\t" if "\t" in lines[0] else ","
    rows = [[c.strip() for c in row] for row in csv.reader(lines, delimiter=delim)]
    if not all(_is_number(c) for c in rows[0]):
        rows = rows[1:]
    if not rows:
        raise MatrixParseError(f"{path}: header only, no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise MatrixParseError(f"{path}: row {i + 1} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise MatrixParseError(f"{path}: bad value {cell!r} at row {i + 1}, column {j + 1}") from None
            if not math.isfinite(v):
                raise MatrixParseError(f"{path}: non-finite value at row {i + 1}, column {j + 1}")
            out[i, j] = v
    return out


def write_matrix(path, M, delimiter: str = ",") -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        for row in M:
            w.writerow([repr(float(x)) for x in row])
