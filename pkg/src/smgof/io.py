"""CSV readers and writers for paths and observation series.

Files may start with ``#`` comment lines (the run header); a column header
row is required. Floats are written with 17 significant digits so they
round-trip exactly.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .model import ModelKind, ObservationSeries, UniformGrid
from .simulate import PathRecord


class DataError(ValueError):
    pass


def fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _write(rows, columns, header_lines: Iterable[str]) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def path_csv(path: PathRecord, header_lines: Iterable[str] = ()) -> str:
    """Columns ``time`` then one per state component."""
    rows = np.column_stack([path.times, path.states])
    return _write(rows, ("time",) + tuple(path.labels), header_lines)


def observation_csv(series: ObservationSeries, header_lines: Iterable[str] = ()) -> str:
    """Columns ``t, Y, Xhat1, ..., Xhatq``."""
    q = series.xhat.shape[1]
    rows = np.column_stack([series.t, series.y, series.xhat])
    return _write(rows, ("t", "Y") + tuple(f"Xhat{k + 1}" for k in range(q)), header_lines)


def read_table(source) -> tuple:
    """Return ``(columns, array)`` from a CSV path or open text stream."""
    if isinstance(source, (str, Path)):
        with open(source, newline="") as f:
            return read_table(f)
    lines = [ln for ln in source if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DataError("empty CSV")
    reader = csv.reader(lines)
    columns = [c.strip() for c in next(reader)]
    try:
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    except ValueError as exc:
        raise DataError(f"non-numeric CSV cell: {exc}") from None
    if data.size == 0 or data.ndim != 2 or data.shape[1] != len(columns):
        raise DataError("CSV rows do not match the header")
    return columns, data


def read_observations(source, kind: ModelKind = ModelKind.LOCAL_VOL) -> ObservationSeries:
    columns, data = read_table(source)
    kind = ModelKind(kind)
    q = kind.covariate_dim
    expected = ["t", "Y"] + [f"Xhat{k + 1}" for k in range(q)]
    if columns != expected:
        raise DataError(f"expected columns {expected}, got {columns}")
    n = data.shape[0]
    grid = UniformGrid(n)
    if not np.allclose(data[:, 0], grid.left_times, rtol=0, atol=1e-9):
        raise DataError("column t must be the equispaced times i/n, i = 0..n-1")
    try:
        return ObservationSeries(grid, data[:, 1], data[:, 2:], kind)
    except ValueError as exc:
        raise DataError(str(exc)) from None


def write_text(path, text: str):
    """Write ``text`` to ``path``, or to stdout when ``path`` is ``-``."""
    if str(path) == "-":
        import sys

        sys.stdout.write(text)
        return
    Path(path).write_text(text)
