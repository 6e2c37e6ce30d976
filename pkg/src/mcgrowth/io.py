"""File formats: count CSV, parameter/mask JSON, cell-coordinate CSV and tiling.

Count files are CSV with a one-line ``#`` metadata header followed by
``t,row,col,color,count`` rows. Zero counts are omitted and rows are sorted
by time, color index and row-major tile, so a file written twice from the
same tensor is byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, ParseError
from .model import CountTensor, Params

COUNTS_HEADER = ["t", "row", "col", "color", "count"]
MAGIC = "# mcgrowth-counts"


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def format_counts(y: CountTensor, n: int) -> str:
    if n * n != y.n_tiles:
        raise InvalidArgumentError(f"grid side {n} does not match {y.n_tiles} tiles")
    lines = [f"{MAGIC} n={n} T={y.T} colors={','.join(y.colors)}", ",".join(COUNTS_HEADER)]
    counts = y.counts
    for t, c, i in zip(*np.nonzero(counts)):
        r, col = divmod(int(i), n)
        lines.append(f"{t},{r},{col},{y.colors[c]},{int(counts[t, c, i])}")
    return "\n".join(lines) + "\n"


def write_counts(path, y: CountTensor, n: int):
    with open(path, "w", newline="\n") as fh:
        fh.write(format_counts(y, n))


def _int(value: str, line: int, path, what: str) -> int:
    try:
        out = int(value)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {value!r}", line, path) from None
    return out


def read_counts(path) -> tuple[CountTensor, int]:
    """Parse a count file; returns the tensor and the grid side."""
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    meta = {}
    start = 0
    if lines and lines[0].startswith("#"):
        for tok in lines[0].lstrip("#").split():
            if "=" in tok:
                key, _, val = tok.partition("=")
                meta[key] = val
        start = 1
    if len(lines) <= start or [h.strip() for h in lines[start].split(",")] != COUNTS_HEADER:
        raise ParseError(f"expected header {','.join(COUNTS_HEADER)}", start + 1, path)

    colors = meta["colors"].split(",") if meta.get("colors") else []
    rows = []
    for ln, raw in enumerate(lines[start + 1 :], start=start + 2):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields, got {len(parts)}", ln, path)
        t = _int(parts[0], ln, path, "t")
        r = _int(parts[1], ln, path, "row")
        col = _int(parts[2], ln, path, "col")
        label = parts[3]
        cnt = _int(parts[4], ln, path, "count")
        if min(t, r, col, cnt) < 0:
            raise ParseError("negative value", ln, path)
        if label not in colors:
            if meta.get("colors"):
                raise ParseError(f"color {label!r} not declared in header", ln, path)
            colors.append(label)
        rows.append((ln, t, r, col, colors.index(label), cnt))

    if not rows and not ("n" in meta and "T" in meta):
        raise ParseError("cannot infer dimensions from an empty file without a header", None, path)
    try:
        n = int(meta["n"]) if "n" in meta else 1 + max(max(r, c) for _, _, r, c, _, _ in rows)
        T = int(meta["T"]) if "T" in meta else max(t for _, t, *_ in rows)
    except ValueError:
        raise ParseError("malformed metadata header", 1, path) from None
    if not colors:
        raise ParseError("no colors declared or observed", None, path)
    counts = np.zeros((T + 1, len(colors), n * n), dtype=np.int64)
    for ln, t, r, col, c, cnt in rows:
        if t > T or r >= n or col >= n:
            raise ParseError(f"entry (t={t}, row={r}, col={col}) outside declared dimensions", ln, path)
        counts[t, c, r * n + col] += cnt
    return CountTensor(counts, tuple(colors)), n


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, path) from None


def read_params(path) -> tuple[Params, tuple | None]:
    d = _load_json(path)
    if not isinstance(d, dict):
        raise ParseError("params document must be an object", 1, path)
    try:
        params = Params.from_dict(d)
    except InvalidArgumentError as exc:
        raise ParseError(str(exc), None, path) from None
    colors = tuple(d["colors"]) if d.get("colors") else None
    return params, colors


def read_mask(path) -> np.ndarray:
    d = _load_json(path)
    if isinstance(d, dict):
        d = d.get("mask")
    try:
        mask = np.array(d, dtype=bool)
    except (TypeError, ValueError):
        raise ParseError("mask must be a square nested list of booleans", None, path) from None
    if mask.ndim != 2 or mask.shape[0] != mask.shape[1]:
        raise ParseError("mask must be a square nested list of booleans", None, path)
    return mask


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        json.dump(_clean(obj), fh, indent=2)
        fh.write("\n")


def read_json(path):
    return _load_json(path)


@dataclass
class CellTable:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    color: np.ndarray  # integer codes
    labels: tuple
    bounds: tuple  # (x_min, x_max, y_min, y_max)
    lines: np.ndarray | None = None  # source line numbers, for error messages


def read_cells(path, bounds=None) -> CellTable:
    """Read ``t,x,y,color`` rows; colors are coded in order of first appearance."""
    path = Path(path)
    ts, xs, ys, cs, lns = [], [], [], [], []
    labels: list[str] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty cell file", 1, path) from None
        try:
            idx = [header.index(k) for k in ("t", "x", "y", "color")]
        except ValueError:
            raise ParseError("header must contain t,x,y,color", 1, path) from None
        for ln, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                t, x, y, lab = (row[j] for j in idx)
                ts.append(int(t))
                xs.append(float(x))
                ys.append(float(y))
            except (IndexError, ValueError):
                raise ParseError(f"malformed row {row!r}", ln, path) from None
            lab = lab.strip()
            if lab not in labels:
                labels.append(lab)
            cs.append(labels.index(lab))
            lns.append(ln)
    if not ts:
        raise ParseError("no cells", None, path)
    return make_cell_table(ts, xs, ys, cs, labels, bounds, lns)


def make_cell_table(t, x, y, color, labels, bounds=None, lines=None) -> CellTable:
    t = np.asarray(t, dtype=np.int64)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    color = np.asarray(color, dtype=np.int64)
    if bounds is None:
        bounds = (float(x.min()), float(x.max()), float(y.min()), float(y.max()))
    bounds = tuple(float(b) for b in bounds)
    if not (bounds[1] > bounds[0] and bounds[3] > bounds[2]):
        raise InvalidArgumentError(f"degenerate bounds {bounds}")
    lines = np.arange(2, t.size + 2) if lines is None else np.asarray(lines)
    return CellTable(t, x, y, color, tuple(labels), bounds, lines)


def tile_cells(cells: CellTable, n: int) -> CountTensor:
    """Count cells per (time, color, tile) on an ``n x n`` grid over ``cells.bounds``.

    The tile row comes from ``y`` and the column from ``x``, each as
    ``floor(n * (v - v_min) / (v_max - v_min))`` clamped to ``n - 1``.
    """
    if n < 1:
        raise InvalidArgumentError(f"grid side must be positive, got {n}")
    x_min, x_max, y_min, y_max = cells.bounds
    outside = (cells.x < x_min) | (cells.x > x_max) | (cells.y < y_min) | (cells.y > y_max)
    if outside.any():
        bad = cells.lines[outside].tolist()
        raise InvalidArgumentError(f"{len(bad)} cells outside bounds {cells.bounds} at rows {bad[:20]}")
    times = np.unique(cells.t)
    if not np.array_equal(times, np.arange(times[0], times[0] + times.size)):
        raise InvalidArgumentError(f"time labels are not contiguous: {times.tolist()}")
    col = np.minimum(np.floor(n * (cells.x - x_min) / (x_max - x_min)).astype(np.int64), n - 1)
    row = np.minimum(np.floor(n * (cells.y - y_min) / (y_max - y_min)).astype(np.int64), n - 1)
    counts = np.zeros((times.size, len(cells.labels), n * n), dtype=np.int64)
    np.add.at(counts, (cells.t - times[0], cells.color, row * n + col), 1)
    return CountTensor(counts, cells.labels)
