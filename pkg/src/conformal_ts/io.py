"""CSV readers and writers for the dataset and output formats.

Single-series CSV
    Header ``t, x_1..x_d, y_1..y_m``; ``x`` columns are optional.
Multi-series CSV
    Header ``series_id, t, y_1..y_m``; each series is split into an input
    window and its last ``k`` rows as targets.
Safety CSV
    Header with at least ``phi`` and ``phi_hat``.

All files are UTF-8 with a mandatory header row and ``.`` as decimal
separator.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from collections import OrderedDict
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .multihorizon import MultiSeries

__all__ = [
    "DataError",
    "read_series_csv",
    "write_series_csv",
    "read_multiseries_csv",
    "write_multiseries_csv",
    "read_safety_csv",
    "write_safety_csv",
    "format_float",
    "to_csv",
    "atomic_write",
    "dumps",
]


class DataError(ValueError):
    """Malformed, missing or ragged input data."""


def format_float(v) -> str:
    f = float(v)
    if math.isnan(f):
        return "nan"
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    return repr(f)


def _read_rows(path: str) -> Tuple[List[str], List[List[str]]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise DataError(f"{path}: empty file, header row is mandatory")
            rows = [r for r in reader if r]
    except FileNotFoundError:
        raise DataError(f"{path}: no such file")
    for i, r in enumerate(rows, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}:{i}: expected {len(header)} fields, got {len(r)}")
    return header, rows


def _floats(rows, cols, path) -> np.ndarray:
    try:
        out = np.array([[float(r[c]) for c in cols] for r in rows], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: non-numeric value ({exc})")
    out = out.reshape(len(rows), len(cols))
    if not np.all(np.isfinite(out)):
        raise DataError(f"{path}: non-finite value")
    return out


def _numbered(header: Sequence[str], prefix: str) -> List[int]:
    cols = [(int(h[len(prefix):]), i) for i, h in enumerate(header)
            if h.startswith(prefix) and h[len(prefix):].isdigit()]
    cols.sort()
    if [c for c, _ in cols] != list(range(1, len(cols) + 1)):
        raise DataError(f"columns {prefix}* must be numbered 1..n")
    return [i for _, i in cols]


def read_series_csv(path: str) -> Tuple[np.ndarray, Optional[np.ndarray], np.ndarray]:
    """Return ``(t, X or None, Y)`` from a single-series CSV."""
    header, rows = _read_rows(path)
    if "t" not in header:
        raise DataError(f"{path}: missing 't' column")
    ycols = _numbered(header, "y_")
    if not ycols:
        raise DataError(f"{path}: no y_* columns")
    xcols = _numbered(header, "x_")
    if not rows:
        raise DataError(f"{path}: no data rows")
    t = _floats(rows, [header.index("t")], path)[:, 0]
    X = _floats(rows, xcols, path) if xcols else None
    Y = _floats(rows, ycols, path)
    return t, X, Y


def to_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_series_csv(path: str, t, X, Y) -> None:
    Y = np.asarray(Y, dtype=float).reshape(len(t), -1)
    cols = ["t"]
    blocks = [np.asarray(t, dtype=float)[:, None]]
    if X is not None:
        X = np.asarray(X, dtype=float).reshape(len(t), -1)
        cols += [f"x_{j + 1}" for j in range(X.shape[1])]
        blocks.append(X)
    cols += [f"y_{j + 1}" for j in range(Y.shape[1])]
    blocks.append(Y)
    data = np.hstack(blocks)
    rows = [[int(r[0]) if float(r[0]).is_integer() else r[0]] + list(r[1:]) for r in data.tolist()]
    atomic_write(path, to_csv(cols, rows))


def read_multiseries_csv(path: str, k: int) -> MultiSeries:
    """Group rows by ``series_id`` (first-seen order), sort each by ``t``.

    The last ``k`` rows of every series are its targets. Ragged series
    lengths raise ``DataError``.
    """
    header, rows = _read_rows(path)
    for col in ("series_id", "t"):
        if col not in header:
            raise DataError(f"{path}: missing '{col}' column")
    ycols = _numbered(header, "y_")
    if not ycols:
        raise DataError(f"{path}: no y_* columns")
    sid = header.index("series_id")
    groups: "OrderedDict[str, list]" = OrderedDict()
    for r in rows:
        groups.setdefault(r[sid], []).append(r)
    if not groups:
        raise DataError(f"{path}: no data rows")
    tcol = header.index("t")
    inputs, targets = [], []
    lengths = set()
    for key, rs in groups.items():
        vals = _floats(rs, [tcol] + ycols, path)
        vals = vals[np.argsort(vals[:, 0], kind="stable")]
        lengths.add(vals.shape[0])
        y = vals[:, 1:] if len(ycols) > 1 else vals[:, 1]
        if y.shape[0] <= k:
            raise DataError(f"{path}: series {key} has {y.shape[0]} points, need more than k={k}")
        inputs.append(y[:-k])
        targets.append(y[-k:])
    if len(lengths) > 1:
        raise DataError(f"{path}: ragged series lengths {sorted(lengths)}")
    return MultiSeries(np.stack(inputs), np.stack(targets), np.array(list(groups.keys())))


def write_multiseries_csv(path: str, ms: MultiSeries) -> None:
    rows = []
    full = np.concatenate([ms.inputs, ms.targets], axis=1)
    for sid, series in zip(ms.ids, full):
        for t, v in enumerate(series):
            rows.append([sid, t] + list(np.atleast_1d(v).astype(float)))
    m = np.atleast_1d(full[0, 0]).size
    atomic_write(path, to_csv(["series_id", "t"] + [f"y_{j + 1}" for j in range(m)], rows))


def read_safety_csv(path: str) -> Tuple[np.ndarray, np.ndarray]:
    header, rows = _read_rows(path)
    for col in ("phi", "phi_hat"):
        if col not in header:
            raise DataError(f"{path}: missing '{col}' column")
    if not rows:
        raise DataError(f"{path}: no data rows")
    vals = _floats(rows, [header.index("phi"), header.index("phi_hat")], path)
    return vals[:, 0], vals[:, 1]


def write_safety_csv(path: str, phi, phi_hat) -> None:
    rows = [[float(a), float(b)] for a, b in zip(phi, phi_hat)]
    atomic_write(path, to_csv(["phi", "phi_hat"], rows))


def dumps(obj) -> str:
    """Deterministic JSON with non-finite floats spelled as strings."""
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
