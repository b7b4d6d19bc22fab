"""Dense matrix I/O shared by every module.

Two formats are supported:

* CSV: one matrix per file, row-major, an optional header line of column
  names.
* JSON container: ``{"p": int, "K": int, "matrices": [[...], ...]}`` holding
  ``K`` matrices of shape ``p x p`` (extra keys are preserved on read).

Floats are written with ``repr`` so every value round-trips exactly using the
shortest decimal representation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np


def format_float(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0.0"  # collapses -0.0 so symmetric outputs hash identically
    if not math.isfinite(x):
        raise ValueError(f"non-finite value {x!r} cannot be serialized")
    return repr(x)


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path: str | Path) -> tuple[np.ndarray, list[str] | None]:
    """Read a dense numeric CSV. Returns ``(matrix, header_or_None)``."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: ragged rows")
    data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    if header is not None and len(header) != data.shape[1]:
        raise ValueError(f"{path}: header has {len(header)} names for {data.shape[1]} columns")
    return data, header


def csv_text(matrix: np.ndarray, header: Sequence[str] | None = None) -> str:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    for row in matrix:
        writer.writerow([format_float(x) for x in row])
    return buf.getvalue()


def write_csv(path: str | Path, matrix: np.ndarray, header: Sequence[str] | None = None) -> None:
    Path(path).write_text(csv_text(matrix, header))


def container_dict(matrices: Sequence[np.ndarray], **extra: Any) -> dict:
    mats = [np.asarray(m, dtype=float) for m in matrices]
    if not mats:
        raise ValueError("container needs at least one matrix")
    p = mats[0].shape[0]
    for m in mats:
        if m.shape != (p, p):
            raise ValueError(f"matrix of shape {m.shape} in a p={p} container")
    out = {"p": p, "K": len(mats), "matrices": [m.tolist() for m in mats]}
    out.update(extra)
    return out


def dumps(obj: Any) -> str:
    """JSON text with shortest round-trip floats (Python's float repr)."""
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def write_container(path: str | Path, matrices: Sequence[np.ndarray], **extra: Any) -> None:
    Path(path).write_text(dumps(container_dict(matrices, **extra)))


def read_container(path: str | Path) -> tuple[list[np.ndarray], dict]:
    """Read a JSON container; returns ``(matrices, remaining_fields)``."""
    doc = json.loads(Path(path).read_text())
    for key in ("p", "K", "matrices"):
        if key not in doc:
            raise ValueError(f"{path}: container missing {key!r}")
    p, K = int(doc["p"]), int(doc["K"])
    mats = [np.asarray(m, dtype=float) for m in doc["matrices"]]
    if len(mats) != K:
        raise ValueError(f"{path}: K={K} but {len(mats)} matrices")
    for m in mats:
        if m.shape != (p, p):
            raise ValueError(f"{path}: expected {p}x{p} matrices, got {m.shape}")
    rest = {k: v for k, v in doc.items() if k not in ("p", "K", "matrices")}
    return mats, rest


def read_matrix(path: str | Path) -> np.ndarray:
    """Load one square matrix from ``.csv`` or a single-matrix ``.json`` container."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        mats, _ = read_container(path)
        if len(mats) != 1:
            raise ValueError(f"{path}: expected one matrix, found {len(mats)}")
        return mats[0]
    data, _ = read_csv(path)
    return data
