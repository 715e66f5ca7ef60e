"""Reading user-supplied tabular data."""

from __future__ import annotations

import csv

import numpy as np

from .data import DataError, Dataset

__all__ = ["ingest_csv", "apply_target_transform", "invert_target_transform"]

_MISSING = {"", "na", "nan", "null", "none", "."}


def apply_target_transform(y: np.ndarray, spec: dict | None) -> np.ndarray:
    """``none``, ``affine`` ((y + shift) / scale) or ``log_affine`` ((log y + shift) / scale)."""
    spec = spec or {"kind": "none"}
    kind = spec.get("kind", "none")
    if kind == "none":
        return y.copy()
    shift, scale = float(spec.get("shift", 0.0)), float(spec.get("scale", 1.0))
    if scale == 0:
        raise DataError("target transform scale must be nonzero")
    if kind == "affine":
        return (y + shift) / scale
    if kind == "log_affine":
        if np.any(y <= 0):
            raise DataError("log transform needs a strictly positive target")
        return (np.log(y) + shift) / scale
    raise DataError(f"unknown target transform {kind!r}")


def invert_target_transform(z: np.ndarray, spec: dict | None) -> np.ndarray:
    spec = spec or {"kind": "none"}
    kind = spec.get("kind", "none")
    if kind == "none":
        return np.array(z, dtype=float)
    shift, scale = float(spec.get("shift", 0.0)), float(spec.get("scale", 1.0))
    if kind == "affine":
        return np.asarray(z) * scale - shift
    return np.exp(np.asarray(z) * scale - shift)


def ingest_csv(path, target: str, features=None, target_transform: dict | None = None,
               standardize: bool = False) -> Dataset:
    """Load a numeric CSV with a header row.

    Rows with a missing value in any used column are dropped and
    counted. Any other non-numeric cell is an error listing the offending
    line numbers. Feature standardization uses the population SD; the
    means and SDs are kept in ``meta`` for inverse mapping.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if target not in header:
        raise DataError(f"{path}: target column {target!r} not found")
    if features is None:
        features = [h for h in header if h != target]
    missing_cols = [f for f in features if f not in header]
    if missing_cols:
        raise DataError(f"{path}: feature column(s) {missing_cols} not found")
    cols = [header.index(f) for f in features] + [header.index(target)]

    values, bad, dropped = [], [], 0
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        cells = [row[i].strip() if i < len(row) else "" for i in cols]
        if any(c.lower() in _MISSING for c in cells):
            dropped += 1
            continue
        try:
            values.append([float(c) for c in cells])
        except ValueError:
            bad.append(lineno)
    if bad:
        shown = ", ".join(str(b) for b in bad[:20]) + (" ..." if len(bad) > 20 else "")
        raise DataError(f"{path}: non-numeric cells on line(s) {shown}")
    if not values:
        raise DataError(f"{path}: no complete rows")
    arr = np.array(values, dtype=float)
    X, y = arr[:, :-1], arr[:, -1]
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{path}: non-finite values")

    meta = {"source": str(path), "dropped_rows": dropped, "target": target,
            "target_transform": dict(target_transform or {"kind": "none"})}
    y = apply_target_transform(y, target_transform)
    if standardize:
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        if np.any(sd == 0):
            const = [f for f, s in zip(features, sd) if s == 0]
            raise DataError(f"{path}: cannot standardize constant column(s) {const}")
        X = (X - mean) / sd
        meta["standardization"] = {f: {"mean": float(m), "sd": float(s)} for f, m, s in zip(features, mean, sd)}
    return Dataset(X, y, tuple(features), ("y",), meta)
