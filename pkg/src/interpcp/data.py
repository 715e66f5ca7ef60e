"""Dataset container and its CSV form."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = ["Dataset", "DataError", "format_float", "write_csv", "read_csv"]


class DataError(ValueError):
    """Malformed or unusable input data."""


def format_float(v: float) -> str:
    """Locale-independent, round-trip-exact decimal text."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return format(v, ".17g")


@dataclass
class Dataset:
    """Feature matrix plus target.

    ``y`` is ``(N,)`` for regression and ``(N, 2)`` one-hot for the
    two-class task.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple
    target_names: tuple = ("y",)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.feature_names = tuple(self.feature_names)
        self.target_names = tuple(self.target_names)
        if self.X.ndim != 2:
            raise DataError("X must be 2-D")
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError("X and y have different row counts")
        if self.X.shape[1] != len(self.feature_names):
            raise DataError("feature_names does not match X columns")
        if self.X.shape[0] == 0:
            raise DataError("dataset is empty")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def task(self) -> str:
        return "classification" if self.y.ndim == 2 else "regression"

    def subset(self, rows) -> "Dataset":
        return Dataset(self.X[rows], self.y[rows], self.feature_names, self.target_names, dict(self.meta))


def write_csv(data: Dataset, path) -> None:
    cols = list(data.feature_names) + list(data.target_names)
    y = data.y if data.y.ndim == 2 else data.y[:, None]
    body = np.hstack([data.X, y])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in body:
        w.writerow([format_float(v) for v in row])
    Path(path).write_text(buf.getvalue())


def read_csv(path, target_names: Sequence[str] = ("y",)) -> Dataset:
    """Read a dataset written by :func:`write_csv`; no cleaning is applied."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file")
    header = rows[0]
    missing = [t for t in target_names if t not in header]
    if missing:
        raise DataError(f"{path}: target column(s) {missing} not found")
    try:
        arr = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as e:
        raise DataError(f"{path}: non-numeric cell ({e})") from None
    t_idx = [header.index(t) for t in target_names]
    f_idx = [i for i in range(len(header)) if i not in t_idx]
    y = arr[:, t_idx] if len(t_idx) > 1 else arr[:, t_idx[0]]
    return Dataset(arr[:, f_idx], y, [header[i] for i in f_idx], tuple(target_names))
