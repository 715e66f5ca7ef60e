"""Grid evaluations of a fitted candidate for layer-by-layer reading.

Views:

``model``
    F(x) over two covariates, others held at their median.
``f1``
    the first layer (after the output link) over its two slot values,
    on the range the slots take on the data.
``f2_1``, ``f2_2``, ...
    one second-layer function over two covariates.

For classification links the value is the probability of class 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError
from .data import Dataset, format_float
from .exprdsl.candidates import CandidateModel, apply_link, evaluate, first_layer_output, layer_outputs

__all__ = ["HeatmapGrid", "grid_for_view", "write_heatmap", "read_heatmap", "emit_heatmaps", "VIEWS"]

VIEWS = ("model", "f1", "f2_1", "f2_2")


@dataclass
class HeatmapGrid:
    view: str
    x_name: str
    y_name: str
    x_values: np.ndarray
    y_values: np.ndarray
    values: np.ndarray  # shape (len(y_values), len(x_values))

    def __post_init__(self):
        if self.values.shape != (len(self.y_values), len(self.x_values)):
            raise ValueError("grid body does not match axes")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"non-finite cells in heatmap view {self.view}")


def _axis(lo, hi, steps):
    if steps < 2:
        raise ConfigError("heatmap steps must be >= 2")
    return np.linspace(float(lo), float(hi), int(steps))


def _scalar_out(model, out):
    out = np.asarray(out)
    return out[..., 1] if out.ndim == 2 and out.shape[1] == 2 else out.reshape(-1)


def _model_inputs(model, data):
    names = list(data.feature_names)
    return [names[i] for i in model.covariate_subset]


def grid_for_view(model: CandidateModel, data: Dataset, view: str, steps: int = 50, axes=None) -> HeatmapGrid:
    """Evaluate one view on a ``steps`` by ``steps`` grid.

    ``axes`` optionally names the (x, y) variables; for ``f1`` they must be
    slot names ``x1_1 .. x1_J``, otherwise covariates used by the model.
    """
    if model.theta is None:
        raise ValueError("model has no fitted parameters")
    X = np.asarray(data.X, dtype=float)
    names = list(data.feature_names)

    if view == "f1":
        slots = [f"x1_{j + 1}" for j in range(model.J)]
        ax = tuple(axes) if axes else tuple(slots[:2])
        for a in ax:
            if a not in slots:
                raise ConfigError(f"heatmap axis {a!r} is not a first-layer input ({', '.join(slots)})")
        ix, iy = slots.index(ax[0]), slots.index(ax[1])
        x1 = layer_outputs(model, X)
        xs = _axis(x1[:, ix].min(), x1[:, ix].max(), steps)
        ys = _axis(x1[:, iy].min(), x1[:, iy].max(), steps)
        gx, gy = np.meshgrid(xs, ys)
        pts = np.tile(np.median(x1, axis=0), (gx.size, 1))
        pts[:, ix], pts[:, iy] = gx.ravel(), gy.ravel()
        out = apply_link(model.output_link, first_layer_output(model, pts))
        return HeatmapGrid(view, ax[0], ax[1], xs, ys, _scalar_out(model, out).reshape(gx.shape))

    usable = _model_inputs(model, data)
    ax = tuple(axes) if axes else tuple(usable[:2])
    if len(ax) != 2:
        raise ConfigError("heatmap needs exactly two axes")
    for a in ax:
        if a not in usable:
            raise ConfigError(f"heatmap axis {a!r} is not an input of model {model.model_id} ({', '.join(usable)})")
    ix, iy = names.index(ax[0]), names.index(ax[1])
    xs = _axis(X[:, ix].min(), X[:, ix].max(), steps)
    ys = _axis(X[:, iy].min(), X[:, iy].max(), steps)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.tile(np.median(X, axis=0), (gx.size, 1))
    pts[:, ix], pts[:, iy] = gx.ravel(), gy.ravel()

    if view == "model":
        vals = _scalar_out(model, evaluate(model, pts))
    elif view.startswith("f2_"):
        try:
            j = int(view[3:]) - 1
        except ValueError:
            raise ConfigError(f"unknown heatmap view {view!r}") from None
        if not 0 <= j < model.J:
            raise ConfigError(f"view {view!r} but the model has {model.J} second-layer functions")
        vals = layer_outputs(model, pts)[:, j]
    else:
        raise ConfigError(f"unknown heatmap view {view!r}")
    return HeatmapGrid(view, ax[0], ax[1], xs, ys, np.asarray(vals).reshape(gx.shape))


def write_heatmap(grid: HeatmapGrid, path) -> None:
    """First row: corner label then x values; then one row per y value."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"{grid.y_name}\\{grid.x_name}"] + [format_float(v) for v in grid.x_values])
        for yv, row in zip(grid.y_values, grid.values):
            w.writerow([format_float(yv)] + [format_float(v) for v in row])


def read_heatmap(path, view: str = "") -> HeatmapGrid:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    y_name, x_name = rows[0][0].split("\\", 1)
    xs = np.array([float(v) for v in rows[0][1:]])
    ys = np.array([float(r[0]) for r in rows[1:]])
    body = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return HeatmapGrid(view or Path(path).stem.removeprefix("heatmap_"), x_name, y_name, xs, ys, body)


def emit_heatmaps(model: CandidateModel, data: Dataset, out_dir, views=VIEWS, steps: int = 50,
                  axes: dict | None = None) -> list:
    """Write ``heatmap_<view>.csv`` for each view; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for view in views:
        grid = grid_for_view(model, data, view, steps, (axes or {}).get(view))
        p = out_dir / f"heatmap_{view}.csv"
        write_heatmap(grid, p)
        paths.append(p)
    return paths
