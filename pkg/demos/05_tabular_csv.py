"""
Running the selection on your own CSV
=====================================

Writes a synthetic lab-panel CSV with a few missing cells, ingests it with
a log transform of the outcome and standardised covariates, runs a quick
selection over covariate pairs and emits heatmap grids for the winner.
"""

import csv
import tempfile
from pathlib import Path

import numpy as np

from interpcp.config import RunConfig
from interpcp.heatmap import read_heatmap
from interpcp.pipeline import run_pipeline

work = Path(tempfile.mkdtemp())
rng = np.random.default_rng(0)
X = rng.normal(size=(150, 5))
y = np.exp(0.5 * X[:, 0] - 0.3 * X[:, 2] ** 2 + 0.1 * rng.normal(size=150))
with open(work / "labs.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["alb", "crp", "hgb", "ldl", "wbc", "outcome"])
    for i in range(150):
        w.writerow(["" if i % 37 == 0 else repr(float(v)) for v in X[i]] + [repr(float(y[i]))])

# %%
cfg = RunConfig.from_dict({
    "study": "tabular", "seed": 0,
    "data": {"csv": str(work / "labs.csv"), "target": "outcome"},
    "fit": {"iterations": 200, "restarts": 1},
    "full_mlp": {"epochs": 5}, "benchmark_mlp": {"epochs": 5},
    "heatmap": {"steps": 20},
})
res = run_pipeline(cfg, work / "out")
print("dropped rows", res.dataset.meta["dropped_rows"], "candidates", len(res.candidates))
print("selected", res.selection.selected.form)

# %%
g = read_heatmap(work / "out" / "heatmap_model.csv")
print(g.x_name, "by", g.y_name, g.values.shape, "range", g.values.min().round(3), g.values.max().round(3))
