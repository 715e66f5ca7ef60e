"""
Learning the Fisher exact test decision
=======================================

Labels are one-hot: (0, 1) when the one-sided exact p-value falls below
0.05. A reduced pipeline (fewer iterations, short MLP training) shows the
accuracy columns and the average-parameters-per-layer complexity.
"""

from interpcp.config import RunConfig
from interpcp.pipeline import run_pipeline

cfg = RunConfig.from_dict({
    "study": "sim3", "seed": 0,
    "data": {"N": 300},
    "fit": {"iterations": 400, "restarts": 2},
    "full_mlp": {"epochs": 10}, "benchmark_mlp": {"epochs": 10},
})
res = run_pipeline(cfg, write=False)

for rec in res.selection.records:
    print(f"{rec.model_id:>2} {rec.form:<26} r={rec.r:<5} acc_val={rec.acc_cv_val:.3f}")
print("benchmark acc_val", round(res.cv.benchmark.acc_cv_val, 3))
print("lambda_opt", res.selection.lambda_opt, "selected", res.selection.selected.form)
print(res.selected_model.render(res.dataset.feature_names))
