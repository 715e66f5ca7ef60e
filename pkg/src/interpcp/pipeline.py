"""End-to-end run: generate or ingest data, cross-validate, select, write artifacts."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import casestudies, mlpnet
from .config import ConfigError, RunConfig
from .data import Dataset, format_float, write_csv
from .exprdsl import library
from .exprdsl.candidates import CandidateModel, display_round, enumerate_candidates
from .heatmap import emit_heatmaps
from .ingest import ingest_csv
from .modelselect import (
    CvResult,
    SelectionReport,
    cross_validate,
    derive_seed,
    lambda_search,
    make_cv_plan,
    mc_statistic,
    select_final,
)
from .optim import FitConfig

__all__ = ["PipelineResult", "run_seeds", "build_dataset", "build_candidates", "mlp_specs",
           "run_pipeline", "model_from_report", "REPORT_COLUMNS"]

log = logging.getLogger("interpcp")

REPORT_COLUMNS = ("model_id", "form", "r", "loss_cv", "loss_cv_val", "mc_cv", "mc_cv_val")
ACC_COLUMNS = ("acc_cv", "acc_cv_val")


@dataclass
class PipelineResult:
    config: RunConfig
    dataset: Dataset
    candidates: list
    cv: CvResult
    selection: SelectionReport
    lambda_curve: tuple
    seeds: dict
    files: list = field(default_factory=list)

    @property
    def selected_model(self) -> CandidateModel:
        m = next(c for c in self.candidates if c.model_id == self.selection.selected_id)
        return m.with_theta(self.selection.refit_theta)


def run_seeds(seed: int) -> dict:
    """Independent stream seeds, all derived from the master seed."""
    return {"master": seed, "data": derive_seed(seed, 1), "cv": derive_seed(seed, 2),
            "fit": derive_seed(seed, 3), "mlp": derive_seed(seed, 4)}


def build_dataset(cfg: RunConfig, seed: int) -> Dataset:
    d = cfg.data
    if cfg.study == "sim1":
        ranges = {k: tuple(v) if isinstance(v, list) else v for k, v in d["ranges"].items()}
        return casestudies.gen_trial_dataset(int(d["N"]), ranges, int(d["mc_reps"]), seed, float(d["delta"]), d["test"])
    if cfg.study == "sim2":
        ranges = {k: tuple(v) for k, v in d["ranges"].items()}
        return casestudies.gng_dataset(int(d["N"]), ranges, d["input_mode"], seed, int(d["n"]), float(d["q_a"]),
                                       float(d["q_b"]), float(d["tau_min"]), float(d["tau_base"]))
    if cfg.study == "sim3":
        design = casestudies.FisherDesign(int(d["n_min"]), int(d["n_max"]), float(d["alpha_level"]))
        return casestudies.fisher_dataset(d["N"] if d["N"] == "exhaustive" else int(d["N"]), design, seed)
    return ingest_csv(d["csv"], d["target"], d.get("features"), d["target_transform"], bool(d["standardize"]))


def build_candidates(cfg: RunConfig, data: Dataset) -> list:
    c = cfg.candidates
    f1 = [library.get(n) for n in c["f1"]]
    f2 = [library.get(n) for n in c["f2"]]
    p = len(data.feature_names)
    arity = f2[0].arity
    if any(f.arity != arity for f in f2):
        raise ConfigError("all second-layer functions must take the same number of covariates")
    subset = c["subset_size"]
    if subset == "all" and arity != p:
        raise ConfigError(f"second-layer functions read {arity} covariates but the data has {p}")
    if subset != "all" and int(subset) != arity:
        raise ConfigError(f"subset size {subset} does not match second-layer arity {arity}")
    pairs = [tuple(x) for x in c["pairs"]] if c.get("pairs") else None
    return enumerate_candidates(f1, f2, int(c["J"]), range(p), subset, c["mode"], pairs,
                                library.STUDY_LINKS[cfg.study], data.feature_names)


def mlp_specs(cfg: RunConfig, data: Dataset, seed: int) -> tuple:
    out_dim = 2 if data.task == "classification" else 1
    head = "softmax" if out_dim == 2 else "sigmoid"
    specs = []
    for key, off in (("full_mlp", 0), ("benchmark_mlp", 1)):
        m = cfg.__dict__[key]
        specs.append(mlpnet.MlpSpec((len(data.feature_names), *m["hidden"], out_dim), "relu", head,
                                    float(m["dropout_rate"]), int(m["epochs"]), int(m["batch_size"]),
                                    float(m["learning_rate"]), derive_seed(seed, off), m["optimizer"]))
    return tuple(specs)


def _num(v):
    if v is None:
        return None
    v = float(v)
    if math.isfinite(v):
        return v
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def _record_json(rec, mc, mcv):
    out = {"model_id": rec.model_id, "form": rec.form, "r": _num(rec.r), "r_display": display_round(rec.r),
           "loss_cv": _num(rec.loss_cv), "loss_cv_val": _num(rec.loss_cv_val), "mc_cv": _num(mc),
           "mc_cv_val": _num(mcv), "train_losses": [_num(v) for v in rec.train_losses],
           "val_losses": [_num(v) for v in rec.val_losses], "feasible": rec.feasible}
    if rec.train_acc:
        out["acc_cv"], out["acc_cv_val"] = _num(rec.acc_cv), _num(rec.acc_cv_val)
    if rec.failures:
        out["failures"] = list(rec.failures)
    return out


def _reference_scores(rec, sel):
    full = (sel.full_mse_cv, sel.full_mse_cv_val)
    return (mc_statistic(rec.loss_cv, full[0], sel.lambda_opt, rec.r),
            mc_statistic(rec.loss_cv_val, full[1], sel.lambda_opt, rec.r))


def _rows(res: PipelineResult):
    sel = res.selection
    rows = [(rec, sel.mc_cv[i], sel.mc_cv_val[i]) for i, rec in enumerate(sel.records)]
    for rec in (res.cv.benchmark, res.cv.full):
        if rec is not None:
            rows.append((rec, *_reference_scores(rec, sel)))
    return rows


def write_report_csv(res: PipelineResult, path) -> None:
    """One row per candidate in enumeration order, then benchmark and complex_dnn."""
    cls = res.dataset.task == "classification"
    cols = REPORT_COLUMNS + (ACC_COLUMNS if cls else ())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec, mc, mcv in _rows(res):
            row = [rec.model_id, rec.form, format_float(rec.r), format_float(rec.loss_cv),
                   format_float(rec.loss_cv_val), format_float(mc), format_float(mcv)]
            if cls:
                row += [format_float(rec.acc_cv if rec.train_acc else math.nan),
                        format_float(rec.acc_cv_val if rec.val_acc else math.nan)]
            w.writerow(row)


def report_dict(res: PipelineResult) -> dict:
    sel = res.selection
    model = res.selected_model
    meta = {k: v for k, v in res.dataset.meta.items() if k != "row_seeds"}
    rows = [_record_json(rec, mc, mcv) for rec, mc, mcv in _rows(res)]
    lams, curve = res.lambda_curve
    r_sel = sel.selected.r
    return {
        "study": res.config.study,
        "lambda_opt": sel.lambda_opt,
        "selected_id": sel.selected_id,
        "selected_form": sel.selected.form,
        "selected_r": r_sel,
        "selected_r_display": display_round(r_sel),
        "r_display_differs": display_round(r_sel) != r_sel,
        "tie_break_applied": sel.tie_break_applied,
        "selected_model": {
            "first_layer": model.first_layer.id,
            "second_layer": [f.id for f in model.second_layer],
            "covariate_subset": list(model.covariate_subset),
            "output_link": model.output_link,
            "refit_theta": [_num(v) for v in sel.refit_theta],
            "refit_loss": _num(sel.refit_loss),
            "equation": model.render(res.dataset.feature_names),
        },
        "complex_dnn": {"loss_cv": _num(sel.full_mse_cv), "loss_cv_val": _num(sel.full_mse_cv_val)},
        "dataset": {"n_rows": res.dataset.n, "feature_names": list(res.dataset.feature_names),
                    "target_names": list(res.dataset.target_names),
                    "dropped_rows": int(meta.get("dropped_rows", 0)), "meta": meta},
        "fold_sizes": make_cv_plan(res.dataset.n, res.config.D, res.seeds["cv"]).fold_sizes,
        "seeds": res.seeds,
        "lambda_curve": [[_num(a), _num(b)] for a, b in zip(lams, curve)],
        "rows": rows,
        # the output directory is where this file lives; echoing it would make
        # reports from identical configs differ by location only
        "config": {k: v for k, v in res.config.to_dict().items() if k != "out"},
    }


def model_from_report(report: dict) -> CandidateModel:
    """Rebuild the selected, refitted model from ``report.json`` contents."""
    s = report["selected_model"]
    names = report["dataset"]["feature_names"]
    sub = tuple(s["covariate_subset"])
    cov_names = tuple(names[i] for i in sub) if len(sub) != len(names) else ()
    return CandidateModel(report["selected_id"], library.get(s["first_layer"]),
                          tuple(library.get(n) for n in s["second_layer"]), sub,
                          np.array([float(v) for v in s["refit_theta"]]), s["output_link"], cov_names)


def run_pipeline(cfg: RunConfig, out_dir=None, write: bool = True) -> PipelineResult:
    """Generate or ingest, cross-validate, choose lambda and the winner, refit, write files."""
    seeds = run_seeds(cfg.seed)
    data = build_dataset(cfg, seeds["data"])
    log.info("dataset: %d rows, features %s", data.n, ", ".join(data.feature_names))
    if cfg.D > data.n:
        raise ConfigError(f"D={cfg.D} exceeds the number of rows {data.n}")
    candidates = build_candidates(cfg, data)
    full_spec, bench_spec = mlp_specs(cfg, data, seeds["mlp"])
    fc = cfg.fit
    fit_cfg = FitConfig(loss=fc["loss"], learning_rate=float(fc["learning_rate"]), iterations=int(fc["iterations"]),
                        restarts=int(fc["restarts"]), init_scale=float(fc["init_scale"]), seed=seeds["fit"])
    plan = make_cv_plan(data.n, cfg.D, seeds["cv"])
    log.info("%d candidates, D=%d", len(candidates), cfg.D)
    cv = cross_validate(candidates, full_spec, data, plan, fit_cfg, bench_spec, cfg.complexity, progress=log.info)
    full = (cv.full_mse_cv, cv.full_mse_cv_val)
    g = cfg.lambda_grid
    lam, lams, curve = lambda_search(cv.records, full, (float(g["min"]), float(g["max"]), float(g["step"])),
                                     cfg.correlation, return_curve=True)
    sel = select_final(cv.records, lam, full, candidates, data, fit_cfg)
    log.info("lambda_opt %s, selected model %s (%s)", lam, sel.selected_id, sel.selected.form)
    res = PipelineResult(cfg, data, candidates, cv, sel, (lams, curve), seeds)
    if write:
        out = Path(out_dir if out_dir is not None else cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(data, out / "dataset.csv")
        write_report_csv(res, out / "report.csv")
        (out / "report.json").write_text(json.dumps(report_dict(res), indent=2) + "\n")
        res.files = [out / "dataset.csv", out / "report.csv", out / "report.json"]
        if cfg.heatmap.get("enabled"):
            hm = cfg.heatmap
            res.files += emit_heatmaps(res.selected_model, data, out, hm["views"], int(hm["steps"]), hm.get("axes"))
    return res
