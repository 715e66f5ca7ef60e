"""Run configuration: per-study defaults, YAML loading, validation."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .exprdsl import library

__all__ = ["ConfigError", "RunConfig", "STUDIES", "study_defaults", "load_config"]

STUDIES = ("sim1", "sim2", "sim3", "tabular")


class ConfigError(ValueError):
    pass


_COMMON = {
    "seed": 0,
    "out": "out",
    "D": 5,
    "lambda_grid": {"min": 0.0, "max": 1.0, "step": 0.01},
    "correlation": "spearman",
    "complexity": "total_params",
    "fit": {"loss": "mse", "learning_rate": 0.01, "iterations": 2000, "restarts": 5, "init_scale": 1.0},
    "full_mlp": {"hidden": [60, 60], "dropout_rate": 0.2, "epochs": 100, "batch_size": 10,
                 "learning_rate": 0.005, "optimizer": "adam"},
    "benchmark_mlp": {"hidden": [2], "dropout_rate": 0.2, "epochs": 100, "batch_size": 10,
                      "learning_rate": 0.005, "optimizer": "adam"},
    "candidates": {"J": 2, "subset_size": "all", "mode": "distinct_pairs", "pairs": None},
    "heatmap": {"enabled": False, "steps": 50, "views": ["model", "f1", "f2_1", "f2_2"], "axes": None},
}

_STUDY = {
    "sim1": {
        "data": {"N": 1000, "mc_reps": 10000, "delta": 0.3, "test": "pooled",
                 "ranges": {"mu0": [0.1, 0.6], "alpha": [0.01, 0.15], "n1": [10, 60], "n1_scale": 60}},
        "candidates": {"f1": [f"sim1.f1.{i}" for i in (1, 2, 3)], "f2": [f"sim1.f2.{i}" for i in (1, 2, 3, 4)]},
    },
    "sim2": {
        "data": {"N": 1000, "input_mode": "original", "n": 40, "q_a": 1.0, "q_b": 1.0,
                 "tau_min": 0.8, "tau_base": 0.1,
                 "ranges": {"t_min": [0.1, 0.3], "t_gap": [0.05, 0.2], "q0": [0.1, 0.6]}},
        "candidates": {"f1": [f"sim1.f1.{i}" for i in (1, 2, 3)], "f2": [f"sim2.f2.{i}" for i in (1, 2, 3, 4)]},
    },
    "sim3": {
        "data": {"N": 1000, "n_min": 10, "n_max": 50, "alpha_level": 0.05},
        "candidates": {"f1": [f"sim3.f1.{i}" for i in (1, 2, 3)], "f2": [f"sim3.f2.{i}" for i in (1, 2, 3)]},
        "complexity": "avg_params_per_layer",
        "fit": {"loss": "cross_entropy"},
        "full_mlp": {"learning_rate": 0.0005},
        "benchmark_mlp": {"learning_rate": 0.0005},
    },
    "tabular": {
        "data": {"csv": None, "target": None, "features": None,
                 "target_transform": {"kind": "log_affine", "shift": 3.0, "scale": 14.0},
                 "standardize": True},
        "candidates": {"f1": [f"nhanes.f1.{i}" for i in (1, 2, 3)], "f2": [f"nhanes.f2.{i}" for i in (1, 2, 3)],
                       "subset_size": 2},
        "D": 4,
        "heatmap": {"enabled": True},
    },
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def study_defaults(study: str) -> dict:
    if study not in STUDIES:
        raise ConfigError(f"unknown study {study!r}; expected one of {', '.join(STUDIES)}")
    d = _merge(_COMMON, _STUDY[study])
    d["study"] = study
    return d


@dataclass
class RunConfig:
    """Fully resolved settings for one pipeline run."""

    study: str
    seed: int
    out: str
    D: int
    lambda_grid: dict
    correlation: str
    complexity: str
    fit: dict
    full_mlp: dict
    benchmark_mlp: dict
    candidates: dict
    heatmap: dict
    data: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a mapping")
        study = raw.get("study")
        if study is None:
            raise ConfigError("configuration needs a 'study' entry")
        merged = _merge(study_defaults(study), raw)
        unknown = set(merged) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if not isinstance(self.D, int) or self.D < 2:
            raise ConfigError("D must be an integer >= 2")
        if self.correlation not in ("pearson", "spearman"):
            raise ConfigError("correlation must be 'pearson' or 'spearman'")
        if self.complexity not in ("total_params", "avg_params_per_layer"):
            raise ConfigError("complexity must be 'total_params' or 'avg_params_per_layer'")
        g = self.lambda_grid
        if not all(k in g for k in ("min", "max", "step")) or g["step"] <= 0 or g["max"] < g["min"]:
            raise ConfigError("lambda_grid needs min <= max and step > 0")
        for key in ("f1", "f2"):
            names = self.candidates.get(key) or []
            if not names:
                raise ConfigError(f"candidates.{key} must list base functions")
            for name in names:
                if name not in library.REGISTRY:
                    raise ConfigError(f"unknown base function {name!r} in candidates.{key}")
        if self.candidates["mode"] not in ("distinct_pairs", "listed_explicitly"):
            raise ConfigError("candidates.mode must be 'distinct_pairs' or 'listed_explicitly'")
        if self.study == "tabular":
            if not self.data.get("csv") or not self.data.get("target"):
                raise ConfigError("tabular study needs data.csv and data.target")
            if self.data["target_transform"].get("kind") not in ("none", "log_affine", "affine"):
                raise ConfigError("data.target_transform.kind must be none, log_affine or affine")
        elif int(self.data.get("N", 0)) < 1:
            raise ConfigError("data.N must be >= 1")
        for key in ("full_mlp", "benchmark_mlp"):
            if not self.__dict__[key].get("hidden"):
                raise ConfigError(f"{key}.hidden must list at least one width")

    def to_dict(self) -> dict:
        return {k: copy.deepcopy(getattr(self, k)) for k in self.__dataclass_fields__}


def load_config(path=None, study: str | None = None, seed: int | None = None, out: str | None = None) -> RunConfig:
    """Read a YAML config (optional) and apply command-line overrides."""
    raw: dict = {}
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text()) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    if study is not None:
        if raw.get("study") not in (None, study):
            raise ConfigError(f"--study {study} conflicts with config study {raw.get('study')}")
        raw["study"] = study
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["out"] = out
    return RunConfig.from_dict(raw)
