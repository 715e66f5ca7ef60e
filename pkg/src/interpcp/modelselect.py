"""Cross-validated modified Mallows's Cp and the final model choice.

For candidate k with cross-validated loss L_k and a saturated network
with loss L_full, the score is ``L_k / L_full - 1 + lam * r_k``. It is
computed twice, from training-fold and from validation-fold losses; the
complexity weight ``lam`` is the grid value that makes the two score
vectors most correlated, and the winner minimises the validation score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Sequence

import numpy as np

from . import mlpnet, statcore
from .data import Dataset
from .exprdsl.candidates import CandidateModel, EvaluationError, complexity, evaluate
from .optim import FitConfig, FitFailure, accuracy, cross_entropy_loss, fit, mse_loss

__all__ = [
    "CvPlan",
    "CandidateCvRecord",
    "CvResult",
    "SelectionReport",
    "SelectionError",
    "mallows_cp",
    "mc_statistic",
    "make_cv_plan",
    "cross_validate",
    "evaluate_reference",
    "lambda_grid",
    "lambda_search",
    "select_final",
    "derive_seed",
]


class SelectionError(RuntimeError):
    pass


def mallows_cp(sse_k: float, sigma2_hat: float, N: int, p_k: float) -> float:
    """Classical Mallows's Cp: SSE / sigma^2 - N + 2p."""
    if sigma2_hat <= 0:
        raise ValueError("sigma2_hat must be positive")
    return sse_k / sigma2_hat - N + 2.0 * p_k


def mc_statistic(mse_k, mse_full: float, lam: float, r_k):
    """Modified Cp: mse_k / mse_full - 1 + lam * r_k (infinite losses stay infinite)."""
    if mse_full <= 0:
        raise ValueError("mse_full must be positive")
    out = np.asarray(mse_k, dtype=float) / mse_full - 1.0 + lam * np.asarray(r_k, dtype=float)
    return float(out) if np.ndim(out) == 0 else out


def derive_seed(*parts: int) -> int:
    """Deterministic 32-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# Fold plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CvPlan:
    D: int
    assignments: np.ndarray
    seed: int

    def fold_rows(self, d: int) -> np.ndarray:
        return np.nonzero(self.assignments == d)[0]

    def train_rows(self, d: int) -> np.ndarray:
        return np.nonzero(self.assignments != d)[0]

    @property
    def fold_sizes(self) -> List[int]:
        return [int(np.sum(self.assignments == d)) for d in range(self.D)]


def make_cv_plan(N: int, D: int, seed: int = 0) -> CvPlan:
    """Random partition into D folds; the first N mod D folds get one extra row."""
    if not 2 <= D <= N:
        raise ValueError(f"fold count D={D} must satisfy 2 <= D <= N={N}")
    perm = np.random.default_rng(seed).permutation(N)
    base, extra = divmod(N, D)
    sizes = [base + (1 if d < extra else 0) for d in range(D)]
    assignments = np.empty(N, dtype=int)
    start = 0
    for d, s in enumerate(sizes):
        assignments[perm[start:start + s]] = d
        start += s
    return CvPlan(D, assignments, seed)


# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


@dataclass
class CandidateCvRecord:
    model_id: object
    form: str
    r: float
    train_losses: List[float]
    val_losses: List[float]
    train_acc: List[float] = field(default_factory=list)
    val_acc: List[float] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)

    @property
    def loss_cv(self) -> float:
        return float(np.mean(self.train_losses))

    @property
    def loss_cv_val(self) -> float:
        return float(np.mean(self.val_losses))

    @property
    def acc_cv(self) -> float | None:
        return float(np.mean(self.train_acc)) if self.train_acc else None

    @property
    def acc_cv_val(self) -> float | None:
        return float(np.mean(self.val_acc)) if self.val_acc else None

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.loss_cv) and math.isfinite(self.loss_cv_val)


@dataclass
class CvResult:
    records: List[CandidateCvRecord]
    full: CandidateCvRecord
    benchmark: CandidateCvRecord | None = None

    @property
    def full_mse_cv(self) -> float:
        return self.full.loss_cv

    @property
    def full_mse_cv_val(self) -> float:
        return self.full.loss_cv_val


def _loss(loss: str, out: np.ndarray, y: np.ndarray) -> float:
    if loss == "mse":
        return mse_loss(out.reshape(-1), y)
    return cross_entropy_loss(out, y)


def _candidate_fold(model, data, plan, d, cfg):
    tr = data.subset(plan.train_rows(d))
    va = data.subset(plan.fold_rows(d))
    res = fit(model, tr, cfg)
    out_tr = evaluate(model, tr.X, res.theta_hat)
    out_va = evaluate(model, va.X, res.theta_hat)
    accs = None
    if data.task == "classification":
        accs = (accuracy(out_tr, tr.y), accuracy(out_va, va.y))
    return _loss(cfg.loss, out_tr, tr.y), _loss(cfg.loss, out_va, va.y), accs


def evaluate_reference(spec: mlpnet.MlpSpec, data: Dataset, plan: CvPlan, name: str,
                       complexity_kind: str = "total_params", seed: int = 0) -> CandidateCvRecord:
    """Cross-validate an MLP; it is retrained from scratch on every fold."""
    rec = CandidateCvRecord(name, name, complexity(spec, complexity_kind).value, [], [])
    for d in range(plan.D):
        tr = data.subset(plan.train_rows(d))
        va = data.subset(plan.fold_rows(d))
        fold_spec = mlpnet.MlpSpec(**{**spec.__dict__, "seed": derive_seed(seed, spec.seed, d)})
        try:
            state = mlpnet.train(fold_spec, tr)
        except mlpnet.TrainingFailure as e:
            rec.failures.append(f"fold {d}: {e}")
            rec.train_losses.append(math.inf)
            rec.val_losses.append(math.inf)
            continue
        out_tr = mlpnet.predict(state, tr.X)
        out_va = mlpnet.predict(state, va.X)
        rec.train_losses.append(_loss(spec.loss, out_tr, tr.y))
        rec.val_losses.append(_loss(spec.loss, out_va, va.y))
        if data.task == "classification":
            rec.train_acc.append(accuracy(out_tr, tr.y))
            rec.val_acc.append(accuracy(out_va, va.y))
    return rec


def cross_validate(
    candidates: Sequence[CandidateModel],
    full_spec: mlpnet.MlpSpec,
    data: Dataset,
    plan: CvPlan,
    fit_cfg: FitConfig = FitConfig(),
    benchmark_spec: mlpnet.MlpSpec | None = None,
    complexity_kind: str = "total_params",
    progress: Callable[[str], None] | None = None,
) -> CvResult:
    """Per-fold fits of every candidate and of the reference networks.

    Training-fold and validation-fold losses are averaged over folds.
    A candidate that cannot be fitted on some fold gets an infinite loss
    there and is reported as infeasible; this is not an error.
    """
    if len(plan.assignments) != data.n:
        raise ValueError("fold plan does not cover the dataset")
    records = []
    for model in candidates:
        rec = CandidateCvRecord(model.model_id, model.form, complexity(model, complexity_kind).value, [], [])
        for d in range(plan.D):
            cfg = FitConfig(**{**fit_cfg.__dict__, "seed": derive_seed(fit_cfg.seed, model.model_id, d),
                               "record_trace": False})
            try:
                l_tr, l_va, accs = _candidate_fold(model, data, plan, d, cfg)
            except (EvaluationError, FitFailure) as e:
                rec.failures.append(f"fold {d}: {e}")
                l_tr = l_va = math.inf
                accs = (0.0, 0.0) if data.task == "classification" else None
            rec.train_losses.append(l_tr)
            rec.val_losses.append(l_va)
            if accs is not None:
                rec.train_acc.append(accs[0])
                rec.val_acc.append(accs[1])
        records.append(rec)
        if progress:
            progress(f"candidate {model.model_id}: cv {rec.loss_cv:.6g} / {rec.loss_cv_val:.6g}")
    full = evaluate_reference(full_spec, data, plan, "complex_dnn", complexity_kind, plan.seed)
    if progress:
        progress(f"complex DNN: cv {full.loss_cv:.6g} / {full.loss_cv_val:.6g}")
    bench = None
    if benchmark_spec is not None:
        bench = evaluate_reference(benchmark_spec, data, plan, "benchmark", complexity_kind, plan.seed)
        if progress:
            progress(f"benchmark: cv {bench.loss_cv:.6g} / {bench.loss_cv_val:.6g}")
    return CvResult(records, full, bench)


# ---------------------------------------------------------------------------
# lambda and selection
# ---------------------------------------------------------------------------


def lambda_grid(lo: float = 0.0, hi: float = 1.0, step: float = 0.01) -> np.ndarray:
    if step <= 0 or hi < lo:
        raise ValueError("invalid lambda grid")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 12)


def _mc_vectors(records, full_mses, lam):
    r = np.array([rec.r for rec in records])
    tr = np.array([rec.loss_cv for rec in records])
    va = np.array([rec.loss_cv_val for rec in records])
    return mc_statistic(tr, full_mses[0], lam, r), mc_statistic(va, full_mses[1], lam, r)


def lambda_search(records: Sequence[CandidateCvRecord], full_mses: Sequence[float],
                  grid=(0.0, 1.0, 0.01), method: str = "spearman", return_curve: bool = False):
    """Grid value of lambda maximising corr(MC_cv, MC'_cv) over feasible candidates.

    Ties go to the smallest lambda. ``full_mses`` is the pair
    (training, validation) of the reference network's CV losses.
    """
    corr = {"pearson": statcore.pearson_correlation, "spearman": statcore.spearman_correlation}[method]
    feas = [r for r in records if r.feasible]
    if len(feas) < 2:
        raise SelectionError("lambda search needs at least two feasible candidates")
    lams = lambda_grid(*grid) if isinstance(grid, tuple) else np.asarray(grid, dtype=float)
    curve = np.full(len(lams), np.nan)
    for i, lam in enumerate(lams):
        a, b = _mc_vectors(feas, full_mses, lam)
        try:
            curve[i] = corr(a, b)
        except statcore.UndefinedCorrelationError:
            pass
    if np.all(np.isnan(curve)):
        raise SelectionError("correlation undefined at every grid point; try a different lambda grid")
    best = np.nanmax(curve)
    lam_opt = float(lams[int(np.nonzero(curve == best)[0][0])])
    return (lam_opt, lams, curve) if return_curve else lam_opt


@dataclass
class SelectionReport:
    records: List[CandidateCvRecord]
    full_mse_cv: float
    full_mse_cv_val: float
    lambda_opt: float
    mc_cv: np.ndarray
    mc_cv_val: np.ndarray
    selected_id: object
    tie_break_applied: bool
    refit_theta: np.ndarray | None = None
    refit_loss: float | None = None

    @property
    def selected_index(self) -> int:
        return [r.model_id for r in self.records].index(self.selected_id)

    @property
    def selected(self) -> CandidateCvRecord:
        return self.records[self.selected_index]


def select_by_score(records, scores, exact=None) -> tuple:
    """Index of the minimum score; ties by smaller r, then record order.

    ``exact`` optionally holds rational versions of ``scores`` used for the
    comparison, so that distinct losses never tie through rounding.
    """
    scores = np.asarray(scores, dtype=float)
    finite = np.isfinite(scores)
    if not finite.any():
        raise SelectionError("no feasible candidate to select")
    key = exact if exact is not None else scores
    best = min(key[i] for i in np.nonzero(finite)[0])
    tied = [i for i in np.nonzero(finite)[0] if key[i] == best]
    tied.sort(key=lambda i: (records[i].r, i))
    return tied[0], len(tied) > 1


def _exact_scores(records, full_mse: float, lam: float, scores) -> list:
    """``L/L_full - 1 + lam*r`` in rational arithmetic for finite scores."""
    f, lam = Fraction(full_mse), Fraction(lam)
    return [Fraction(rec.loss_cv_val) / f - 1 + lam * Fraction(rec.r) if np.isfinite(s) else None
            for rec, s in zip(records, scores)]


def select_final(records: Sequence[CandidateCvRecord], lambda_opt: float, full_mses: Sequence[float],
                 candidates: Sequence[CandidateModel] | None = None, data: Dataset | None = None,
                 fit_cfg: FitConfig | None = None) -> SelectionReport:
    """Score every candidate at ``lambda_opt`` and pick the smallest validation score.

    When ``candidates``, ``data`` and ``fit_cfg`` are given, the winner is
    refitted on all rows and its estimate stored in the report.
    """
    if not records:
        raise SelectionError("no candidates")
    records = list(records)
    mc, mcv = _mc_vectors(records, full_mses, lambda_opt)
    mc = np.where([r.feasible for r in records], mc, np.inf)
    mcv = np.where([r.feasible for r in records], mcv, np.inf)
    idx, tie = select_by_score(records, mcv, _exact_scores(records, full_mses[1], lambda_opt, mcv))
    rep = SelectionReport(records, float(full_mses[0]), float(full_mses[1]), float(lambda_opt),
                          mc, mcv, records[idx].model_id, tie)
    if candidates is not None and data is not None and fit_cfg is not None:
        model = next(c for c in candidates if c.model_id == rep.selected_id)
        res = fit(model, data, FitConfig(**{**fit_cfg.__dict__, "seed": derive_seed(fit_cfg.seed, model.model_id, 999)}))
        rep.refit_theta = res.theta_hat
        rep.refit_loss = res.train_loss
    return rep
