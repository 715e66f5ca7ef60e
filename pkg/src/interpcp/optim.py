"""Least-squares and cross-entropy fitting of candidate models.

All restarts of one fit run in lock step as a batch of parameter vectors;
Adam moments are kept per restart, so the result is identical to running
the restarts one after another.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .exprdsl.candidates import CandidateModel, EvaluationError, apply_link, evaluate, link_backward

__all__ = [
    "FitConfig",
    "FitResult",
    "FitFailure",
    "mse_loss",
    "cross_entropy_loss",
    "model_loss",
    "accuracy",
    "fit",
]

PROB_CLIP = 1e-12


class FitFailure(RuntimeError):
    """Every restart of a fit ended with a non-finite loss."""

    def __init__(self, model_id, message=""):
        self.model_id = model_id
        super().__init__(f"candidate {model_id}: {message or 'no restart reached a finite loss'}")


@dataclass(frozen=True)
class FitConfig:
    loss: str = "mse"
    learning_rate: float = 0.01
    iterations: int = 2000
    restarts: int = 5
    init_scale: float = 1.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    record_trace: bool = False

    def __post_init__(self):
        if self.loss not in ("mse", "cross_entropy"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.iterations < 1 or self.restarts < 1 or self.learning_rate <= 0 or self.init_scale <= 0:
            raise ValueError("iterations, restarts, learning_rate and init_scale must be positive")


@dataclass
class FitResult:
    theta_hat: np.ndarray
    train_loss: float
    converged: bool
    restarts_tried: int
    restart_losses: np.ndarray = field(default_factory=lambda: np.empty(0))
    trace: np.ndarray | None = None


def mse_loss(preds, targets) -> float:
    """Mean squared error."""
    preds = np.asarray(preds, dtype=float).ravel()
    targets = np.asarray(targets, dtype=float).ravel()
    if preds.size == 0 or preds.shape != targets.shape:
        raise ValueError("mse_loss needs two nonempty vectors of equal length")
    d = targets - preds
    return float(np.mean(d * d))


def cross_entropy_loss(pred_pairs, labels) -> float:
    """Mean two-class cross-entropy with predictions clamped to [1e-12, 1 - 1e-12]."""
    p = np.asarray(pred_pairs, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape or p.ndim != 2 or p.shape[0] == 0:
        raise ValueError("cross_entropy_loss needs matching (N, C) arrays")
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.sum(y * np.log(p)) / p.shape[0])


def accuracy(pred_pairs, labels) -> float:
    p = np.asarray(pred_pairs, dtype=float)
    y = np.asarray(labels, dtype=float)
    return float(np.mean(np.argmax(p, axis=1) == np.argmax(y, axis=1)))


def model_loss(model: CandidateModel, data: Dataset, theta=None, loss: str = "mse") -> float:
    out = evaluate(model, data.X, theta)
    if loss == "mse":
        return mse_loss(out[:, 0], data.y)
    return cross_entropy_loss(out, data.y)


def _batched_loss_and_upstream(link, yp, y, loss):
    """Loss per restart and d(loss)/d(yp) for raw outputs ``yp`` of shape (R, N)."""
    n = yp.shape[1]
    out = apply_link(link, yp)
    if loss == "mse":
        resid = out[..., 0] - y[None, :]
        losses = np.mean(resid * resid, axis=1)
        up = (2.0 / n) * resid[..., None]
        return losses, link_backward(link, yp, up)
    pc = np.clip(out, PROB_CLIP, 1.0 - PROB_CLIP)
    losses = -np.sum(y[None] * np.log(pc), axis=(1, 2)) / n
    if link == "softmax_pair":
        # exact gradient of the unclamped loss through the logistic kernel
        s = out[..., 1]
        return losses, (s - y[None, :, 1]) / n
    up = -(y[None] / pc) / n
    return losses, link_backward(link, yp, up)


def fit(model: CandidateModel, data: Dataset, cfg: FitConfig = FitConfig()) -> FitResult:
    """Estimate theta by full-batch Adam with several random starts.

    Restart ``r`` draws every entry of its starting point uniformly on
    ``[-init_scale, init_scale]`` from a generator seeded with
    ``cfg.seed + r``. Each restart keeps its best iterate; the returned
    estimate is the best over restarts (lowest index on ties).

    Raises
    ------
    EvaluationError
        If the data lie outside a base function's domain.
    FitFailure
        If no restart reaches a finite loss.
    """
    p = model.param_count
    R = cfg.restarts
    if p == 0:
        loss0 = model_loss(model, data, np.zeros(0), cfg.loss)
        if not np.isfinite(loss0):
            raise FitFailure(model.model_id)
        return FitResult(np.zeros(0), loss0, True, R, np.full(R, loss0))

    theta = np.stack(
        [np.random.default_rng(cfg.seed + r).uniform(-cfg.init_scale, cfg.init_scale, p) for r in range(R)]
    )
    # domain check with a readable error before the hot loop
    layer_check = evaluate(model, data.X[: min(len(data.X), 64)], theta[0])
    del layer_check

    tree = model.compile(data.X)
    y = data.y
    link = model.output_link
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    best = np.full(R, np.inf)
    best_theta = theta.copy()
    alive = np.ones(R, dtype=bool)
    trace = np.empty((R, cfg.iterations + 1)) if cfg.record_trace else None
    b1, b2, lr, eps = cfg.beta1, cfg.beta2, cfg.learning_rate, cfg.eps
    window = max(1, cfg.iterations // 10)
    hist = np.full(R, np.inf)

    with np.errstate(all="ignore"):
        for t in range(cfg.iterations + 1):
            yp = tree.forward(theta)
            losses, up = _batched_loss_and_upstream(link, yp, y, cfg.loss)
            finite = np.isfinite(losses)
            alive &= finite
            improved = alive & (losses < best)
            best = np.where(improved, losses, best)
            best_theta[improved] = theta[improved]
            if trace is not None:
                trace[:, t] = best
            if t == cfg.iterations - window:
                hist = best.copy()
            if t == cfg.iterations or not alive.any():
                break
            g = tree.backward(np.where(alive[:, None], up, 0.0))
            g = np.where(alive[:, None] & np.isfinite(g), g, 0.0)
            m = b1 * m + (1.0 - b1) * g
            v = b2 * v + (1.0 - b2) * g * g
            step = lr * (m / (1.0 - b1 ** (t + 1))) / (np.sqrt(v / (1.0 - b2 ** (t + 1))) + eps)
            theta = theta - np.where(alive[:, None], step, 0.0)

    if not np.any(np.isfinite(best)):
        raise FitFailure(model.model_id)
    k = int(np.argmin(best))
    theta_hat = best_theta[k].copy()
    loss_hat = model_loss(model, data, theta_hat, cfg.loss)
    if not np.isfinite(loss_hat):
        raise FitFailure(model.model_id, "best iterate is not finite on re-evaluation")
    converged = bool(np.isfinite(hist[k]) and hist[k] - best[k] <= 1e-4 * max(abs(best[k]), 1e-12))
    return FitResult(theta_hat, loss_hat, converged, R, best, trace)
