"""Small dense ReLU networks: the saturated reference model and the benchmark.

Training is minibatch Adam (plain SGD on request) with inverted dropout
on hidden activations.
Regression uses a sigmoid head with squared error, classification a
softmax head with cross-entropy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import numpy as np

from .data import Dataset, format_float

__all__ = [
    "MlpSpec",
    "MlpState",
    "TrainingFailure",
    "param_count",
    "init_state",
    "train",
    "predict",
    "loss_and_grads",
    "save_state",
    "load_state",
]

FORMAT_VERSION = 1


class TrainingFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple
    hidden_activation: str = "relu"
    output_activation: str = "sigmoid"
    dropout_rate: float = 0.2
    epochs: int = 100
    batch_size: int = 10
    learning_rate: float = 0.005
    seed: int = 0
    optimizer: str = "adam"

    def __post_init__(self):
        w = tuple(int(v) for v in self.layer_widths)
        object.__setattr__(self, "layer_widths", w)
        if len(w) < 3 or min(w) < 1:
            raise ValueError("need input, at least one hidden layer and output, all widths >= 1")
        if self.hidden_activation != "relu":
            raise ValueError("only relu hidden layers are supported")
        if self.output_activation not in ("sigmoid", "softmax"):
            raise ValueError("output_activation must be 'sigmoid' or 'softmax'")
        if not 0 <= self.dropout_rate < 1:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs, batch_size and learning_rate must be positive")

    @property
    def param_count(self) -> int:
        return param_count(self)

    @property
    def layer_count(self) -> int:
        """Number of weight layers."""
        return len(self.layer_widths) - 1

    @property
    def loss(self) -> str:
        return "cross_entropy" if self.output_activation == "softmax" else "mse"


def param_count(spec: MlpSpec) -> int:
    w = spec.layer_widths
    return sum(w[i] * w[i + 1] + w[i + 1] for i in range(len(w) - 1))


@dataclass
class MlpState:
    spec: MlpSpec
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    trained: bool = False
    history: list = field(default_factory=list)

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def layer_count(self) -> int:
        return len(self.weights)


def init_state(spec: MlpSpec, rng: np.random.Generator | None = None) -> MlpState:
    """Glorot-uniform weights, zero biases."""
    rng = rng or np.random.default_rng(spec.seed)
    ws, bs = [], []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        lim = np.sqrt(6.0 / (fan_in + fan_out))
        ws.append(rng.uniform(-lim, lim, size=(fan_in, fan_out)))
        bs.append(np.zeros(fan_out))
    return MlpState(spec, ws, bs)


def _head(spec, z):
    if spec.output_activation == "sigmoid":
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward(state, X, masks=None):
    acts = [X]
    h = X
    n_hidden = len(state.weights) - 1
    for i, (w, b) in enumerate(zip(state.weights, state.biases)):
        z = h @ w + b
        if i < n_hidden:
            h = np.maximum(z, 0.0)
            if masks is not None:
                h = h * masks[i]
        else:
            h = _head(state.spec, z)
        acts.append(h)
    return acts


def _targets(spec, y):
    y = np.asarray(y, dtype=float)
    if spec.output_activation == "sigmoid":
        return y.reshape(-1, spec.layer_widths[-1])
    return y


def _batch_loss(spec, out, y):
    n = out.shape[0]
    if spec.output_activation == "sigmoid":
        d = out - y
        return float(np.sum(d * d) / d.size), 2.0 * d * out * (1.0 - out) / d.size
    p = np.clip(out, 1e-12, 1.0 - 1e-12)
    return float(-np.sum(y * np.log(p)) / n), (out - y) / n


def loss_and_grads(state: MlpState, X, y, masks=None):
    """Loss and its gradients (weights, biases) for one batch.

    ``masks`` are the (already scaled) dropout multipliers per hidden
    layer, or ``None`` for the deterministic network.
    """
    X = np.asarray(X, dtype=float)
    yt = _targets(state.spec, y)
    acts = _forward(state, X, masks)
    loss, delta = _batch_loss(state.spec, acts[-1], yt)
    gw = [None] * len(state.weights)
    gb = [None] * len(state.weights)
    for i in range(len(state.weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ state.weights[i].T
            # relu and dropout share the same multiplicative pattern
            if masks is not None:
                delta = delta * masks[i - 1]
            delta = delta * (acts[i] > 0)
    return loss, gw, gb


def train(spec: MlpSpec, data: Dataset) -> MlpState:
    """Minibatch training with per-epoch shuffling; deterministic given ``spec.seed``."""
    X = np.asarray(data.X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("empty dataset")
    if X.shape[1] != spec.layer_widths[0]:
        raise ValueError(f"input width {X.shape[1]} does not match spec {spec.layer_widths[0]}")
    y = _targets(spec, data.y)
    rng = np.random.default_rng(spec.seed)
    state = init_state(spec, rng)
    params = state.weights + state.biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps, lr = 0.9, 0.999, 1e-7, spec.learning_rate
    keep = 1.0 - spec.dropout_rate
    hidden = spec.layer_widths[1:-1]
    n = X.shape[0]
    t = 0
    for epoch in range(spec.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, spec.batch_size):
            idx = order[start:start + spec.batch_size]
            masks = None
            if spec.dropout_rate > 0:
                masks = [(rng.random((len(idx), h)) < keep) / keep for h in hidden]
            loss, gw, gb = loss_and_grads(state, X[idx], y[idx], masks)
            if not np.isfinite(loss):
                raise TrainingFailure(f"non-finite loss in epoch {epoch}")
            total += loss * len(idx)
            t += 1
            if spec.optimizer == "sgd":
                for p, g in zip(params, gw + gb):
                    p -= lr * g
                continue
            c1 = 1.0 - b1 ** t
            c2 = 1.0 - b2 ** t
            for p, g, mi, vi in zip(params, gw + gb, m, v):
                mi *= b1
                mi += (1.0 - b1) * g
                vi *= b2
                vi += (1.0 - b2) * g * g
                p -= lr * (mi / c1) / (np.sqrt(vi / c2) + eps)
        state.history.append(total / n)
    state.trained = True
    return state


def predict(state: MlpState, X) -> np.ndarray:
    """Dropout-free forward pass.

    A 1-D input gives the output vector for that row; a 2-D input gives
    one row of outputs per input row.
    """
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != state.spec.layer_widths[0]:
        raise ValueError(f"input width {X2.shape[1]} does not match {state.spec.layer_widths[0]}")
    out = _forward(state, X2)[-1]
    return out[0] if single else out


def save_state(state: MlpState, path) -> None:
    """Plain-text dump: a header line, the spec, then row-major matrices."""
    s = state.spec
    lines = [
        f"mlpstate {FORMAT_VERSION}",
        "widths " + " ".join(str(w) for w in s.layer_widths),
        f"activations {s.hidden_activation} {s.output_activation}",
        f"training {format_float(s.dropout_rate)} {s.epochs} {s.batch_size} "
        f"{format_float(s.learning_rate)} {s.seed} {s.optimizer}",
        f"trained {int(state.trained)}",
    ]
    for w, b in zip(state.weights, state.biases):
        lines.append(f"weight {w.shape[0]} {w.shape[1]}")
        lines.extend(" ".join(format_float(v) for v in row) for row in w)
        lines.append(f"bias {b.size}")
        lines.append(" ".join(format_float(v) for v in b))
    Path(path).write_text("\n".join(lines) + "\n")


def load_state(path) -> MlpState:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    if head[0] != "mlpstate" or int(head[1]) != FORMAT_VERSION:
        raise ValueError(f"{path}: not a version-{FORMAT_VERSION} MLP state file")
    widths = tuple(int(v) for v in lines[1].split()[1:])
    _, hid, outp = lines[2].split()
    _, drop, epochs, batch, lr, seed, opt = lines[3].split()
    spec = MlpSpec(widths, hid, outp, float(drop), int(epochs), int(batch), float(lr), int(seed), opt)
    trained = bool(int(lines[4].split()[1]))
    ws, bs = [], []
    i = 5
    while i < len(lines):
        _, r, c = lines[i].split()
        r, c = int(r), int(c)
        ws.append(np.array([[float(v) for v in lines[i + 1 + k].split()] for k in range(r)]).reshape(r, c))
        i += 1 + r
        bs.append(np.array([float(v) for v in lines[i + 1].split()]))
        i += 2
    return MlpState(spec, ws, bs, trained)
