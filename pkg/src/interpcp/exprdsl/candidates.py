"""Base functions, two-layer candidate models and their enumeration."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .nodes import CompiledTree, Node, X, node_kinds, param_indices, render, substitute

__all__ = [
    "EvaluationError",
    "BaseFunction",
    "CandidateModel",
    "ComplexityMeasure",
    "LINKS",
    "evaluate",
    "gradient",
    "complexity",
    "display_round",
    "enumerate_candidates",
]

LINKS = ("identity", "sigmoid", "softmax_pair")


class EvaluationError(ValueError):
    """A base function produced a non-finite value on the given inputs."""

    def __init__(self, function_id: str, message: str = ""):
        self.function_id = function_id
        super().__init__(f"{function_id}: {message or 'non-finite output (input outside domain)'}")


@dataclass(frozen=True, eq=False)
class BaseFunction:
    """One parametric building block.

    Second-layer functions read inputs ``X(i)``; first-layer functions
    read the second-layer outputs through slots ``S(j)``. Parameters are
    ``P(0) .. P(param_count - 1)``.
    """

    id: str
    body: Node
    arity: int
    label: str = ""

    def __post_init__(self):
        idx = param_indices(self.body)
        if idx != list(range(len(idx))):
            raise ValueError(f"{self.id}: parameter slots must be contiguous from 0, got {idx}")

    @cached_property
    def param_count(self) -> int:
        return len(param_indices(self.body))

    @cached_property
    def feature_transforms(self) -> tuple:
        return tuple(sorted({n.name for n in node_kinds(self.body, "transform")}))

    @cached_property
    def reads_slots(self) -> bool:
        return bool(node_kinds(self.body, "slot"))

    def as_input_function(self) -> Node:
        """Body with slots rewritten as inputs, for standalone evaluation."""
        return substitute(self.body, lambda n: X(n.index) if n.op == "slot" else None)

    def __call__(self, inputs: np.ndarray, theta) -> np.ndarray:
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        tree = CompiledTree(self.as_input_function(), inputs, self.param_count)
        with np.errstate(all="ignore"):
            out = tree.forward(np.asarray(theta, dtype=float).reshape(self.param_count))
        return np.array(out)

    def render(self, inputs: Sequence[str] | None = None) -> str:
        return render(self.body, inputs=inputs)


@dataclass(frozen=True)
class ComplexityMeasure:
    kind: str
    value: float

    @property
    def display(self) -> int:
        return display_round(self.value)


def display_round(v: float) -> int:
    """Round half away from zero for non-negative display values."""
    return int(math.floor(v + 0.5))


@dataclass(frozen=True, eq=False)
class CandidateModel:
    model_id: int
    first_layer: BaseFunction
    second_layer: tuple
    covariate_subset: tuple
    theta: np.ndarray | None = None
    output_link: str = "identity"
    covariate_names: tuple = field(default=())

    def __post_init__(self):
        if len(self.second_layer) < 1:
            raise ValueError("need at least one second-layer function")
        if self.output_link not in LINKS:
            raise ValueError(f"unknown output link {self.output_link!r}")
        for f in self.second_layer:
            if f.arity != len(self.covariate_subset):
                raise ValueError(
                    f"{f.id} takes {f.arity} inputs but the covariate subset has {len(self.covariate_subset)}"
                )
        if self.theta is not None:
            th = np.asarray(self.theta, dtype=float)
            if th.shape != (self.param_count,):
                raise ValueError(f"theta must have length {self.param_count}")
            object.__setattr__(self, "theta", th)

    @property
    def J(self) -> int:
        return len(self.second_layer)

    @property
    def layer_count(self) -> int:
        return 2

    @cached_property
    def param_count(self) -> int:
        return self.first_layer.param_count + sum(f.param_count for f in self.second_layer)

    @cached_property
    def param_slices(self) -> list:
        """Slices of the flat theta: first layer, then each second-layer function."""
        out = [slice(0, self.first_layer.param_count)]
        start = self.first_layer.param_count
        for f in self.second_layer:
            out.append(slice(start, start + f.param_count))
            start += f.param_count
        return out

    @property
    def output_dim(self) -> int:
        return 2 if self.output_link == "softmax_pair" else 1

    @cached_property
    def form(self) -> str:
        inner = ", ".join(f.label or f.id for f in self.second_layer)
        s = f"{self.first_layer.label or self.first_layer.id}{{{inner}}}"
        if self.covariate_names:
            s += "[" + ", ".join(self.covariate_names) + "]"
        return s

    @cached_property
    def composed_body(self) -> Node:
        """Whole-model tree in terms of columns of the full input matrix."""
        subs = []
        for f, sl in zip(self.second_layer, self.param_slices[1:]):
            off = sl.start
            cov = self.covariate_subset

            def leaf(n, off=off, cov=cov):
                if n.op == "param":
                    return Node("param", index=n.index + off)
                if n.op == "input":
                    return Node("input", index=cov[n.index])
                return None

            subs.append(substitute(f.body, leaf))
        return substitute(self.first_layer.body, lambda n: subs[n.index] if n.op == "slot" else None)

    def with_theta(self, theta) -> "CandidateModel":
        return replace(self, theta=np.asarray(theta, dtype=float))

    def compile(self, data: np.ndarray) -> CompiledTree:
        return CompiledTree(self.composed_body, data, self.param_count)

    def predict(self, data: np.ndarray, theta=None) -> np.ndarray:
        """Model outputs for every row: shape (N,) or (N, 2) for the pair head."""
        out = evaluate(self, np.atleast_2d(data), theta)
        return out[:, 0] if self.output_dim == 1 else out

    def render(self, feature_names: Sequence[str] | None = None, symbolic: bool = False) -> str:
        """Whole-model formula.

        Fitted parameters are substituted when ``theta`` is set, unless
        ``symbolic`` is true; ``t1..tP`` index the flat theta otherwise.
        """
        th = None if symbolic or self.theta is None else self.theta
        return render(self.composed_body, inputs=feature_names, theta=th)


def apply_link(link: str, yp: np.ndarray) -> np.ndarray:
    """Apply an output link; returns shape (..., 1) or (..., 2)."""
    if link == "identity":
        return yp[..., None]
    s = 0.5 * (1.0 + np.tanh(0.5 * yp))
    if link == "sigmoid":
        return s[..., None]
    return np.stack([1.0 - s, s], axis=-1)


def link_backward(link: str, yp: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Pull an upstream gradient on the link output back to the raw output."""
    if link == "identity":
        return upstream[..., 0]
    s = 0.5 * (1.0 + np.tanh(0.5 * yp))
    ds = s * (1.0 - s)
    if link == "sigmoid":
        return upstream[..., 0] * ds
    return (upstream[..., 1] - upstream[..., 0]) * ds


def _theta_of(model: CandidateModel, theta) -> np.ndarray:
    th = model.theta if theta is None else np.asarray(theta, dtype=float)
    if th is None:
        raise ValueError(f"model {model.model_id} has no parameters set")
    if th.shape != (model.param_count,):
        raise ValueError(f"theta must have length {model.param_count}")
    return th


def layer_outputs(model: CandidateModel, data: np.ndarray, theta=None) -> np.ndarray:
    """Second-layer outputs x_{1,j} for each row, shape (N, J)."""
    th = _theta_of(model, theta)
    data = np.atleast_2d(np.asarray(data, dtype=float))
    sub = data[:, list(model.covariate_subset)]
    cols = []
    for f, sl in zip(model.second_layer, model.param_slices[1:]):
        try:
            with np.errstate(all="ignore"):
                v = f(sub, th[sl])
        except FloatingPointError as e:
            raise EvaluationError(f.id, str(e)) from None
        if not np.all(np.isfinite(v)):
            raise EvaluationError(f.id)
        cols.append(v)
    return np.column_stack(cols)


def first_layer_output(model: CandidateModel, x1: np.ndarray, theta=None) -> np.ndarray:
    """Raw first-layer output y' (before the link) for slot values ``x1``."""
    th = _theta_of(model, theta)
    with np.errstate(all="ignore"):
        yp = model.first_layer(np.atleast_2d(x1), th[model.param_slices[0]])
    if not np.all(np.isfinite(yp)):
        raise EvaluationError(model.first_layer.id)
    return yp


def evaluate(model: CandidateModel, x, theta=None) -> np.ndarray:
    """Evaluate a candidate on one input vector or a matrix of rows.

    A 1-D ``x`` gives a vector of length 1 (regression heads) or 2
    (pair head); a 2-D ``x`` gives an array with one such row per input.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x1 = layer_outputs(model, np.atleast_2d(x), theta)
    yp = first_layer_output(model, x1, theta)
    out = apply_link(model.output_link, yp)
    return out[0] if single else out


def gradient(model: CandidateModel, x, upstream, theta=None) -> np.ndarray:
    """Derivative of ``sum(evaluate(model, x) * upstream)`` with respect to theta."""
    th = _theta_of(model, theta)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    up = np.asarray(upstream, dtype=float).reshape(x.shape[0], model.output_dim)
    evaluate(model, x, th)  # domain check with function ids
    tree = model.compile(x)
    with np.errstate(all="ignore"):
        yp = tree.forward(th)
        return tree.backward(link_backward(model.output_link, yp, up))


def complexity(model, kind: str = "total_params") -> ComplexityMeasure:
    """Total parameter count or average parameters per layer.

    Works for anything exposing ``param_count`` and ``layer_count``, which
    covers candidate models and MLP specs.
    """
    total = model.param_count
    if kind == "total_params":
        return ComplexityMeasure(kind, float(total))
    if kind == "avg_params_per_layer":
        return ComplexityMeasure(kind, total / model.layer_count)
    raise ValueError(f"unknown complexity kind {kind!r}")


def enumerate_candidates(
    f1_set: Sequence[BaseFunction],
    f2_set: Sequence[BaseFunction],
    J: int = 2,
    covariate_pool: Sequence[int] | None = None,
    subset_size: int | str = "all",
    mode: str = "distinct_pairs",
    pairs: Iterable[Sequence[int]] | None = None,
    output_link: str = "identity",
    feature_names: Sequence[str] | None = None,
) -> list:
    """Cartesian product of first-layer forms, second-layer tuples and covariate subsets.

    ``mode="distinct_pairs"`` uses every combination of ``J`` distinct
    second-layer forms in index order; ``mode="listed_explicitly"`` takes
    the tuples of ``f2_set`` indices given in ``pairs``. Ordering is
    first-layer major, then second-layer tuple, then covariate subset.
    """
    if not f1_set or not f2_set:
        raise ValueError("base-function sets must be nonempty")
    if mode == "distinct_pairs":
        combos = list(itertools.combinations(range(len(f2_set)), J))
    elif mode == "listed_explicitly":
        if pairs is None:
            raise ValueError("listed_explicitly mode needs explicit pairs")
        combos = [tuple(p) for p in pairs]
        if any(len(p) != J for p in combos):
            raise ValueError(f"every listed tuple must have {J} entries")
    else:
        raise ValueError(f"unknown enumeration mode {mode!r}")
    if covariate_pool is None:
        covariate_pool = range(f2_set[0].arity)
    pool = tuple(covariate_pool)
    if subset_size == "all":
        subsets = [pool]
    else:
        if int(subset_size) > len(pool) or int(subset_size) < 1:
            raise ValueError(f"subset size {subset_size} invalid for a pool of {len(pool)}")
        subsets = list(itertools.combinations(pool, int(subset_size)))
    for f in f1_set:
        if f.arity != J:
            raise ValueError(f"{f.id} has {f.arity} slots but J = {J}")

    out = []
    model_id = 1
    for f1 in f1_set:
        for combo in combos:
            for sub in subsets:
                names = tuple(feature_names[i] for i in sub) if (feature_names and subset_size != "all") else ()
                out.append(
                    CandidateModel(
                        model_id=model_id,
                        first_layer=f1,
                        second_layer=tuple(f2_set[i] for i in combo),
                        covariate_subset=tuple(sub),
                        output_link=output_link,
                        covariate_names=names,
                    )
                )
                model_id += 1
    return out
