"""Expression trees over inputs, layer slots and parameters.

Trees are built with ordinary arithmetic on :class:`Node` objects::

    z = transform("upper_quantile", X(1)) + transform("upper_quantile", X(2))
    body = P(0) * ((z + P(1)) / X(0)) ** 2

and then bound to a data matrix with :func:`compile_tree`, which folds every
parameter-free subtree into a constant array once. The resulting
:class:`CompiledTree` evaluates a batch of parameter vectors and returns
exact reverse-mode gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .. import statcore

__all__ = [
    "Node",
    "P",
    "X",
    "S",
    "const",
    "transform",
    "TRANSFORMS",
    "CompiledTree",
    "compile_tree",
    "param_indices",
    "substitute",
]


def _upper_quantile(v):
    v = np.asarray(v, dtype=float)
    if np.any((v <= 0) | (v >= 1)):
        raise FloatingPointError("upper_quantile input outside (0, 1)")
    return -statcore.normal_quantile(v)


def _upper_quantile_grad(v, out):
    return -np.exp(0.5 * out * out) * math.sqrt(2.0 * math.pi)


TRANSFORMS: Dict[str, Tuple[Callable, Callable]] = {
    "identity": (lambda v: v, lambda v, out: np.ones_like(v)),
    "square": (lambda v: v * v, lambda v, out: 2.0 * v),
    "cube": (lambda v: v * v * v, lambda v, out: 3.0 * v * v),
    # Z_{1-v}: the upper-v quantile of the standard normal
    "upper_quantile": (_upper_quantile, _upper_quantile_grad),
}


def _wrap(v) -> "Node":
    if isinstance(v, Node):
        return v
    return Node("const", value=float(v))


@dataclass(frozen=True, eq=False)
class Node:
    op: str
    args: Tuple["Node", ...] = ()
    index: int = 0
    value: float = 0.0
    name: str = ""

    def __add__(self, other):
        return Node("add", (self, _wrap(other)))

    def __radd__(self, other):
        return Node("add", (_wrap(other), self))

    def __sub__(self, other):
        return Node("add", (self, Node("neg", (_wrap(other),))))

    def __rsub__(self, other):
        return Node("add", (_wrap(other), Node("neg", (self,))))

    def __mul__(self, other):
        return Node("mul", (self, _wrap(other)))

    def __rmul__(self, other):
        return Node("mul", (_wrap(other), self))

    def __truediv__(self, other):
        return Node("div", (self, _wrap(other)))

    def __rtruediv__(self, other):
        return Node("div", (_wrap(other), self))

    def __neg__(self):
        return Node("neg", (self,))

    def __pow__(self, k):
        if int(k) != k or k < 1:
            raise ValueError("only positive integer powers are supported")
        return Node("pow", (self,), value=float(int(k)))

    def __repr__(self):
        return render(self)


def P(i: int) -> Node:
    """Parameter slot ``i`` (0-based, local to a base function)."""
    return Node("param", index=i)


def X(i: int) -> Node:
    """Input ``i`` of a base function."""
    return Node("input", index=i)


def S(j: int) -> Node:
    """First-layer slot ``j``: the output of the j-th second-layer function."""
    return Node("slot", index=j)


def const(v: float) -> Node:
    return Node("const", value=float(v))


def transform(name: str, arg: Node) -> Node:
    if name not in TRANSFORMS:
        raise KeyError(f"unknown transform {name!r}")
    return Node("transform", (arg,), name=name)


def _postorder(root: Node) -> List[Node]:
    seen = set()
    order: List[Node] = []
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            order.append(node)
        else:
            stack.append((node, True))
            for a in reversed(node.args):
                if id(a) not in seen:
                    stack.append((a, False))
    return order


def param_indices(root: Node) -> List[int]:
    """Sorted distinct parameter indices appearing in ``root``."""
    return sorted({n.index for n in _postorder(root) if n.op == "param"})


def node_kinds(root: Node, op: str) -> List[Node]:
    return [n for n in _postorder(root) if n.op == op]


def substitute(root: Node, fn: Callable[[Node], Node | None]) -> Node:
    """Rebuild ``root`` bottom-up, replacing leaves for which ``fn`` returns a node.

    Shared subtrees stay shared in the result.
    """
    memo: Dict[int, Node] = {}
    for node in _postorder(root):
        repl = fn(node) if not node.args else None
        if repl is not None:
            memo[id(node)] = repl
        elif node.args:
            new_args = tuple(memo[id(a)] for a in node.args)
            if all(x is y for x, y in zip(new_args, node.args)):
                memo[id(node)] = node
            else:
                memo[id(node)] = Node(node.op, new_args, node.index, node.value, node.name)
        else:
            memo[id(node)] = node
    return memo[id(root)]


_INFIX = {"add": " + ", "mul": "*", "div": "/"}


def render(node: Node, inputs: Sequence[str] | None = None, slots: Sequence[str] | None = None,
           theta=None) -> str:
    """Human-readable rendering of a tree.

    With ``theta`` given, parameters print as their values (6 significant
    digits) instead of ``t1..tP``.
    """

    def go(n: Node) -> str:
        if n.op == "param":
            if theta is None:
                return f"t{n.index + 1}"
            v = float(theta[n.index])
            return f"({v:.6g})" if v < 0 else f"{v:.6g}"
        if n.op == "input":
            return inputs[n.index] if inputs else f"x{n.index + 1}"
        if n.op == "slot":
            return slots[n.index] if slots else f"s{n.index + 1}"
        if n.op == "const":
            return repr(n.value) if n.value != int(n.value) else str(int(n.value))
        if n.op == "neg":
            return f"-{go(n.args[0])}"
        if n.op == "pow":
            return f"({go(n.args[0])})^{int(n.value)}"
        if n.op == "transform":
            return f"{n.name}({go(n.args[0])})"
        a, b = n.args
        s = f"{go(a)}{_INFIX[n.op]}{go(b)}"
        return f"({s})" if n.op == "add" else s

    return go(node)


# ---------------------------------------------------------------------------
# Compilation and reverse-mode differentiation
# ---------------------------------------------------------------------------


class CompiledTree:
    """A tree bound to a fixed data matrix.

    ``forward(theta)`` accepts ``theta`` of shape ``(P,)`` or ``(R, P)`` and
    returns outputs of shape ``(N,)`` or ``(R, N)``. ``backward(upstream)``
    must follow a forward call and returns d(sum(upstream * out))/d(theta)
    with the same leading shape as ``theta``.
    """

    def __init__(self, root: Node, data: np.ndarray, n_params: int):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2:
            raise ValueError("data must be a 2-D array (rows, inputs)")
        self.n_rows = data.shape[0]
        self.n_params = n_params
        order = _postorder(root)
        pos = {id(n): i for i, n in enumerate(order)}
        depends = [False] * len(order)
        consts: Dict[int, np.ndarray] = {}
        tape = []
        with np.errstate(all="ignore"):
            for i, n in enumerate(order):
                kids = [pos[id(a)] for a in n.args]
                if n.op == "param":
                    if n.index >= n_params:
                        raise ValueError("parameter index out of range")
                    depends[i] = True
                elif n.op == "slot":
                    raise ValueError("cannot compile a tree with unresolved slots")
                elif any(depends[k] for k in kids):
                    depends[i] = True
                if depends[i]:
                    tape.append((i, n, kids))
                else:
                    consts[i] = _eval_const(n, [consts[k] for k in kids], data)
        self._order = order
        self._consts = consts
        self._tape = tape
        self._root = pos[id(root)]
        self._depends = depends
        self._vals: Dict[int, np.ndarray] | None = None
        self._theta_shape = None

    def forward(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        batched = theta.ndim == 2
        th = theta if batched else theta[None, :]
        vals: Dict[int, np.ndarray] = dict(self._consts)
        for i, n, kids in self._tape:
            op = n.op
            if op == "param":
                vals[i] = th[:, n.index][:, None]
            elif op == "add":
                vals[i] = vals[kids[0]] + vals[kids[1]]
            elif op == "mul":
                vals[i] = vals[kids[0]] * vals[kids[1]]
            elif op == "div":
                vals[i] = vals[kids[0]] / vals[kids[1]]
            elif op == "neg":
                vals[i] = -vals[kids[0]]
            elif op == "pow":
                vals[i] = vals[kids[0]] ** int(n.value)
            elif op == "transform":
                vals[i] = TRANSFORMS[n.name][0](vals[kids[0]])
            else:  # pragma: no cover
                raise ValueError(f"unknown op {op}")
        self._vals = vals
        self._theta_shape = theta.shape
        out = vals[self._root]
        out = np.broadcast_to(out, (th.shape[0], self.n_rows))
        return out if batched else out[0]

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        if self._vals is None:
            raise RuntimeError("backward() called before forward()")
        vals = self._vals
        up = np.asarray(upstream, dtype=float)
        if up.ndim == 1:
            up = up[None, :]
        n_batch = up.shape[0]
        grad = np.zeros((n_batch, self.n_params))
        if not self._depends[self._root]:
            return grad if len(self._theta_shape) == 2 else grad[0]
        adj: Dict[int, np.ndarray] = {self._root: up}

        def acc(k, g):
            if not self._depends[k]:
                return
            if k in adj:
                adj[k] = adj[k] + g
            else:
                adj[k] = g

        for i, n, kids in reversed(self._tape):
            g = adj.pop(i, None)
            if g is None:
                continue
            op = n.op
            if op == "param":
                # parameter values broadcast across rows; reduce back
                grad[:, n.index] += np.sum(g, axis=-1)
            elif op == "add":
                acc(kids[0], g)
                acc(kids[1], g)
            elif op == "mul":
                a, b = vals[kids[0]], vals[kids[1]]
                acc(kids[0], g * b)
                acc(kids[1], g * a)
            elif op == "div":
                a, b = vals[kids[0]], vals[kids[1]]
                acc(kids[0], g / b)
                acc(kids[1], -g * vals[i] / b)
            elif op == "neg":
                acc(kids[0], -g)
            elif op == "pow":
                k = int(n.value)
                base = vals[kids[0]]
                acc(kids[0], g * k * base ** (k - 1))
            elif op == "transform":
                acc(kids[0], g * TRANSFORMS[n.name][1](vals[kids[0]], vals[i]))
        return grad if len(self._theta_shape) == 2 else grad[0]


def _eval_const(n: Node, args: List[np.ndarray], data: np.ndarray) -> np.ndarray:
    op = n.op
    if op == "input":
        if n.index >= data.shape[1]:
            raise ValueError(f"input index {n.index} out of range for {data.shape[1]} columns")
        return data[:, n.index][None, :]
    if op == "const":
        return np.full((1, 1), n.value)
    if op == "add":
        return args[0] + args[1]
    if op == "mul":
        return args[0] * args[1]
    if op == "div":
        return args[0] / args[1]
    if op == "neg":
        return -args[0]
    if op == "pow":
        return args[0] ** int(n.value)
    if op == "transform":
        return TRANSFORMS[n.name][0](args[0])
    raise ValueError(f"unknown op {op}")


def compile_tree(root: Node, data: np.ndarray, n_params: int) -> CompiledTree:
    return CompiledTree(root, data, n_params)
