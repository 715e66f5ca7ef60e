"""Named built-in base-function families.

Names follow ``<study>.<layer>.<index>``; for example ``sim1.f2.3`` is the
third second-layer form of the sample-size study.
"""

from __future__ import annotations

from typing import Dict, List

from .candidates import BaseFunction
from .nodes import P, S, X, transform

__all__ = ["REGISTRY", "get", "family", "STUDY_LINKS"]


def _zsum(i_alpha: int = 1, i_beta: int = 2):
    return transform("upper_quantile", X(i_alpha)), transform("upper_quantile", X(i_beta))


def _sim1() -> List[BaseFunction]:
    za, zb = _zsum()
    mu0 = X(0)
    return [
        BaseFunction("sim1.f1.1", P(0) * (S(0) ** 2 + S(1) ** 2), 2, "f1^(1)"),
        BaseFunction("sim1.f1.2", P(0) * S(0) + P(1) * S(1), 2, "f1^(2)"),
        BaseFunction("sim1.f1.3", P(0) * S(0) + P(1) * S(1) + P(2), 2, "f1^(3)"),
        BaseFunction("sim1.f2.1", ((za + zb) / mu0) ** 2 + P(0), 3, "f2^(1)"),
        BaseFunction("sim1.f2.2", P(0) * ((za + zb + P(1)) / mu0) ** 2, 3, "f2^(2)"),
        BaseFunction("sim1.f2.3", P(0) * ((za + zb + P(1)) / mu0 + P(2)) ** 2, 3, "f2^(3)"),
        BaseFunction("sim1.f2.4", ((P(0) * za + P(1) * zb) / mu0 + P(2)) ** 2 + P(3), 3, "f2^(4)"),
    ]


def _sim2() -> List[BaseFunction]:
    x1, x2, x3 = X(0), X(1), X(2)
    return [
        BaseFunction("sim2.f2.1", P(0) * (x1 ** 2 + x2 ** 2 + x3 ** 2), 3, "f2^(1)"),
        BaseFunction("sim2.f2.2", P(0) * (x1 + x2 + x3) + P(1), 3, "f2^(2)"),
        BaseFunction("sim2.f2.3", P(0) * x1 + P(1) * x2 + P(2) * x3, 3, "f2^(3)"),
        BaseFunction("sim2.f2.4", P(0) * x1 + P(1) * x2 + P(2) * x3 + P(3), 3, "f2^(4)"),
    ]


def _sim3() -> List[BaseFunction]:
    q1, q2, n = X(0), X(1), X(2)
    return [
        # raw linear predictor; the pair head supplies the sigmoid kernel
        BaseFunction("sim3.f1.1", P(0) * S(0) + P(0) * S(1), 2, "f1^(1)"),
        BaseFunction("sim3.f1.2", P(0) * S(0) + P(1) * S(1), 2, "f1^(2)"),
        BaseFunction("sim3.f1.3", P(0) * S(0) + P(1) * S(1) + P(2), 2, "f1^(3)"),
        BaseFunction("sim3.f2.1", (P(0) * q1 + P(0) * q2) / n, 3, "f2^(1)"),
        BaseFunction("sim3.f2.2", (P(0) * q1 + P(1) * q2) / n, 3, "f2^(2)"),
        BaseFunction("sim3.f2.3", (P(0) * q1 + P(1) * q2) / (n + P(2)), 3, "f2^(3)"),
    ]


def _nhanes() -> List[BaseFunction]:
    z1, z2 = X(0), X(1)
    return [
        BaseFunction("nhanes.f1.1", P(0) * (S(0) + S(1)) ** 2, 2, "f1^(1)"),
        BaseFunction("nhanes.f1.2", P(0) * S(0) ** 3 + P(1) * S(1) ** 3, 2, "f1^(2)"),
        BaseFunction("nhanes.f1.3", P(0) * S(0) + P(1) * S(1) + P(2), 2, "f1^(3)"),
        BaseFunction("nhanes.f2.1", P(0) * (z1 + z2) ** 2, 2, "f2^(1)"),
        BaseFunction("nhanes.f2.2", P(0) * z1 ** 3 + P(1) * z2 ** 3, 2, "f2^(2)"),
        BaseFunction("nhanes.f2.3", P(0) * z1 + P(1) * z2 + P(2), 2, "f2^(3)"),
    ]


def _example1() -> List[BaseFunction]:
    a, b = X(0), X(1)
    return [
        BaseFunction("example1.f1.1", (S(0) + S(1)) ** 2, 2, "(x11 + x12)^2"),
        BaseFunction("example1.f2.a2", P(0) * a ** 2, 2, "t*a^2"),
        BaseFunction("example1.f2.a3", P(0) * a ** 3, 2, "t*a^3"),
        BaseFunction("example1.f2.b2", P(0) * b ** 2, 2, "t*b^2"),
        BaseFunction("example1.f2.b3", P(0) * b ** 3, 2, "t*b^3"),
    ]


REGISTRY: Dict[str, BaseFunction] = {
    f.id: f for group in (_sim1(), _sim2(), _sim3(), _nhanes(), _example1()) for f in group
}

# second-layer pairs of the introductory (a, b) example, as listed
EXAMPLE1_PAIRS = [(0, 3), (0, 2), (1, 2), (1, 3), (0, 1), (2, 3)]

STUDY_LINKS = {"sim1": "identity", "sim2": "identity", "sim3": "softmax_pair", "tabular": "identity"}


def get(name: str) -> BaseFunction:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown base function {name!r}") from None


def family(prefix: str) -> List[BaseFunction]:
    """All functions whose id starts with ``prefix.``, in index order."""
    out = [f for k, f in REGISTRY.items() if k.startswith(prefix + ".")]
    if not out:
        raise KeyError(f"unknown base-function family {prefix!r}")
    return out
