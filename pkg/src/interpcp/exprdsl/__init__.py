"""Two-layer interpretable function skeleton."""

from . import library
from .candidates import (
    LINKS,
    BaseFunction,
    CandidateModel,
    ComplexityMeasure,
    EvaluationError,
    apply_link,
    complexity,
    display_round,
    enumerate_candidates,
    evaluate,
    first_layer_output,
    gradient,
    layer_outputs,
    link_backward,
)
from .nodes import CompiledTree, Node, P, S, X, compile_tree, const, transform

__all__ = [
    "library",
    "LINKS",
    "BaseFunction",
    "CandidateModel",
    "ComplexityMeasure",
    "EvaluationError",
    "apply_link",
    "complexity",
    "display_round",
    "enumerate_candidates",
    "evaluate",
    "first_layer_output",
    "gradient",
    "layer_outputs",
    "link_backward",
    "CompiledTree",
    "Node",
    "P",
    "S",
    "X",
    "compile_tree",
    "const",
    "transform",
]
