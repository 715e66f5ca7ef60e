"""Interpretable two-layer function selection by cross-validated modified Mallows's Cp."""

__version__ = "0.1.0"
