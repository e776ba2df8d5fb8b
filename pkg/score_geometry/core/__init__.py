"""Core infrastructure for score-geometry."""

from .families import FamilyRegistry, NetworkFamily, draw_normal
from .params import ParamSet, zeros_like
from .registry import FunctionRegistry

__all__ = [
    "FunctionRegistry",
    "FamilyRegistry",
    "NetworkFamily",
    "ParamSet",
    "draw_normal",
    "zeros_like",
]
