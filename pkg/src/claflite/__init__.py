"""claflite: a small toolchain for Clafer-style structural and behavioural models."""
from __future__ import annotations

from typing import Optional

__version__ = "0.1.0"


def load_model(text: str):
    """Parse, apply defaults and elaborate ``text`` into a core model."""
    from .core import elaborate
    from .parser import parse_model
    from .source import apply_defaults
    return elaborate(apply_defaults(parse_model(text)))


def compile_model(text: str, lift_levels: Optional[int] = None):
    """The desugared (and by default fully lifted) core model of ``text``."""
    from .desugar import desugar_model
    return desugar_model(load_model(text), lift_levels)


def compile_goal(cm, text: str):
    """A top-level goal formula in core form, resolved against ``cm``."""
    from .core import resolve_formula
    from .desugar import desugar_goal
    from .parser import parse_constraint
    return desugar_goal(cm, resolve_formula(cm, parse_constraint(text)))
