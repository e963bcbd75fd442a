"""Planar Filippov systems: branching simulation and topological entropy."""

__version__ = "0.1.0"

from ._backend import backend_name
from .core import (
    DEFAULT_TOL,
    DegenerateDenominator,
    DegeneratePoint,
    PiecewiseSystem,
    PlanarField,
    PointClass,
    SwitchingFunction,
    Tolerances,
    classify_point,
    lie_derivative,
    sliding_field,
)
