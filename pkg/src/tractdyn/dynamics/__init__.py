"""Orbits, fixed points, escape classification, rendering and outer sequences."""
from .orbits import (
    Classification,
    DerivativeBoundResult,
    FastEscapeResult,
    FixedPointInfo,
    IterationParams,
    OrbitRecord,
    attractors_for,
    classify_points,
    derivative_bound_check,
    fast_escape_test,
    find_fixed_points,
    iterate,
    search_fast_escape_seed,
)

__all__ = [
    "Classification", "DerivativeBoundResult", "FastEscapeResult", "FixedPointInfo",
    "IterationParams", "OrbitRecord", "attractors_for", "classify_points",
    "derivative_bound_check", "fast_escape_test", "find_fixed_points", "iterate",
    "search_fast_escape_seed",
]
