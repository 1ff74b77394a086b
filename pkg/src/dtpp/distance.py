"""Distances between parent values.

Any two-argument callable returning a nonnegative float can serve as a
distance.  :func:`default_distance` covers the built-in scalar types, tuples of
distance-equipped values (reduced with the L2 norm), and any object exposing a
``distance(other)`` method.
"""

from __future__ import annotations

import math
from numbers import Real
from typing import Callable, Sequence

import numpy as np

Distance = Callable[[object, object], float]
Reducer = Callable[[Sequence[float]], float]


def l2_norm(components: Sequence[float]) -> float:
    return math.sqrt(sum(d * d for d in components))


def tuple_distance(components: Sequence[float], reducer: Reducer = l2_norm) -> float:
    """Reduce per-component distances to one value."""
    for d in components:
        if d < 0:
            raise ValueError(f"component distance {d} is negative")
    return float(reducer(list(components)))


def bool_distance(a: bool, b: bool) -> float:
    return 0.0 if bool(a) == bool(b) else 1.0


def real_distance(a: float, b: float) -> float:
    return abs(float(a) - float(b))


def default_distance(a, b) -> float:
    if hasattr(a, "distance") and callable(a.distance):
        return float(a.distance(b))
    if isinstance(a, (bool, np.bool_)):
        return bool_distance(a, b)
    if isinstance(a, Real):
        return real_distance(a, b)
    if isinstance(a, tuple):
        if not isinstance(b, tuple) or len(a) != len(b):
            raise TypeError("tuple distance needs tuples of equal length")
        return tuple_distance([default_distance(x, y) for x, y in zip(a, b)])
    raise TypeError(f"no default distance for {type(a).__name__}; pass a distance function")


def tuple_distance_fn(*component_distances: Distance, reducer: Reducer = l2_norm) -> Distance:
    """Build a distance over fixed-arity tuples from per-component distances."""

    def distance(a, b):
        if len(a) != len(component_distances) or len(b) != len(component_distances):
            raise TypeError("tuple arity does not match the component distances")
        return tuple_distance([f(x, y) for f, x, y in zip(component_distances, a, b)], reducer)

    return distance
