"""
State Module

State vectors, edges and paths with the Euclidean metric used by every planner.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class DimensionError(ValueError):
    """Raised when two states (or a state and a world) disagree on dimension."""
    pass


class InterpolationRangeError(ValueError):
    """Raised when an interpolation fraction lies outside [0, 1]."""
    pass


class MalformedPathError(ValueError):
    """Raised when a path has fewer than two waypoints."""
    pass


@dataclass(frozen=True)
class StateVector:
    """A point in the planning space X ⊆ R^n."""

    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.coords) == 0:
            raise DimensionError("State vectors need at least one coordinate")
        if not all(math.isfinite(c) for c in self.coords):
            raise ValueError(f"Non-finite coordinate in {self.coords}")

    @classmethod
    def of(cls, values: Iterable[float]) -> "StateVector":
        """Build a state from any iterable of numbers (lists, tuples, numpy arrays)."""
        return cls(tuple(float(v) for v in values))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def array(self) -> np.ndarray:
        """Coordinates as a fresh float64 numpy array."""
        return np.array(self.coords, dtype=np.float64)

    def __getitem__(self, index: int) -> float:
        return self.coords[index]

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __str__(self) -> str:
        return "(" + ", ".join(f"{c:.4g}" for c in self.coords) + ")"


@dataclass(frozen=True)
class Edge:
    """A directed connection from a source state to a target state."""

    source: StateVector
    target: StateVector

    def __post_init__(self) -> None:
        _check_dims(self.source, self.target)

    @property
    def length(self) -> float:
        return distance(self.source, self.target)


@dataclass(frozen=True)
class Path:
    """An ordered list of waypoints; totalCost is derived from them."""

    waypoints: tuple[StateVector, ...]
    total_cost: float = field(init=False)

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise MalformedPathError(
                f"A path needs at least 2 waypoints, got {len(self.waypoints)}"
            )
        object.__setattr__(self, "total_cost", path_cost_of(self.waypoints))

    @classmethod
    def of(cls, waypoints: Iterable[Sequence[float] | StateVector]) -> "Path":
        """Build a path from states or raw coordinate sequences."""
        states = tuple(
            w if isinstance(w, StateVector) else StateVector.of(w) for w in waypoints
        )
        return cls(states)

    @property
    def start(self) -> StateVector:
        return self.waypoints[0]

    @property
    def end(self) -> StateVector:
        return self.waypoints[-1]

    def edges(self) -> list[Edge]:
        """Consecutive waypoint pairs as edges."""
        return [Edge(a, b) for a, b in zip(self.waypoints, self.waypoints[1:])]

    def concat(self, other: "Path") -> "Path":
        """Join two paths that share the connecting waypoint."""
        if self.end != other.start:
            raise MalformedPathError("Paths do not share the joining waypoint")
        return Path(self.waypoints + other.waypoints[1:])

    def as_array(self) -> np.ndarray:
        return np.array([w.coords for w in self.waypoints], dtype=np.float64)


def _check_dims(a: StateVector, b: StateVector) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"Dimension mismatch: {a.dim} vs {b.dim}")


def distance(a: StateVector, b: StateVector) -> float:
    """
    Euclidean distance between two states.

    Args:
        a: First state
        b: Second state

    Returns:
        ‖a − b‖₂

    Raises:
        DimensionError: If the states have different dimensions
    """
    _check_dims(a, b)
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a.coords, b.coords)))


def interpolate(a: StateVector, b: StateVector, t: float) -> StateVector:
    """
    Linear interpolation a + t(b − a).

    The endpoints are returned as-is for t == 0 and t == 1 so that states taken at
    the ends of an edge are bit-identical to its endpoints.

    Raises:
        InterpolationRangeError: If t is outside [0, 1]
        DimensionError: If the states have different dimensions
    """
    _check_dims(a, b)
    if not 0.0 <= t <= 1.0:
        raise InterpolationRangeError(f"Interpolation fraction {t} outside [0, 1]")
    if t == 0.0:
        return a
    if t == 1.0:
        return b
    return StateVector(tuple(_lerp(x, y, t) for x, y in zip(a.coords, b.coords)))


def _lerp(x: float, y: float, t: float) -> float:
    # rounding can overshoot an endpoint by an ulp
    v = x + t * (y - x)
    return min(max(v, min(x, y)), max(x, y))


def path_cost_of(waypoints: Sequence[StateVector]) -> float:
    if len(waypoints) < 2:
        raise MalformedPathError(f"A path needs at least 2 waypoints, got {len(waypoints)}")
    return sum(distance(a, b) for a, b in zip(waypoints, waypoints[1:]))


def path_cost(p: Path) -> float:
    """
    Sum of consecutive segment lengths of a path.

    Args:
        p: Path with at least two waypoints

    Returns:
        Total Euclidean length
    """
    return path_cost_of(p.waypoints)
