"""
World Module

Axis-aligned obstacle worlds, the Narrow Passage and Random Rectangles scenario
generators, validity checking and the scenario JSON format.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Any, Callable, Optional

import numpy as np

from jitstar.core.state import DimensionError, StateVector

logger = logging.getLogger(__name__)

WALL_THICKNESS = 0.1
RR_SIDE_RANGE = (0.02, 0.15)
RR_MAX_RETRIES = 1000
# fraction of the domain diagonal
DEFAULT_RESOLUTION_FRACTION = 0.01


class ScenarioConfigError(ValueError):
    """Raised when a scenario cannot be generated or loaded."""
    pass


@dataclass(frozen=True)
class HyperRect:
    """Closed axis-aligned box [lower, upper]."""

    lower: StateVector
    upper: StateVector

    def __post_init__(self) -> None:
        if self.lower.dim != self.upper.dim:
            raise DimensionError(
                f"Box corners disagree on dimension: {self.lower.dim} vs {self.upper.dim}"
            )
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ScenarioConfigError(f"Box lower corner exceeds upper corner: {self}")

    @classmethod
    def of(cls, lower, upper) -> "HyperRect":
        return cls(StateVector.of(lower), StateVector.of(upper))

    @property
    def dim(self) -> int:
        return self.lower.dim

    @property
    def extent(self) -> np.ndarray:
        return self.upper.array - self.lower.array

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower.array) and np.all(x <= self.upper.array))

    def intersects(self, other: "HyperRect") -> bool:
        return bool(
            np.all(self.lower.array <= other.upper.array)
            and np.all(other.lower.array <= self.upper.array)
        )

    def to_dict(self) -> dict[str, list[float]]:
        return {"lower": list(self.lower.coords), "upper": list(self.upper.coords)}


@dataclass(frozen=True)
class ObstacleWorld:
    """
    Planning domain with closed box obstacles.

    A state is valid when it lies inside ``bounds`` and outside every obstacle
    (obstacle boundaries collide). Edges are checked at ``check_resolution`` spacing.
    """

    bounds: HyperRect
    obstacles: tuple[HyperRect, ...] = ()
    check_resolution: float = 0.0
    _lo: np.ndarray = field(init=False, repr=False, compare=False)
    _hi: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = self.bounds.dim
        for box in self.obstacles:
            if box.dim != n:
                raise DimensionError(f"Obstacle of dimension {box.dim} in a {n}-D world")
            if not box.intersects(self.bounds):
                raise ScenarioConfigError(f"Obstacle {box.to_dict()} lies outside the bounds")
        if self.check_resolution == 0.0:
            diagonal = float(np.linalg.norm(self.bounds.extent))
            object.__setattr__(self, "check_resolution", DEFAULT_RESOLUTION_FRACTION * diagonal)
        if not self.check_resolution > 0.0:
            raise ScenarioConfigError(
                f"check_resolution must be positive, got {self.check_resolution}"
            )
        if self.obstacles:
            lo = np.array([b.lower.coords for b in self.obstacles], dtype=np.float64)
            hi = np.array([b.upper.coords for b in self.obstacles], dtype=np.float64)
        else:
            lo = np.empty((0, n))
            hi = np.empty((0, n))
        object.__setattr__(self, "_lo", lo)
        object.__setattr__(self, "_hi", hi)

    @property
    def dim(self) -> int:
        return self.bounds.dim

    @property
    def lower(self) -> np.ndarray:
        return self.bounds.lower.array

    @property
    def upper(self) -> np.ndarray:
        return self.bounds.upper.array

    def valid_mask(self, points: np.ndarray) -> np.ndarray:
        """Vectorised validity of an (m, n) array of points."""
        points = np.atleast_2d(points)
        if points.shape[1] != self.dim:
            raise DimensionError(f"Points of dimension {points.shape[1]} in a {self.dim}-D world")
        inside = np.all((points >= self.lower) & (points <= self.upper), axis=1)
        if len(self._lo) == 0:
            return inside
        hit = np.all(
            (points[:, None, :] >= self._lo[None, :, :])
            & (points[:, None, :] <= self._hi[None, :, :]),
            axis=2,
        )
        return inside & ~np.any(hit, axis=1)

    def state_valid(self, x: np.ndarray) -> bool:
        return bool(self.valid_mask(x)[0])

    def edge_valid(self, a: np.ndarray, b: np.ndarray) -> bool:
        return bool(np.all(self.valid_mask(edge_points(a, b, self.check_resolution))))

    def to_dict(self) -> dict[str, Any]:
        return {
            "dim": self.dim,
            "bounds": self.bounds.to_dict(),
            "obstacles": [box.to_dict() for box in self.obstacles],
            "check_resolution": self.check_resolution,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ObstacleWorld":
        try:
            bounds = HyperRect.of(data["bounds"]["lower"], data["bounds"]["upper"])
            obstacles = tuple(
                HyperRect.of(box["lower"], box["upper"]) for box in data.get("obstacles", [])
            )
            world = cls(bounds, obstacles, float(data.get("check_resolution", 0.0)))
        except (KeyError, TypeError) as e:
            raise ScenarioConfigError(f"Malformed world description: {e}") from e
        if "dim" in data and int(data["dim"]) != world.dim:
            raise ScenarioConfigError(
                f"Declared dim {data['dim']} does not match bounds dimension {world.dim}"
            )
        return world


def edge_points(a: np.ndarray, b: np.ndarray, resolution: float) -> np.ndarray:
    """
    States along segment ab, endpoints included.

    The number of states is ceil(|ab| / resolution) + 1, so spacing never exceeds
    the resolution.
    """
    length = float(np.linalg.norm(b - a))
    count = int(math.ceil(length / resolution)) + 1
    if count == 1:
        return np.atleast_2d(a)
    fractions = np.linspace(0.0, 1.0, count)
    return a[None, :] + fractions[:, None] * (b - a)[None, :]


def is_state_valid(w: ObstacleWorld, x: StateVector) -> bool:
    """
    Check membership of x in X_free.

    Raises:
        DimensionError: If x and the world disagree on dimension
    """
    if x.dim != w.dim:
        raise DimensionError(f"State of dimension {x.dim} in a {w.dim}-D world")
    return w.state_valid(x.array)


def is_edge_valid(w: ObstacleWorld, a: StateVector, b: StateVector) -> bool:
    """
    Check every state along segment ab against the world.

    Raises:
        DimensionError: If the states and the world disagree on dimension
    """
    if a.dim != w.dim or b.dim != w.dim:
        raise DimensionError(f"Edge of dimension {a.dim}/{b.dim} in a {w.dim}-D world")
    return w.edge_valid(a.array, b.array)


class ValidityChecker:
    """
    Validity oracle over an obstacle world plus an optional state predicate.

    Joint-space problems attach the self-collision predicate here, so edges are
    checked against both at the world's resolution.
    """

    def __init__(
        self,
        world: ObstacleWorld,
        state_predicate: Optional[Callable[[np.ndarray], bool]] = None,
    ):
        self.world = world
        self.state_predicate = state_predicate
        self.resolution = world.check_resolution
        self.state_checks = 0
        self.edge_checks = 0

    def state_valid(self, x: np.ndarray) -> bool:
        self.state_checks += 1
        if not self.world.state_valid(x):
            return False
        return self.state_predicate is None or bool(self.state_predicate(x))

    def edge_valid(self, a: np.ndarray, b: np.ndarray) -> bool:
        self.edge_checks += 1
        points = edge_points(a, b, self.resolution)
        if not np.all(self.world.valid_mask(points)):
            return False
        if self.state_predicate is None:
            return True
        return all(self.state_predicate(p) for p in points)

    def points_valid(self, points: np.ndarray) -> bool:
        """Sparse check of a handful of points (lazy edge evaluation)."""
        if not np.all(self.world.valid_mask(points)):
            return False
        if self.state_predicate is None:
            return True
        return all(self.state_predicate(p) for p in points)


@dataclass(frozen=True)
class Scenario:
    """An obstacle world with a start and a goal state."""

    world: ObstacleWorld
    start: StateVector
    goal: StateVector
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.start.dim != self.world.dim or self.goal.dim != self.world.dim:
            raise DimensionError("Start/goal dimension does not match the world")

    def to_dict(self) -> dict[str, Any]:
        data = self.world.to_dict()
        data["start"] = list(self.start.coords)
        data["goal"] = list(self.goal.coords)
        return data

    def dumps(self) -> str:
        # repr-based float output round-trips bit-exactly
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict[str, Any], name: str = "custom") -> "Scenario":
        world = ObstacleWorld.from_dict(data)
        try:
            start = StateVector.of(data["start"])
            goal = StateVector.of(data["goal"])
        except (KeyError, TypeError, ValueError) as e:
            raise ScenarioConfigError(f"Malformed start/goal: {e}") from e
        return cls(world, start, goal, name)

    def save(self, path: FilePath) -> None:
        try:
            FilePath(path).write_text(self.dumps())
        except OSError as e:
            raise ScenarioConfigError(f"Could not write scenario to {path}: {e}") from e

    @classmethod
    def load(cls, path: FilePath) -> "Scenario":
        path = FilePath(path)
        try:
            data = json.loads(path.read_text())
        except OSError as e:
            raise ScenarioConfigError(f"Could not read scenario {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ScenarioConfigError(f"Invalid JSON in {path}: {e}") from e
        return cls.from_dict(data, name=path.stem)


def default_start_goal(n: int) -> tuple[StateVector, StateVector]:
    """Benchmark start (0.05, 0.5, …) and goal (0.95, 0.5, …) in the unit hypercube."""
    rest = [0.5] * (n - 1)
    return StateVector.of([0.05] + rest), StateVector.of([0.95] + rest)


def _unit_bounds(n: int) -> HyperRect:
    return HyperRect.of([0.0] * n, [1.0] * n)


def _gap_centre(rng: np.random.Generator, width: float, block_centre: bool) -> float:
    margin = 0.05
    low, high = width / 2 + margin, 0.5 - width / 2 - margin
    if block_centre and low <= high:
        # keep the slot off the start-goal line
        side = 1.0 if rng.random() < 0.5 else -1.0
        return 0.5 + side * float(rng.uniform(low, high))
    return float(rng.uniform(width / 2, 1.0 - width / 2))


def make_narrow_passage(
    n: int,
    gap_width: float,
    seed: int,
    check_resolution: Optional[float] = None,
) -> ObstacleWorld:
    """
    Unit hypercube split by a wall along axis 0 with a single square slot.

    The wall occupies [0.45, 0.55] on axis 0. The slot has width ``gap_width`` in
    every remaining axis and a seed-determined centre; along axis 1 the centre is
    kept off 0.5 whenever the width allows, so the straight start-goal segment is
    blocked.

    Args:
        n: Dimension (>= 2)
        gap_width: Slot width
        seed: Seed for the slot position
        check_resolution: Edge check spacing (defaults to 1% of the diagonal)

    Returns:
        The generated world

    Raises:
        ScenarioConfigError: If the parameters cannot produce a passable wall
    """
    if n < 2:
        raise ScenarioConfigError(f"Narrow passage needs n >= 2, got {n}")
    if not 0.0 < gap_width < 1.0:
        raise ScenarioConfigError(f"gap_width must lie in (0, 1), got {gap_width}")
    resolution = check_resolution or DEFAULT_RESOLUTION_FRACTION * math.sqrt(n)
    if gap_width <= resolution:
        raise ScenarioConfigError(
            f"gap_width {gap_width} does not admit edge checks at resolution {resolution:.4g}"
        )

    rng = np.random.default_rng(seed)
    centres = [_gap_centre(rng, gap_width, block_centre=(axis == 1)) for axis in range(1, n)]
    slot_lo = [c - gap_width / 2 for c in centres]
    slot_hi = [c + gap_width / 2 for c in centres]
    wall_lo, wall_hi = 0.5 - WALL_THICKNESS / 2, 0.5 + WALL_THICKNESS / 2

    # wall minus the open slot, as 2(n-1) boxes
    boxes: list[HyperRect] = []
    for i in range(1, n):
        for below in (True, False):
            lower = [wall_lo] + [0.0] * (n - 1)
            upper = [wall_hi] + [1.0] * (n - 1)
            for j in range(1, i):
                lower[j], upper[j] = slot_lo[j - 1], slot_hi[j - 1]
            if below:
                lower[i], upper[i] = 0.0, slot_lo[i - 1]
            else:
                lower[i], upper[i] = slot_hi[i - 1], 1.0
            if upper[i] > lower[i]:
                boxes.append(HyperRect.of(lower, upper))

    world = ObstacleWorld(_unit_bounds(n), tuple(boxes), resolution)
    logger.debug("narrow passage n=%d gap=%.3g centres=%s", n, gap_width, centres)
    return world


def make_random_rectangles(
    n: int,
    count: int,
    seed: int,
    check_resolution: Optional[float] = None,
) -> ObstacleWorld:
    """
    Unit hypercube with ``count`` random boxes that avoid the benchmark start and goal.

    Raises:
        ScenarioConfigError: If placement keeps covering start/goal after the retry budget
    """
    if n < 2:
        raise ScenarioConfigError(f"Random rectangles need n >= 2, got {n}")
    if count < 0:
        raise ScenarioConfigError(f"Obstacle count must be non-negative, got {count}")
    resolution = check_resolution or DEFAULT_RESOLUTION_FRACTION * math.sqrt(n)
    start, goal = default_start_goal(n)
    rng = np.random.default_rng(seed)
    boxes: list[HyperRect] = []
    retries = 0
    while len(boxes) < count:
        sides = rng.uniform(*RR_SIDE_RANGE, size=n)
        lower = rng.uniform(0.0, 1.0 - sides)
        box = HyperRect.of(lower, lower + sides)
        if box.contains(start.array) or box.contains(goal.array):
            retries += 1
            if retries > RR_MAX_RETRIES:
                raise ScenarioConfigError(
                    f"Could not place {count} obstacles clear of start/goal "
                    f"after {RR_MAX_RETRIES} retries"
                )
            continue
        boxes.append(box)
    return ObstacleWorld(_unit_bounds(n), tuple(boxes), resolution)


def build_scenario(kind: str, n: int, seed: int, params: Optional[dict[str, Any]] = None) -> Scenario:
    """
    Build a named benchmark scenario (``np``, ``rr`` or ``empty``) with the default start/goal.

    Args:
        kind: Scenario identifier
        n: Dimension
        seed: World seed
        params: Generator parameters (``gap_width``, ``count``, ``check_resolution``)
    """
    params = params or {}
    resolution = params.get("check_resolution")
    if kind == "np":
        world = make_narrow_passage(n, float(params.get("gap_width", 0.1)), seed, resolution)
    elif kind == "rr":
        world = make_random_rectangles(n, int(params.get("count", 30)), seed, resolution)
    elif kind == "empty":
        world = ObstacleWorld(_unit_bounds(n), (), resolution or 0.0)
    else:
        raise ScenarioConfigError(f"Unknown scenario kind: {kind}")
    start, goal = default_start_goal(n)
    return Scenario(world, start, goal, name=kind)
