"""
Sampler Module

Uniform, informed-set, priority-region and bias sampling, plus the just-in-time
densification of bottleneck edges.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from jitstar.core.state import DimensionError, Edge, StateVector, distance
from jitstar.core.world import ObstacleWorld

logger = logging.getLogger(__name__)

DEFAULT_MAX_TRIES = 1000
# informed draws landing outside the bounds are redrawn this many times
BOUNDS_REDRAWS = 100

StatePredicate = Callable[[np.ndarray], bool]


class EmptyInformedSetError(ValueError):
    """Raised when the informed set has no interior (cBest below the focal distance)."""
    pass


class SamplingExhausted(RuntimeError):
    """Raised when rejection sampling runs out of tries."""
    pass


def unit_ball_points(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """Uniform samples from the unit n-ball, shape (count, n)."""
    directions = rng.standard_normal((count, n))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = rng.random(count) ** (1.0 / n)
    return directions * radii[:, None]


class InformedSet:
    """
    Prolate hyperspheroid of states that could lie on a path cheaper than c_best.

    Foci are the start and goal, the transverse diameter is c_best. An infinite
    c_best means no solution is known yet and the set is unbounded.
    """

    def __init__(self, focus_a: StateVector, focus_b: StateVector, c_best: float = math.inf):
        if focus_a.dim != focus_b.dim:
            raise DimensionError("Informed set foci disagree on dimension")
        self.focus_a = focus_a
        self.focus_b = focus_b
        self.c_best = c_best
        self._a = focus_a.array
        self._b = focus_b.array
        self.c_min = distance(focus_a, focus_b)
        self._centre = (self._a + self._b) / 2.0
        self._rotation = self._rotation_to_world()

    @property
    def dim(self) -> int:
        return self.focus_a.dim

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.c_best)

    @property
    def empty(self) -> bool:
        return self.c_best < self.c_min

    def _rotation_to_world(self) -> np.ndarray:
        n = self.dim
        if self.c_min == 0.0:
            return np.eye(n)
        a1 = ((self._b - self._a) / self.c_min).reshape(n, 1)
        m = a1 @ np.eye(n)[0:1, :]
        u, _, vt = np.linalg.svd(m)
        d = np.ones(n)
        d[-1] = np.linalg.det(u) * np.linalg.det(vt.T)
        return u @ np.diag(d) @ vt

    def contains(self, x: np.ndarray) -> bool:
        if not self.bounded:
            return True
        return float(np.linalg.norm(x - self._a) + np.linalg.norm(x - self._b)) <= self.c_best

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        if not self.bounded:
            return np.ones(len(points), dtype=bool)
        sums = np.linalg.norm(points - self._a, axis=1) + np.linalg.norm(points - self._b, axis=1)
        return sums <= self.c_best

    def draw_many(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform samples from the spheroid, shape (count, n)."""
        if not self.bounded:
            raise EmptyInformedSetError("Cannot sample an unbounded informed set")
        if self.empty:
            raise EmptyInformedSetError(
                f"c_best {self.c_best:.6g} is below the focal distance {self.c_min:.6g}"
            )
        n = self.dim
        conjugate = math.sqrt(max(self.c_best**2 - self.c_min**2, 0.0)) / 2.0
        radii = np.full(n, conjugate)
        radii[0] = self.c_best / 2.0
        ball = unit_ball_points(rng, n, count)
        return (self._rotation @ (ball * radii).T).T + self._centre


def sample_uniform(w: ObstacleWorld, rng: np.random.Generator) -> StateVector:
    """Uniform state over the world bounds (not filtered for validity)."""
    return StateVector.of(rng.uniform(w.lower, w.upper))


def sample_informed(s: InformedSet, rng: np.random.Generator) -> StateVector:
    """
    Uniform state from the informed set.

    Raises:
        EmptyInformedSetError: If c_best is below the focal distance (or infinite)
    """
    return StateVector.of(s.draw_many(rng, 1)[0])


@dataclass
class PriorityRegion:
    """Lens around a failed edge: both balls of radius c, clipped to the informed set."""

    source: StateVector
    target: StateVector
    c: float
    informed: InformedSet

    def __post_init__(self) -> None:
        if not self.c > 0.0:
            raise ValueError(f"Priority region needs c > 0, got {self.c}")

    @classmethod
    def around(cls, edge: Edge, informed: InformedSet) -> "PriorityRegion":
        return cls(edge.source, edge.target, edge.length, informed)

    def contains(self, x: np.ndarray) -> bool:
        return (
            float(np.linalg.norm(x - self.source.array)) < self.c
            and float(np.linalg.norm(x - self.target.array)) < self.c
            and self.informed.contains(x)
        )


def sample_priority_region(
    r: PriorityRegion, rng: np.random.Generator, max_tries: int = DEFAULT_MAX_TRIES
) -> StateVector:
    """
    Rejection-sample a state from a priority region.

    Candidates are drawn uniformly from the ball of radius (√3/2)c around the edge
    midpoint, which encloses the lens.

    Raises:
        SamplingExhausted: If no candidate is accepted within max_tries
    """
    source, target = r.source.array, r.target.array
    centre = (source + target) / 2.0
    radius = math.sqrt(3.0) / 2.0 * r.c
    n = r.source.dim
    for _ in range(max_tries):
        x = centre + radius * unit_ball_points(rng, n, 1)[0]
        if r.contains(x):
            return StateVector.of(x)
    raise SamplingExhausted(f"No priority-region sample after {max_tries} tries")


@dataclass
class SampleLedger:
    """Bookkeeping of valid samples, invalid samples and reverse-valid/forward-invalid edges."""

    free_samples: list[StateVector] = field(default_factory=list)
    obstacle_samples: list[StateVector] = field(default_factory=list)
    failed_edges: list[Edge] = field(default_factory=list)

    def merge(self, other: "SampleLedger") -> None:
        self.free_samples.extend(other.free_samples)
        self.obstacle_samples.extend(other.obstacle_samples)
        self.failed_edges.extend(other.failed_edges)

    def __len__(self) -> int:
        return len(self.free_samples) + len(self.obstacle_samples)


def _draw_candidates(
    w: ObstacleWorld, s: InformedSet, count: int, rng: np.random.Generator
) -> np.ndarray:
    if not s.bounded or s.empty:
        return rng.uniform(w.lower, w.upper, size=(count, w.dim))
    points = s.draw_many(rng, count)
    for _ in range(BOUNDS_REDRAWS):
        outside = ~np.all((points >= w.lower) & (points <= w.upper), axis=1)
        if not outside.any():
            break
        points[outside] = s.draw_many(rng, int(outside.sum()))
    return points


def bias_sample(
    w: ObstacleWorld,
    s: InformedSet,
    batch_size: int,
    self_collision_ok: Optional[StatePredicate],
    rng: np.random.Generator,
) -> SampleLedger:
    """
    Draw one batch and split it into valid and invalid samples.

    The informed sampler is used once a solution bounds the informed set, uniform
    sampling before that. Candidates failing the world check or the self-collision
    predicate go to ``obstacle_samples``.

    Args:
        w: Obstacle world
        s: Current informed set
        batch_size: Number of candidates (>= 1)
        self_collision_ok: State predicate, or None to accept every state
        rng: Random generator

    Returns:
        A ledger holding exactly batch_size samples
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    candidates = _draw_candidates(w, s, batch_size, rng)
    valid = w.valid_mask(candidates)
    ledger = SampleLedger()
    for point, ok in zip(candidates, valid):
        if ok and self_collision_ok is not None:
            ok = bool(self_collision_ok(point))
        state = StateVector.of(point)
        (ledger.free_samples if ok else ledger.obstacle_samples).append(state)
    return ledger


def just_sample(
    ledger: SampleLedger,
    w: ObstacleWorld,
    s: InformedSet,
    per_edge: int,
    rng: np.random.Generator,
    state_ok: Optional[StatePredicate] = None,
    max_tries: int = DEFAULT_MAX_TRIES,
) -> list[StateVector]:
    """
    Densify the priority regions of every failed edge in the ledger.

    Each failed edge gets up to ``per_edge`` draws from its priority region; valid
    draws are returned (and recorded as free samples), invalid ones are recorded
    as obstacle samples. The failed-edge list is cleared.
    """
    added: list[StateVector] = []
    for edge in ledger.failed_edges:
        if edge.length <= 0.0:
            continue
        region = PriorityRegion.around(edge, s)
        for _ in range(per_edge):
            try:
                x = sample_priority_region(region, rng, max_tries)
            except SamplingExhausted:
                logger.debug("priority region of %s -> %s exhausted", edge.source, edge.target)
                break
            point = x.array
            if w.state_valid(point) and (state_ok is None or state_ok(point)):
                added.append(x)
            else:
                ledger.obstacle_samples.append(x)
    ledger.free_samples.extend(added)
    ledger.failed_edges.clear()
    return added
