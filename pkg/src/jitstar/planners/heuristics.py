"""
Heuristics Module

Cost and effort heuristics and the lexicographic keys of the reverse and forward
edge queues.
"""

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from jitstar.core.state import Edge, StateVector

# guards ceil() against 0.03 / 0.01 = 3.0000000000000004
EFFORT_EPSILON = 1e-9


class ContractViolation(RuntimeError):
    """Raised when an operation is called outside its precondition."""
    pass


def effort(length: float, resolution: float) -> int:
    """Number of collision checks needed to validate a segment of the given length."""
    return max(0, math.ceil(length / resolution - EFFORT_EPSILON))


def _zero(_: np.ndarray) -> float:
    return 0.0


@dataclass(frozen=True)
class HeuristicSet:
    """
    Euclidean heuristics for one problem.

    ĥ is the distance to the goal, ĝ the distance from the start, ĉ the edge
    length, ē the check count of an edge and d̄ the check count to the start.
    ``motion_term`` is the D_tanh state penalty; it is zero outside
    motion-performance mode.
    """

    start: StateVector
    goal: StateVector
    resolution: float
    alpha: float = 1.0
    motion_term: Callable[[np.ndarray], float] = _zero

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.resolution > 0.0:
            raise ValueError(f"resolution must be positive, got {self.resolution}")

    def h_hat(self, x: StateVector) -> float:
        return _dist(x, self.goal)

    def g_hat(self, x: StateVector) -> float:
        return _dist(self.start, x)

    def c_hat(self, a: StateVector, b: StateVector) -> float:
        return _dist(a, b)

    def e_bar(self, a: StateVector, b: StateVector) -> int:
        return effort(_dist(a, b), self.resolution)

    def d_bar(self, x: StateVector) -> int:
        return effort(_dist(x, self.start), self.resolution)

    def d_tanh(self, x: StateVector) -> float:
        return float(self.motion_term(x.array))

    def blend(self, cost: float, motion: float) -> float:
        """α·cost + (1 − α)·motion; the motion term is dropped when α == 1."""
        if self.alpha == 1.0:
            return cost
        return self.alpha * cost + (1.0 - self.alpha) * motion

    def solution_key(self, c_best: float) -> float:
        """Key1 of an edge that closes a solution of cost c_best."""
        if math.isinf(c_best):
            return math.inf
        return self.blend(c_best, self.d_tanh(self.goal))


def _dist(a: StateVector, b: StateVector) -> float:
    return math.dist(a.coords, b.coords)


def reverse_key(
    e: Edge,
    h: HeuristicSet,
    cost_to_goal: Optional[float] = None,
    effort_to_goal: Optional[int] = None,
) -> tuple[float, int]:
    """
    Reverse-queue key of an edge leaving the reverse tree at e.source.

    key1 = α·(ĥ(x_s) + ĉ(x_s, x_t) + ĝ(x_t)) + (1 − α)·D_tanh(x_t)
    key2 = ē(goal, x_s) + ē(x_s, x_t) + d̄(x_t)

    Args:
        e: Edge (x_s, x_t)
        h: Heuristics
        cost_to_goal: Reverse-tree label of x_s, replacing ĥ(x_s) when given
        effort_to_goal: Reverse-tree effort label of x_s, replacing ē(goal, x_s)

    Returns:
        (key1, key2)
    """
    xs, xt = e.source, e.target
    to_goal = h.h_hat(xs) if cost_to_goal is None else cost_to_goal
    key1 = h.blend(to_goal + h.c_hat(xs, xt) + h.g_hat(xt), h.d_tanh(xt))
    eff = h.e_bar(h.goal, xs) if effort_to_goal is None else effort_to_goal
    key2 = eff + h.e_bar(xs, xt) + h.d_bar(xt)
    return key1, key2


def forward_key(
    e: Edge,
    h: HeuristicSet,
    g_forward: Mapping[StateVector, float],
    cost_to_goal: Optional[Mapping[StateVector, float]] = None,
    effort_to_come: Optional[Mapping[StateVector, int]] = None,
) -> tuple[float, int]:
    """
    Forward-queue key of an edge leaving the forward tree at e.source.

    key1 = α·(g_F(x_s) + ĉ(x_s, x_t) + ĥ_R(x_t)) + (1 − α)·D_tanh(x_t), where ĥ_R
    is the reverse-tree label of x_t when present and ĥ otherwise.
    key2 = effort-to-come of x_s + ē(x_s, x_t).

    Raises:
        ContractViolation: If x_s has no forward label
    """
    xs, xt = e.source, e.target
    if xs not in g_forward:
        raise ContractViolation(f"Forward key requested for unlabeled source {xs}")
    labels = cost_to_goal or {}
    to_goal = labels.get(xt, h.h_hat(xt))
    key1 = h.blend(g_forward[xs] + h.c_hat(xs, xt) + to_goal, h.d_tanh(xt))
    come = (effort_to_come or {}).get(xs, h.e_bar(h.start, xs))
    key2 = come + h.e_bar(xs, xt)
    return key1, key2
