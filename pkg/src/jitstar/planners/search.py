"""
Search Module

Building blocks of the bidirectional lazy search: search trees, lexicographic edge
queues, adaptive ancestor expansion, the rewiring radius, lazy edge checks and
informed pruning.
"""

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import (
    Callable,
    Generic,
    Hashable,
    Iterable,
    Iterator,
    Optional,
    Protocol,
    Sequence,
    TypeVar,
)

import numpy as np

from jitstar.core.state import Edge, StateVector
from jitstar.planners.heuristics import ContractViolation, HeuristicSet
from jitstar.sampling.measures import unit_ball_measure

K = TypeVar("K", bound=Hashable)
E = TypeVar("E")


class RadiusDomainError(ValueError):
    """Raised when the rewiring radius is requested for fewer than two samples."""
    pass


class EdgeValidator(Protocol):
    def edge_valid(self, a: np.ndarray, b: np.ndarray) -> bool: ...


class SearchTree(Generic[K]):
    """
    Rooted tree with cost and effort labels.

    Labels are cost-to-come in the forward tree and cost-to-goal in the reverse
    tree; either way a child's label is its parent's label plus the edge cost.
    """

    def __init__(self) -> None:
        self.root: Optional[K] = None
        self._parent: dict[K, Optional[K]] = {}
        self._children: dict[K, set[K]] = {}
        self._label: dict[K, float] = {}
        self._effort: dict[K, int] = {}

    def set_root(self, v: K, label: float = 0.0, effort: int = 0) -> None:
        self.clear()
        self.root = v
        self._parent[v] = None
        self._children[v] = set()
        self._label[v] = label
        self._effort[v] = effort

    def clear(self) -> None:
        self.root = None
        self._parent.clear()
        self._children.clear()
        self._label.clear()
        self._effort.clear()

    def __contains__(self, v: object) -> bool:
        return v in self._parent

    def __len__(self) -> int:
        return len(self._parent)

    @property
    def vertices(self) -> list[K]:
        return list(self._parent)

    @property
    def labels(self) -> dict[K, float]:
        return self._label

    @property
    def efforts(self) -> dict[K, int]:
        return self._effort

    def is_root(self, v: K) -> bool:
        return v in self._parent and self._parent[v] is None

    def parent(self, v: K) -> Optional[K]:
        return self._parent[v]

    def children(self, v: K) -> set[K]:
        return self._children[v]

    def label(self, v: K) -> float:
        return self._label.get(v, math.inf)

    def effort(self, v: K) -> int:
        return self._effort[v]

    def add(self, v: K, parent: K, label: float, effort: int = 0) -> None:
        """Attach v under parent, reparenting it when it is already in the tree."""
        if parent not in self._parent:
            raise ContractViolation(f"Parent {parent} is not in the tree")
        if v in self._parent:
            self.reparent(v, parent, label, effort)
            return
        self._parent[v] = parent
        self._children[parent].add(v)
        self._children[v] = set()
        self._label[v] = label
        self._effort[v] = effort

    def reparent(self, v: K, parent: K, label: float, effort: int = 0) -> None:
        """Move v (with its subtree) under a new parent and shift the subtree labels."""
        if v == parent or parent in self.descendants(v):
            raise ContractViolation(f"Reparenting {v} under {parent} would close a cycle")
        old = self._parent[v]
        if old is not None:
            self._children[old].discard(v)
        self._parent[v] = parent
        self._children[parent].add(v)
        delta = label - self._label[v]
        delta_effort = effort - self._effort[v]
        self._label[v] = label
        self._effort[v] = effort
        for d in self.descendants(v):
            self._label[d] += delta
            self._effort[d] += delta_effort

    def descendants(self, v: K) -> list[K]:
        out: list[K] = []
        stack = list(self._children[v])
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(self._children[u])
        return out

    def ancestors(self, v: K) -> Iterator[K]:
        """Parents of v up to the root, nearest first."""
        u = self._parent[v]
        while u is not None:
            yield u
            u = self._parent[u]

    def path_to_root(self, v: K) -> list[K]:
        return [v, *self.ancestors(v)]

    def remove(self, v: K) -> list[K]:
        """Remove v and its subtree; returns the removed vertices."""
        removed = [v, *self.descendants(v)]
        parent = self._parent[v]
        if parent is not None:
            self._children[parent].discard(v)
        for u in removed:
            del self._parent[u], self._children[u], self._label[u], self._effort[u]
        if self.root in removed:
            self.root = None
        return removed

    def is_acyclic(self) -> bool:
        for v in self._parent:
            seen = {v}
            for u in self.ancestors(v):
                if u in seen:
                    return False
                seen.add(u)
        return True


@dataclass(order=True)
class QueueEntry(Generic[E]):
    key1: float
    key2: float
    order: int
    edge: E = field(compare=False)


class EdgeQueue(Generic[E]):
    """Priority queue of edges ordered by (key1, key2, insertion order)."""

    def __init__(self) -> None:
        self._heap: list[QueueEntry[E]] = []
        self._counter = itertools.count()

    def push(self, edge: E, key1: float, key2: float = 0.0) -> None:
        heapq.heappush(self._heap, QueueEntry(key1, key2, next(self._counter), edge))

    def pop(self) -> QueueEntry[E]:
        if not self._heap:
            raise IndexError("pop from an empty edge queue")
        return heapq.heappop(self._heap)

    def peek(self) -> Optional[QueueEntry[E]]:
        return self._heap[0] if self._heap else None

    @property
    def top_key1(self) -> float:
        return self._heap[0].key1 if self._heap else math.inf

    def clear(self) -> None:
        self._heap.clear()

    def entries(self) -> list[QueueEntry[E]]:
        return sorted(self._heap)

    def __len__(self) -> int:
        return len(self._heap)

    def __bool__(self) -> bool:
        return bool(self._heap)


@dataclass
class JustEdgeResult(Generic[K]):
    """Neighbours of a vertex after adaptive ancestor expansion."""

    neighbours: list[K]
    ancestors: list[K]
    surrogate: Optional[np.ndarray] = None
    surrogate_parent: Optional[K] = None


def _state_position(v: StateVector) -> np.ndarray:
    return v.array


def just_edge(
    x: K,
    tree: SearchTree[K],
    w: EdgeValidator,
    tau: int,
    m: int,
    baseline: Sequence[K] = (),
    position: Callable[[K], np.ndarray] = _state_position,  # type: ignore[assignment]
    edge_ok: Optional[Callable[[K, K], bool]] = None,
) -> JustEdgeResult[K]:
    """
    Extend the neighbour set of x with the ancestors it can see directly.

    Starting at the parent, successive ancestors are tried while the step count
    stays within tau. Each visible ancestor joins the set. At the first blocked
    ancestor, m evenly spaced states on the tree edge from the last visible
    vertex to the blocked one are tried, nearest to the blocked end first; the
    first one visible from x becomes a surrogate. The walk then stops.

    Args:
        x: Vertex being expanded
        tree: Tree holding x
        w: Edge validity oracle
        tau: Step threshold; at most tau + 1 ancestors (surrogate included) result
        m: Surrogate candidates per blocked ancestor
        baseline: r-disc neighbours of x
        position: Vertex -> coordinates
        edge_ok: Vertex-pair check used for ancestors instead of w, so a caller
            can answer from its own edge caches

    Raises:
        ContractViolation: If x is not in the tree
    """
    if x not in tree:
        raise ContractViolation(f"{x} is not in the tree")
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    result: JustEdgeResult[K] = JustEdgeResult(list(baseline), [])
    px = position(x)
    x_prev = x
    x_tmp = tree.parent(x)
    steps = 0
    while x_tmp is not None and steps <= tau:
        p_tmp = position(x_tmp)
        visible = edge_ok(x, x_tmp) if edge_ok is not None else w.edge_valid(px, p_tmp)
        if visible:
            result.ancestors.append(x_tmp)
            x_prev = x_tmp
            x_tmp = tree.parent(x_tmp)
            steps += 1
            continue
        p_prev = position(x_prev)
        for k in range(m, 0, -1):
            z = p_prev + (k / (m + 1)) * (p_tmp - p_prev)
            if w.edge_valid(px, z):
                result.surrogate = z
                result.surrogate_parent = x_tmp
                break
        break
    seen = set(result.neighbours)
    result.neighbours.extend(a for a in result.ancestors if a not in seen)
    return result


def rgg_radius(
    q: int, n: int, measure_informed: float, measure_priority: float, eta: float
) -> float:
    """
    Rewiring radius of the random geometric graph over q samples.

    r(q) = η·(2(1 + 1/n)·(max(λ_informed, λ_priority)/ζ_n)·(log q / q))^{1/n}

    Raises:
        RadiusDomainError: If q < 2
    """
    if q < 2:
        raise RadiusDomainError(f"Rewiring radius needs q >= 2 samples, got {q}")
    if not eta > 1.0:
        raise ValueError(f"eta must be > 1, got {eta}")
    measure = max(measure_informed, measure_priority)
    base = 2.0 * (1.0 + 1.0 / n) * (measure / unit_ball_measure(n)) * (math.log(q) / q)
    return eta * base ** (1.0 / n)


def lazy_points(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Endpoints and midpoint of segment ab."""
    return np.stack([a, (a + b) / 2.0, b])


def lazy_check(e: Edge, w) -> bool:
    """
    Sparse validity of an edge: only its endpoints and midpoint are checked.

    Accepts anything fullCheck rejects only when an obstacle falls between those points.
    """
    points = lazy_points(e.source.array, e.target.array)
    if hasattr(w, "points_valid"):
        return bool(w.points_valid(points))
    return bool(np.all(w.valid_mask(points)))


def prune_mask(
    points: np.ndarray, start: np.ndarray, goal: np.ndarray, c_best: float
) -> np.ndarray:
    """Rows of points with ĝ + ĥ <= c_best (all rows while c_best is infinite)."""
    if math.isinf(c_best):
        return np.ones(len(points), dtype=bool)
    through = np.linalg.norm(points - start, axis=1) + np.linalg.norm(points - goal, axis=1)
    return through <= c_best


def prune(
    trees: Iterable[SearchTree[StateVector]],
    c_best: float,
    h: HeuristicSet,
    protected: Iterable[StateVector] = (),
) -> int:
    """
    Remove tree vertices that cannot lie on a path cheaper than c_best.

    A vertex goes when ĝ(x) + ĥ(x) > c_best, together with its subtree. Protected
    vertices (the current solution) and their ancestors always stay.

    Returns:
        Number of vertices removed
    """
    if math.isinf(c_best):
        return 0
    protected = set(protected)
    removed = 0
    for tree in trees:
        keep = set()
        for v in protected:
            if v in tree:
                keep.update(tree.path_to_root(v))
        doomed = [
            v for v in tree.vertices
            if v not in keep and h.g_hat(v) + h.h_hat(v) > c_best
        ]
        for v in doomed:
            if v in tree:
                removed += len(tree.remove(v))
    return removed


def could_improve_solution(queue: EdgeQueue, c_best: float, h: HeuristicSet) -> bool:
    """True iff the queue holds an entry whose key1 beats the current solution key."""
    if not queue:
        return False
    return queue.top_key1 < h.solution_key(c_best)
