"""
JIT* Planner Module

Anytime, almost-surely asymptotically optimal planner. Each batch runs a lazy
reverse search from the goal that supplies cost-to-goal estimates, then a forward
search from the start that fully validates edges in key order. Blocked reverse-tree
edges trigger priority-region sampling and a reverse-search restart; adaptive
ancestor expansion shortcuts new vertices through visible ancestors.
"""

import logging
import math
import time
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from jitstar.core.state import Edge, Path, StateVector
from jitstar.core.world import ObstacleWorld, ValidityChecker
from jitstar.planners.base_planner import (
    BasePlanner,
    PlannerConfig,
    PlannerFactory,
    PlanResult,
    ProblemDefinition,
    SolutionCallback,
)
from jitstar.planners.heuristics import EFFORT_EPSILON, HeuristicSet, effort
from jitstar.planners.search import (
    EdgeQueue,
    SearchTree,
    could_improve_solution,
    just_edge,
    lazy_points,
    prune_mask,
    rgg_radius,
)
from jitstar.sampling.measures import informed_set_measure, priority_region_measure
from jitstar.sampling.samplers import InformedSet, SampleLedger, bias_sample, just_sample

logger = logging.getLogger(__name__)

START = 0
GOAL = 1
# no path can undercut the straight segment by more than rounding
OPTIMALITY_RTOL = 1e-12


def _no_motion(_: np.ndarray) -> float:
    return 0.0


class _LazyValidator:
    """Edge oracle checking only endpoints and midpoint."""

    def __init__(self, checker: ValidityChecker):
        self.checker = checker

    def edge_valid(self, a: np.ndarray, b: np.ndarray) -> bool:
        return self.checker.points_valid(lazy_points(a, b))


class JitStarSearch:
    """
    Search state of one planner run.

    Samples live in a numpy array; index 0 is the start and index 1 the goal.
    Trees, queues and edge caches refer to samples by index.
    """

    def __init__(
        self,
        problem: ProblemDefinition,
        world: ObstacleWorld,
        config: PlannerConfig,
        rng: np.random.Generator,
        on_solution: Optional[SolutionCallback] = None,
    ):
        self.problem = problem
        self.world = world
        self.config = config
        self.rng = rng
        self.on_solution = on_solution
        self.checker = problem.checker(world)
        self._lazy = _LazyValidator(self.checker)

        motion: Callable[[np.ndarray], float] = _no_motion
        alpha = 1.0
        if config.use_motion_performance and problem.motion_term is not None:
            motion = problem.motion_term
            alpha = config.alpha
        self._motion_fn = motion
        self.heuristics = HeuristicSet(
            problem.start, problem.goal, world.check_resolution, alpha, motion
        )
        self.resolution = world.check_resolution
        self.informed = InformedSet(problem.start, problem.goal)
        self.ledger = SampleLedger()

        self._start = problem.start.array
        self._goal = problem.goal.array
        self.points = np.empty((0, world.dim))
        self._g_hat = np.empty(0)
        self._h_hat = np.empty(0)
        self._motion = np.empty(0)

        self.reverse: SearchTree[int] = SearchTree()
        self.forward: SearchTree[int] = SearchTree()
        self.reverse_queue: EdgeQueue[tuple[int, int]] = EdgeQueue()
        self.forward_queue: EdgeQueue[tuple[int, int]] = EdgeQueue()
        self._valid: set[tuple[int, int]] = set()
        self._invalid: set[tuple[int, int]] = set()

        self._kdtree: Optional[cKDTree] = None
        self._indexed = 0
        self.radius = math.inf
        self._neighbours: dict[int, np.ndarray] = {}
        self._surrogates: dict[bytes, int] = {}
        self._failed_lengths: list[float] = []
        self._add_points(np.stack([self._start, self._goal]))

        self.c_best = math.inf
        self.solution: Optional[Path] = None
        self.solution_ids: list[int] = []
        self.trace: list[tuple[float, float]] = []
        self.iterations = 0
        self.batches = 0
        self.reverse_restarts = 0
        self._t0 = time.perf_counter()

    # ------------------------------------------------------------------ samples

    @property
    def sample_count(self) -> int:
        return len(self.points)

    def _add_points(self, pts: np.ndarray) -> list[int]:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        if len(pts) == 0:
            return []
        first = len(self.points)
        self.points = np.vstack([self.points, pts])
        self._g_hat = np.concatenate([self._g_hat, np.linalg.norm(pts - self._start, axis=1)])
        self._h_hat = np.concatenate([self._h_hat, np.linalg.norm(pts - self._goal, axis=1)])
        motion = np.array([self._motion_fn(p) for p in pts], dtype=np.float64)
        self._motion = np.concatenate([self._motion, motion])
        added = list(range(first, len(self.points)))
        self._extend_neighbours(added)
        return added

    def _extend_neighbours(self, added: list[int]) -> None:
        """Append samples that joined mid-batch to the cached neighbour sets they fall in."""
        if not self._neighbours:
            return
        cached = np.fromiter(self._neighbours, dtype=np.intp)
        for j in added:
            near = np.linalg.norm(self.points[cached] - self.points[j], axis=1) <= self.radius
            for i in cached[near]:
                i = int(i)
                if i != j:
                    self._neighbours[i] = np.append(self._neighbours[i], j)

    def _dist(self, i: int, j: int) -> float:
        return float(np.linalg.norm(self.points[i] - self.points[j]))

    def _effort(self, length: float) -> int:
        return effort(length, self.resolution)

    def _key(self, cost: float, motion: float) -> float:
        return self.heuristics.blend(cost, motion)

    # -------------------------------------------------------------------- graph

    def _measures(self) -> tuple[float, float]:
        domain = self.world.bounds.volume
        informed = min(
            domain, informed_set_measure(self.world.dim, self.informed.c_min, self.c_best)
        )
        priority = 0.0
        # the priority region is only defined from two dimensions up
        if self.world.dim >= 2:
            priority = max(
                (priority_region_measure(self.world.dim, c) for c in self._failed_lengths if c > 0),
                default=0.0,
            )
        return informed, priority

    def rebuild_graph(self) -> None:
        """Re-index all samples and recompute the rewiring radius."""
        informed, priority = self._measures()
        self.radius = rgg_radius(
            self.sample_count, self.world.dim, informed, priority, self.config.eta_rewire
        )
        self._kdtree = cKDTree(self.points)
        self._indexed = self.sample_count
        self._neighbours.clear()
        self._failed_lengths.clear()

    def neighbours(self, i: int) -> np.ndarray:
        """r-disc neighbours of sample i; start and goal always see each other."""
        cached = self._neighbours.get(i)
        if cached is not None:
            return cached
        assert self._kdtree is not None
        found = set(self._kdtree.query_ball_point(self.points[i], self.radius))
        if self._indexed < self.sample_count:
            extra = np.arange(self._indexed, self.sample_count)
            near = np.linalg.norm(self.points[extra] - self.points[i], axis=1) <= self.radius
            found.update(int(j) for j in extra[near])
        if i == START:
            found.add(GOAL)
        elif i == GOAL:
            found.add(START)
        found.discard(i)
        result = np.array(sorted(found), dtype=np.intp)
        self._neighbours[i] = result
        return result

    @staticmethod
    def _pair(i: int, j: int) -> tuple[int, int]:
        return (i, j) if i < j else (j, i)

    def lazy_ok(self, i: int, j: int) -> bool:
        pair = self._pair(i, j)
        if pair in self._invalid:
            return False
        if pair in self._valid:
            return True
        if self._lazy.edge_valid(self.points[i], self.points[j]):
            return True
        self._invalid.add(pair)
        return False

    def full_ok(self, i: int, j: int) -> bool:
        pair = self._pair(i, j)
        if pair in self._invalid:
            return False
        if pair in self._valid:
            return True
        ok = self.checker.edge_valid(self.points[i], self.points[j])
        (self._valid if ok else self._invalid).add(pair)
        return ok

    # ------------------------------------------------------------------- budget

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self._t0

    def out_of_budget(self) -> bool:
        limit = self.config.max_iterations
        if limit is not None and self.iterations >= limit:
            return True
        return self.elapsed >= self.config.max_time

    # ---------------------------------------------------------- reverse search

    def _expand_reverse(self, s: int) -> None:
        nbrs = self.neighbours(s)
        nbrs = np.array([t for t in nbrs if t not in self.reverse], dtype=np.intp)
        if len(nbrs) == 0:
            return
        lengths = np.linalg.norm(self.points[nbrs] - self.points[s], axis=1)
        label = self.reverse.label(s)
        key1 = label + lengths + self._g_hat[nbrs]
        if self.heuristics.alpha != 1.0:
            a = self.heuristics.alpha
            key1 = a * key1 + (1.0 - a) * self._motion[nbrs]
        steps = np.maximum(np.ceil(lengths / self.resolution - EFFORT_EPSILON), 0)
        to_start = np.maximum(np.ceil(self._g_hat[nbrs] / self.resolution - EFFORT_EPSILON), 0)
        key2 = self.reverse.effort(s) + steps + to_start
        for t, k1, k2 in zip(nbrs, key1, key2):
            t = int(t)
            if self._pair(s, t) in self._invalid:
                continue
            self.reverse_queue.push((s, t), float(k1), float(k2))

    def reverse_search(self) -> None:
        """Lazy reverse search from the goal, stopping at the solution key."""
        self.reverse.set_root(GOAL, 0.0, 0)
        self.reverse_queue.clear()
        self._expand_reverse(GOAL)
        bound = self.heuristics.solution_key(self.c_best)
        while self.reverse_queue and not self.out_of_budget():
            if self.reverse_queue.top_key1 >= bound:
                break
            s, t = self.reverse_queue.pop().edge
            self.iterations += 1
            if t in self.reverse or not self.lazy_ok(s, t):
                continue
            length = self._dist(s, t)
            self.reverse.add(
                t, s, self.reverse.label(s) + length, self.reverse.effort(s) + self._effort(length)
            )
            if self.config.use_just_edge:
                self._shortcut(self.reverse, t, full=False)
            self._expand_reverse(t)

    # ---------------------------------------------------------- forward search

    def _expand_forward(self, s: int) -> None:
        candidates = set(int(t) for t in self.neighbours(s))
        if s in self.reverse and self.reverse.parent(s) is not None:
            candidates.add(self.reverse.parent(s))
        parent = self.forward.parent(s)
        g_s = self.forward.label(s)
        for t in sorted(candidates):
            if t == parent or t not in self.reverse or self._pair(s, t) in self._invalid:
                continue
            length = self._dist(s, t)
            if g_s + length >= self.forward.label(t):
                continue
            key1 = self._key(g_s + length + self.reverse.label(t), float(self._motion[t]))
            key2 = self.forward.effort(s) + self._effort(length)
            self.forward_queue.push((s, t), key1, key2)

    def start_forward_search(self) -> None:
        self.forward.set_root(START, 0.0, 0)
        self.forward_queue.clear()
        self._expand_forward(START)

    def forward_step(self) -> None:
        """Pop one forward edge, validate it fully and grow the forward tree."""
        s, t = self.forward_queue.pop().edge
        self.iterations += 1
        if s not in self.forward:
            return
        length = self._dist(s, t)
        g_new = self.forward.label(s) + length
        if g_new >= self.forward.label(t):
            return
        if not self.full_ok(s, t):
            if self._is_reverse_edge(s, t):
                self._handle_failed_reverse_edge(s, t, length)
            return
        self.forward.add(t, s, g_new, self.forward.effort(s) + self._effort(length))
        if self.config.use_just_edge:
            self._shortcut(self.forward, t, full=True)
        if GOAL in self.forward and self.forward.label(GOAL) < self.c_best:
            self._record_solution()
        if t != GOAL:
            self._expand_forward(t)

    def _is_reverse_edge(self, s: int, t: int) -> bool:
        if s not in self.reverse or t not in self.reverse:
            return False
        return self.reverse.parent(s) == t or self.reverse.parent(t) == s

    def _handle_failed_reverse_edge(self, s: int, t: int, length: float) -> None:
        edge = Edge(StateVector.of(self.points[s]), StateVector.of(self.points[t]))
        self.ledger.failed_edges.append(edge)
        self._failed_lengths.append(length)
        if self.config.use_just_sample and self.config.per_edge > 0:
            scratch = SampleLedger(failed_edges=[edge])
            added = just_sample(
                scratch,
                self.world,
                self.informed,
                self.config.per_edge,
                self.rng,
                state_ok=self.problem.state_predicate,
            )
            self.ledger.obstacle_samples.extend(scratch.obstacle_samples)
            if added:
                self._add_points(np.array([x.coords for x in added]))
                self.rebuild_graph()
        self.restart()

    def restart(self) -> None:
        """Rebuild the reverse tree from scratch and reset the forward search."""
        self.reverse_restarts += 1
        logger.debug(
            "restarting reverse search (%d samples, %d known invalid edges)",
            self.sample_count,
            len(self._invalid),
        )
        self.reverse_search()
        self.start_forward_search()

    # ----------------------------------------------------------- ancestor edges

    def _shortcut(self, tree: SearchTree[int], x: int, full: bool) -> None:
        """Reparent x to the visible ancestor (or surrogate) giving the lowest label."""
        ok = self.full_ok if full else self.lazy_ok
        result = just_edge(
            x,
            tree,
            self.checker if full else self._lazy,
            self.config.tau,
            self.config.surrogates,
            position=lambda i: self.points[i],
            edge_ok=ok,
        )
        best = tree.label(x)
        best_parent: Optional[int] = None
        for a in result.ancestors:
            candidate = tree.label(a) + self._dist(a, x)
            if candidate < best:
                best, best_parent = candidate, a
        if result.surrogate is not None and result.surrogate_parent is not None:
            p = result.surrogate_parent
            zi = self._surrogate_index(result.surrogate)
            if zi in tree:
                # a surrogate from an earlier expansion; usable unless it hangs below x
                if x not in tree.path_to_root(zi):
                    candidate = tree.label(zi) + self._dist(zi, x)
                    if candidate < best and ok(zi, x):
                        best, best_parent = candidate, zi
            else:
                to_z = self._dist(p, zi)
                candidate = tree.label(p) + to_z + self._dist(zi, x)
                if candidate < best and ok(zi, x) and ok(p, zi):
                    tree.add(zi, p, tree.label(p) + to_z, tree.effort(p) + self._effort(to_z))
                    best, best_parent = candidate, zi
        if best_parent is not None:
            length = self._dist(best_parent, x)
            tree.reparent(
                x, best_parent, best, tree.effort(best_parent) + self._effort(length)
            )

    def _surrogate_index(self, z: np.ndarray) -> int:
        """Index of the sample at z, adding it on first sight."""
        key = z.tobytes()
        zi = self._surrogates.get(key)
        if zi is None:
            (zi,) = self._add_points(z[None, :])
            self._surrogates[key] = zi
        return zi

    # ---------------------------------------------------------------- solutions

    def _record_solution(self) -> None:
        ids = list(reversed(self.forward.path_to_root(GOAL)))
        path = Path.of(self.points[ids])
        if not path.total_cost < self.c_best:
            return
        elapsed = self.elapsed
        self.c_best = path.total_cost
        self.solution = path
        self.solution_ids = ids
        self.informed = InformedSet(self.problem.start, self.problem.goal, self.c_best)
        self.trace.append((elapsed, self.c_best))
        logger.debug("solution %.6f after %.3f s (%d waypoints)", self.c_best, elapsed, len(ids))
        if self.on_solution is not None:
            self.on_solution(path, elapsed)

    # ------------------------------------------------------------------ batches

    def prune(self) -> int:
        """Drop samples outside the informed set; start, goal and solution stay."""
        if math.isinf(self.c_best):
            return 0
        keep = prune_mask(self.points, self._start, self._goal, self.c_best)
        keep[[START, GOAL]] = True
        keep[self.solution_ids] = True
        removed = int(len(keep) - keep.sum())
        if removed == 0:
            return 0
        remap = np.cumsum(keep) - 1
        self.points = self.points[keep]
        self._g_hat = self._g_hat[keep]
        self._h_hat = self._h_hat[keep]
        self._motion = self._motion[keep]

        def move(pairs: set[tuple[int, int]]) -> set[tuple[int, int]]:
            return {(int(remap[i]), int(remap[j])) for i, j in pairs if keep[i] and keep[j]}

        self._valid = move(self._valid)
        self._invalid = move(self._invalid)
        self._surrogates = {k: int(remap[i]) for k, i in self._surrogates.items() if keep[i]}
        self._neighbours.clear()
        self.solution_ids = [int(remap[i]) for i in self.solution_ids]
        self.ledger.obstacle_samples = [
            x for x in self.ledger.obstacle_samples if self.informed.contains(x.array)
        ]
        return removed

    def new_batch(self) -> None:
        """Prune, draw a new batch of samples and restart both searches."""
        self.batches += 1
        self.iterations += 1
        removed = self.prune()
        batch = bias_sample(
            self.world,
            self.informed,
            self.config.batch_size,
            self.problem.state_predicate,
            self.rng,
        )
        self.ledger.obstacle_samples.extend(batch.obstacle_samples)
        if batch.free_samples:
            self._add_points(np.array([x.coords for x in batch.free_samples]))
        self.rebuild_graph()
        logger.debug(
            "batch %d: %d samples (%d pruned), radius %.4f",
            self.batches,
            self.sample_count,
            removed,
            self.radius,
        )
        self.reverse_search()
        self.start_forward_search()

    @property
    def optimal(self) -> bool:
        """True once the solution matches the straight start-goal distance."""
        return self.c_best <= self.informed.c_min * (1.0 + OPTIMALITY_RTOL)

    def solve(self) -> PlanResult:
        self._t0 = time.perf_counter()
        while not self.out_of_budget() and not self.optimal:
            if not could_improve_solution(self.forward_queue, self.c_best, self.heuristics):
                self.new_batch()
                continue
            self.forward_step()
        return PlanResult(
            path=self.solution,
            trace=list(self.trace),
            elapsed=self.elapsed,
            iterations=self.iterations,
            batches=self.batches,
            samples=self.sample_count,
            edge_checks=self.checker.edge_checks,
        )


class JitStarPlanner(BasePlanner):
    """Just-in-time informed trees."""

    name = "jit"

    def plan(
        self,
        problem: ProblemDefinition,
        world: ObstacleWorld,
        rng: np.random.Generator,
        on_solution: Optional[SolutionCallback] = None,
    ) -> PlanResult:
        problem.validate(world, self.config)
        search = JitStarSearch(problem, world, self.config, rng, on_solution)
        result = search.solve()
        logger.debug(
            "%s finished: cost %s, %d batches, %d iterations",
            self.name,
            f"{result.cost:.6f}" if result.success else "none",
            result.batches,
            result.iterations,
        )
        return result


def plan(
    problem: ProblemDefinition,
    w: ObstacleWorld,
    cfg: PlannerConfig,
    rng: np.random.Generator,
    on_solution: Optional[SolutionCallback] = None,
) -> PlanResult:
    """Run JIT* once with the given configuration."""
    return JitStarPlanner(cfg).plan(problem, w, rng, on_solution)


PlannerFactory.register("jit", JitStarPlanner, use_just_edge=True, use_just_sample=True)
PlannerFactory.register("ablation", JitStarPlanner, use_just_edge=False, use_just_sample=False)
PlannerFactory.register("jit-edge", JitStarPlanner, use_just_edge=True, use_just_sample=False)
PlannerFactory.register("jit-sample", JitStarPlanner, use_just_edge=False, use_just_sample=True)
