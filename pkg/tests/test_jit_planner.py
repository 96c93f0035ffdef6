import math

import numpy as np
import pytest

from jitstar.core.state import Path, distance
from jitstar.core.world import (
    HyperRect,
    ObstacleWorld,
    ValidityChecker,
    build_scenario,
    default_start_goal,
)
from jitstar.planners.base_planner import (
    PlannerConfig,
    PlannerFactory,
    ProblemDefinition,
    ProblemDefinitionError,
)
from jitstar.planners.jit_planner import GOAL, START, JitStarPlanner, JitStarSearch, plan

from conftest import sv

START_2D, GOAL_2D = default_start_goal(2)


def iteration_config(**overrides) -> PlannerConfig:
    # a generous clock so the iteration budget decides where runs stop
    base = PlannerConfig(batch_size=50, max_time=60.0, max_iterations=3000)
    return base.with_overrides(**overrides)


@pytest.fixture
def thin_wall() -> ObstacleWorld:
    """A wall too thin for the lazy check, with an opening at the top."""
    wall = HyperRect.of([0.3, 0.0], [0.32, 0.9])
    return ObstacleWorld(HyperRect.of([0, 0], [1, 1]), (wall,), 0.005)


class TestEmptyWorld:
    def test_first_solution_is_straight_segment(self, unit_square, rng):
        problem = ProblemDefinition(START_2D, GOAL_2D)
        search = JitStarSearch(problem, unit_square, iteration_config(), rng)
        search.new_batch()
        search.forward_step()
        assert search.batches == 1
        assert search.solution is not None
        assert search.solution.waypoints == (START_2D, GOAL_2D)
        assert search.c_best == pytest.approx(distance(START_2D, GOAL_2D), abs=1e-9)

    def test_plan_returns_straight_segment(self, unit_square, rng):
        result = plan(ProblemDefinition(START_2D, GOAL_2D), unit_square, iteration_config(), rng)
        assert result.success
        assert result.cost == pytest.approx(0.9, abs=1e-9)
        assert result.c_init == pytest.approx(0.9, abs=1e-9)
        assert len(result.trace) == 1


class TestFailedReverseEdge:
    def _search(self, world, rng, **overrides):
        problem = ProblemDefinition(START_2D, GOAL_2D)
        search = JitStarSearch(problem, world, iteration_config(**overrides), rng)
        search.new_batch()
        return search

    def test_lazily_valid_edge_fails_full_check(self, thin_wall, rng):
        search = self._search(thin_wall, rng)
        assert search.reverse.parent(START) == GOAL
        search.forward_step()
        assert search.reverse_restarts == 1
        failed = search.ledger.failed_edges[0]
        assert {failed.source, failed.target} == {START_2D, GOAL_2D}
        assert search.solution is None

    def test_just_sample_adds_states(self, thin_wall, rng):
        search = self._search(thin_wall, rng, per_edge=10)
        before = search.sample_count
        search.forward_step()
        assert search.sample_count > before

    def test_ablation_keeps_sample_set(self, thin_wall, rng):
        search = self._search(thin_wall, rng, use_just_sample=False, use_just_edge=False)
        before = search.sample_count
        search.forward_step()
        assert search.sample_count == before
        assert search.reverse_restarts == 1

    def test_edge_is_not_tried_again(self, thin_wall, rng):
        search = self._search(thin_wall, rng, use_just_sample=False)
        search.forward_step()
        assert not search.lazy_ok(START, GOAL)
        assert START not in search.reverse or search.reverse.parent(START) != GOAL


def _tree_pairs(tree) -> set[tuple[int, int]]:
    pairs = set()
    for v in tree.vertices:
        p = tree.parent(v)
        if p is not None:
            pairs.add(JitStarSearch._pair(v, p))
    return pairs


class TestSurrogates:
    def _search(self, world, rng, **overrides):
        config = PlannerConfig(batch_size=50, max_time=60.0).with_overrides(**overrides)
        search = JitStarSearch(ProblemDefinition(START_2D, GOAL_2D), world, config, rng)
        search.new_batch()
        return search

    def test_same_coordinates_reuse_the_sample(self, thin_wall, rng):
        search = self._search(thin_wall, rng)
        before = search.sample_count
        z = np.array([0.2, 0.95])
        first = search._surrogate_index(z)
        assert search._surrogate_index(z.copy()) == first
        assert search.sample_count == before + 1

    def test_samples_stay_unique(self, thin_wall, rng):
        search = self._search(thin_wall, rng, use_just_sample=False, max_iterations=2000)
        search.solve()
        assert search.reverse_restarts >= 1
        assert len(np.unique(search.points, axis=0)) == search.sample_count

    def test_restarts_reach_a_fixed_sample_set(self, thin_wall, rng):
        search = self._search(thin_wall, rng, use_just_sample=False)
        search.forward_step()
        state = None
        for _ in range(50):
            search.restart()
            current = (search.sample_count, len(search._invalid))
            if current == state:
                break
            state = current
        else:
            pytest.fail("restarts kept adding samples")
        for _ in range(3):
            search.restart()
        assert (search.sample_count, len(search._invalid)) == state

    def test_invalid_pairs_never_rejoin_trees_or_queues(self, thin_wall, rng):
        search = self._search(thin_wall, rng, use_just_sample=False)
        for _ in range(5):
            if not search.forward_queue:
                break
            search.forward_step()
        assert JitStarSearch._pair(START, GOAL) in search._invalid
        search.restart()
        assert not _tree_pairs(search.reverse) & search._invalid
        assert not _tree_pairs(search.forward) & search._invalid
        # entries whose target already joined the reverse tree are skipped when popped
        live = {
            JitStarSearch._pair(*entry.edge)
            for entry in search.reverse_queue.entries()
            if entry.edge[1] not in search.reverse
        }
        live |= {JitStarSearch._pair(*entry.edge) for entry in search.forward_queue.entries()}
        assert not live & search._invalid

    def test_new_sample_joins_cached_neighbourhoods(self, thin_wall, rng):
        search = self._search(thin_wall, rng)
        search.neighbours(START)
        zi = search._surrogate_index(START_2D.array + np.array([0.01, 0.0]))
        assert zi in search.neighbours(START)
        assert START in search.neighbours(zi)


class TestSoundness:
    def test_emitted_paths_revalidate_and_improve(self):
        scenario = build_scenario("np", 2, seed=5)
        checker = ValidityChecker(scenario.world)
        emitted: list[Path] = []
        result = plan(
            ProblemDefinition(scenario.start, scenario.goal),
            scenario.world,
            PlannerConfig(max_time=2.0),
            np.random.default_rng(5),
            lambda path, elapsed: emitted.append(path),
        )
        assert result.success
        assert emitted[-1] is result.path
        for path in emitted:
            assert path.start == scenario.start and path.end == scenario.goal
            assert all(checker.edge_valid(e.source.array, e.target.array) for e in path.edges())
        costs = [c for _, c in result.trace]
        assert all(a > b for a, b in zip(costs, costs[1:]))
        assert [p.total_cost for p in emitted] == costs
        times = [t for t, _ in result.trace]
        assert times == sorted(times)

    def test_cost_never_below_straight_line(self):
        scenario = build_scenario("rr", 3, seed=2)
        result = plan(
            ProblemDefinition(scenario.start, scenario.goal),
            scenario.world,
            iteration_config(),
            np.random.default_rng(0),
        )
        if result.success:
            assert result.cost >= distance(scenario.start, scenario.goal) - 1e-12

    def test_identical_seeds_identical_traces(self):
        scenario = build_scenario("np", 2, seed=8)
        problem = ProblemDefinition(scenario.start, scenario.goal)
        runs = [
            plan(problem, scenario.world, iteration_config(), np.random.default_rng(21))
            for _ in range(2)
        ]
        assert [c for _, c in runs[0].trace] == [c for _, c in runs[1].trace]
        assert runs[0].path == runs[1].path
        assert runs[0].iterations == runs[1].iterations

    def test_trees_stay_acyclic(self):
        scenario = build_scenario("np", 2, seed=3)
        search = JitStarSearch(
            ProblemDefinition(scenario.start, scenario.goal),
            scenario.world,
            iteration_config(max_iterations=2000),
            np.random.default_rng(3),
        )
        search.solve()
        assert search.forward.is_acyclic()
        assert search.reverse.is_acyclic()

    @pytest.mark.slow
    def test_narrow_passage_success_rate(self):
        successes = 0
        for seed in range(50):
            scenario = build_scenario("np", 2, seed=seed)
            result = plan(
                ProblemDefinition(scenario.start, scenario.goal),
                scenario.world,
                PlannerConfig(max_time=2.0),
                np.random.default_rng(seed),
            )
            successes += result.success
        assert successes / 50 >= 0.98


class TestPrune:
    def test_keeps_start_goal_and_solution(self):
        scenario = build_scenario("np", 2, seed=1)
        search = JitStarSearch(
            ProblemDefinition(scenario.start, scenario.goal),
            scenario.world,
            PlannerConfig(max_time=2.0),
            np.random.default_rng(1),
        )
        result = search.solve()
        assert result.success
        solution = search.solution
        search.prune()
        np.testing.assert_array_equal(search.points[START], scenario.start.array)
        np.testing.assert_array_equal(search.points[GOAL], scenario.goal.array)
        np.testing.assert_array_equal(search.points[search.solution_ids], solution.as_array())
        through = np.linalg.norm(search.points - scenario.start.array, axis=1) + np.linalg.norm(
            search.points - scenario.goal.array, axis=1
        )
        outside = through > search.c_best
        outside[search.solution_ids] = False
        assert not outside.any()


class TestConfiguration:
    def test_variants_registered(self):
        assert {"jit", "ablation", "jit-edge", "jit-sample"} <= set(
            PlannerFactory.get_available_planners()
        )

    @pytest.mark.parametrize(
        "name, edge, sample",
        [("jit", True, True), ("ablation", False, False), ("jit-edge", True, False), ("jit-sample", False, True)],
    )
    def test_variant_flags(self, name, edge, sample):
        planner = PlannerFactory.create(name, PlannerConfig(use_just_edge=not edge, tau=2))
        assert isinstance(planner, JitStarPlanner)
        assert planner.config.use_just_edge is edge
        assert planner.config.use_just_sample is sample
        assert planner.config.tau == 2

    def test_unknown_variant(self):
        assert PlannerFactory.create("rrt-connect") is None
        with pytest.raises(KeyError):
            PlannerFactory.variant_config("rrt-connect")

    def test_alpha_forced_to_one_without_motion(self, unit_square, rng):
        search = JitStarSearch(
            ProblemDefinition(START_2D, GOAL_2D), unit_square, iteration_config(alpha=0.3), rng
        )
        assert search.heuristics.alpha == 1.0

    def test_alpha_used_with_motion_term(self, unit_square, rng):
        problem = ProblemDefinition(START_2D, GOAL_2D, motion_term=lambda q: 0.0)
        search = JitStarSearch(
            problem,
            unit_square,
            iteration_config(alpha=0.3, use_motion_performance=True),
            rng,
        )
        assert search.heuristics.alpha == 0.3

    @pytest.mark.parametrize(
        "field, value", [("batch_size", 0), ("alpha", 1.5), ("eta_rewire", 1.0), ("max_time", 0.0)]
    )
    def test_config_validation(self, field, value):
        with pytest.raises(ValueError):
            PlannerConfig().with_overrides(**{field: value})

    def test_from_mapping_ignores_unknown_keys(self):
        config = PlannerConfig.from_mapping({"tau": 7, "colour": "blue"})
        assert config.tau == 7


class TestProblemDefinition:
    def test_invalid_start(self, centre_block, rng):
        problem = ProblemDefinition(sv(0.5, 0.5), sv(0.9, 0.9))
        with pytest.raises(ProblemDefinitionError):
            plan(problem, centre_block, iteration_config(), rng)

    def test_dimension_mismatch(self, unit_square, rng):
        problem = ProblemDefinition(sv(0.1, 0.1, 0.1), sv(0.9, 0.9, 0.9))
        with pytest.raises(ProblemDefinitionError):
            plan(problem, unit_square, iteration_config(), rng)

    def test_motion_mode_needs_motion_term(self, unit_square, rng):
        problem = ProblemDefinition(START_2D, GOAL_2D)
        with pytest.raises(ProblemDefinitionError):
            plan(problem, unit_square, iteration_config(use_motion_performance=True), rng)

    def test_predicate_rejects_goal(self, unit_square, rng):
        problem = ProblemDefinition(START_2D, GOAL_2D, state_predicate=lambda x: x[0] < 0.9)
        with pytest.raises(ProblemDefinitionError):
            plan(problem, unit_square, iteration_config(), rng)


def test_no_solution_in_blocked_world(rng):
    wall = HyperRect.of([0.45, 0.0], [0.55, 1.0])
    world = ObstacleWorld(HyperRect.of([0, 0], [1, 1]), (wall,), 0.01)
    result = plan(
        ProblemDefinition(START_2D, GOAL_2D), world, iteration_config(max_iterations=500), rng
    )
    assert not result.success
    assert result.path is None
    assert result.trace == []
    assert math.isinf(result.cost)


def test_failed_edge_in_one_dimension(rng):
    # thin enough to pass the lazy check, so the first reverse edge fails the full one
    wall = HyperRect.of([0.3], [0.31])
    world = ObstacleWorld(HyperRect.of([0.0], [1.0]), (wall,), 0.005)
    search = JitStarSearch(
        ProblemDefinition(sv(0.05), sv(0.95)), world, iteration_config(max_iterations=300), rng
    )
    result = search.solve()
    assert search.ledger.failed_edges
    assert not result.success


def test_stops_once_straight_line_is_found(unit_square, rng):
    result = plan(
        ProblemDefinition(START_2D, GOAL_2D), unit_square, PlannerConfig(max_time=30.0), rng
    )
    assert result.batches == 1
    assert result.elapsed < 30.0
