"""
Benchmark Harness Module

Paired-seed planner comparisons on generated scenarios and on joint-space
manipulator problems.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np

from jitstar.core.state import Path, StateVector, distance, path_cost
from jitstar.core.world import HyperRect, ObstacleWorld, Scenario, ValidityChecker, build_scenario
from jitstar.bench.executor import KinematicSetup, TrialExecutor, TrialOutcome, TrialSpec
from jitstar.planners.base_planner import PlannerConfig
from jitstar.robot.kinematics import KinematicSystem
from jitstar.robot.motion_performance import ManipConfig, path_min_sigma, refine_goal
from jitstar.robot.self_collision import ScdfConfig, self_collision_predicate

logger = logging.getLogger(__name__)

GOAL_TOLERANCE = 0.01
JOINT_RESOLUTION = 0.05


@dataclass(frozen=True)
class PlannerEntry:
    """A planner under comparison: display label, factory variant and configuration."""

    label: str
    variant: str
    config: PlannerConfig = field(default_factory=PlannerConfig)


@dataclass
class RunRecord:
    """One benchmark trial."""

    scenario: str
    dim: int
    planner: str
    seed: int
    t_init: Optional[float] = None
    c_init: Optional[float] = None
    c_final: Optional[float] = None
    success: bool = False
    trace: list[tuple[float, float]] = field(default_factory=list)
    min_sigma: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {
            "scenario": self.scenario,
            "dim": self.dim,
            "planner": self.planner,
            "seed": self.seed,
            "t_init": self.t_init,
            "c_init": self.c_init,
            "c_final": self.c_final,
            "success": self.success,
            "trace": [[t, c] for t, c in self.trace],
        }
        if self.min_sigma is not None:
            data["min_sigma"] = self.min_sigma
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunRecord":
        return cls(
            scenario=data["scenario"],
            dim=int(data["dim"]),
            planner=data["planner"],
            seed=int(data["seed"]),
            t_init=data.get("t_init"),
            c_init=data.get("c_init"),
            c_final=data.get("c_final"),
            success=bool(data.get("success", False)),
            trace=[(float(t), float(c)) for t, c in data.get("trace", [])],
            min_sigma=data.get("min_sigma"),
        )


def revalidate(path: Path, checker: ValidityChecker, goal: StateVector) -> bool:
    """Fully re-check a reported path and its terminal waypoint."""
    if distance(path.end, goal) > GOAL_TOLERANCE:
        return False
    if not checker.state_valid(path.start.array):
        return False
    return all(checker.edge_valid(e.source.array, e.target.array) for e in path.edges())


def make_record(
    outcome: TrialOutcome,
    scenario_name: str,
    checker: ValidityChecker,
    system: Optional[KinematicSystem] = None,
) -> RunRecord:
    spec = outcome.spec
    record = RunRecord(
        scenario=scenario_name,
        dim=spec.scenario.world.dim,
        planner=spec.label,
        seed=spec.seed,
    )
    if outcome.path is None or not outcome.trace:
        return record
    if not revalidate(outcome.path, checker, spec.scenario.goal):
        logger.warning("trial %d (%s): reported path failed revalidation", spec.trial, spec.label)
        return record
    record.success = True
    record.t_init, record.c_init = outcome.trace[0]
    record.c_final = path_cost(outcome.path)
    record.trace = list(outcome.trace)
    if system is not None:
        record.min_sigma = path_min_sigma(system, outcome.path)
    return record


def _scenario_for(scenario: Union[str, Scenario], dim: int, seed: int, params) -> Scenario:
    if isinstance(scenario, Scenario):
        return scenario
    return build_scenario(scenario, dim, seed, params)


def run_benchmark(
    scenario: Union[str, Scenario],
    dim: int,
    planners: Sequence[PlannerEntry],
    trials: int,
    max_time: float,
    base_seed: int,
    params: Optional[dict[str, Any]] = None,
    threads: int = 1,
    on_trial_complete: Optional[Callable[[TrialOutcome], None]] = None,
) -> list[RunRecord]:
    """
    Paired-seed benchmark.

    Trial t builds its world from seed base_seed + t and hands the identical
    scenario to every planner; each planner draws from its own RNG stream derived
    from that seed. A run succeeds when its path ends within 0.01 of the goal and
    passes a full revalidation; c_final is recomputed from the revalidated path.

    Args:
        scenario: "np", "rr", "empty" or a loaded Scenario (reused for every trial)
        dim: Dimension of generated scenarios
        planners: Planners to compare
        trials: Number of trials (>= 1)
        max_time: Per-run time budget in seconds
        base_seed: Seed of trial 0
        params: Generator parameters
        threads: Worker processes

    Returns:
        Records ordered by (trial, planner)
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    specs: list[TrialSpec] = []
    scenarios: list[Scenario] = []
    for t in range(trials):
        seed = base_seed + t
        built = _scenario_for(scenario, dim, seed, params)
        scenarios.append(built)
        for i, entry in enumerate(planners):
            specs.append(
                TrialSpec(
                    trial=t,
                    planner_index=i,
                    label=entry.label,
                    variant=entry.variant,
                    config=entry.config.with_overrides(max_time=max_time),
                    scenario=built,
                    seed=seed,
                )
            )
    outcomes = TrialExecutor(threads).execute(specs, on_trial_complete)
    name = scenario.name if isinstance(scenario, Scenario) else scenario
    return [
        make_record(o, name, ValidityChecker(scenarios[o.spec.trial].world))
        for o in outcomes
    ]


def joint_space_world(system: KinematicSystem, resolution: float = JOINT_RESOLUTION) -> ObstacleWorld:
    """Obstacle-free world spanning the joint limits."""
    return ObstacleWorld(HyperRect.of(system.lower, system.upper), (), resolution)


def default_kinematic_planners(base: Optional[PlannerConfig] = None) -> list[PlannerEntry]:
    """Manipulability-aware JIT* (α = 0.7) against the purely geometric key (α = 1)."""
    base = base or PlannerConfig()
    return [
        PlannerEntry("jit-manip", "jit", base.with_overrides(alpha=0.7, use_motion_performance=True)),
        PlannerEntry(
            "jit-geometric", "jit", base.with_overrides(alpha=1.0, use_motion_performance=False)
        ),
    ]


def run_kinematic_benchmark(
    system: KinematicSystem,
    start: StateVector,
    goal: StateVector,
    planners: Sequence[PlannerEntry],
    trials: int,
    max_time: float,
    base_seed: int,
    manip: Optional[ManipConfig] = None,
    scdf: Optional[ScdfConfig] = None,
    threads: int = 1,
    name: str = "kinematic",
) -> list[RunRecord]:
    """
    Paired-seed joint-space benchmark with the self-collision predicate active.

    The goal of trial t is refined once with seed base_seed + t and shared by every
    planner. Records carry the minimum σ_min along the solution path.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    manip = manip or ManipConfig()
    scdf = scdf or ScdfConfig()
    world = joint_space_world(system)
    setup = KinematicSetup(system, manip, scdf)
    checker = ValidityChecker(world, self_collision_predicate(system, scdf))
    specs: list[TrialSpec] = []
    for t in range(trials):
        seed = base_seed + t
        refined = refine_goal(system, goal, manip, np.random.default_rng(seed))
        scenario = Scenario(world, start, refined, name)
        for i, entry in enumerate(planners):
            specs.append(
                TrialSpec(
                    trial=t,
                    planner_index=i,
                    label=entry.label,
                    variant=entry.variant,
                    config=entry.config.with_overrides(max_time=max_time),
                    scenario=scenario,
                    seed=seed,
                    kinematic=setup,
                )
            )
    outcomes = TrialExecutor(threads).execute(specs)
    return [make_record(o, name, checker, system) for o in outcomes]
