"""
Trial Executor Module

Runs isolated planner trials, serially or in a process pool, and returns their
outcomes in a scheduling-independent order.
"""

import asyncio
import logging
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from jitstar.core.state import Path
from jitstar.core.world import Scenario
from jitstar.planners.base_planner import PlannerConfig, PlannerFactory, ProblemDefinition
from jitstar.robot.kinematics import KinematicSystem
from jitstar.robot.motion_performance import ManipConfig, motion_term
from jitstar.robot.self_collision import ScdfConfig, self_collision_predicate

# registers the planner variants in worker processes
import jitstar.planners.jit_planner  # noqa: F401

logger = logging.getLogger(__name__)


class TrialStatus(Enum):
    """Status of one trial."""
    SUCCESS = "success"
    FAILED = "failed"
    ERROR = "error"


@dataclass(frozen=True)
class KinematicSetup:
    """Joint-space extras of a trial; rebuilt into predicates inside the worker."""

    system: KinematicSystem
    manip: ManipConfig = field(default_factory=ManipConfig)
    scdf: ScdfConfig = field(default_factory=ScdfConfig)


@dataclass(frozen=True)
class TrialSpec:
    """One planner run on one scenario. Picklable, so it can cross process boundaries."""

    trial: int
    planner_index: int
    label: str
    variant: str
    config: PlannerConfig
    scenario: Scenario
    seed: int
    kinematic: Optional[KinematicSetup] = None


@dataclass
class TrialOutcome:
    """Result of one trial."""

    spec: TrialSpec
    status: TrialStatus
    path: Optional[Path] = None
    trace: list[tuple[float, float]] = field(default_factory=list)
    execution_time: float = 0.0
    error: str = ""

    @property
    def success(self) -> bool:
        return self.status == TrialStatus.SUCCESS


def planner_seed(world_seed: int, label: str) -> int:
    """Seed of a planner's own RNG stream, derived from the shared world seed."""
    return int(np.random.SeedSequence([world_seed, zlib.crc32(label.encode())]).generate_state(1)[0])


def build_problem(spec: TrialSpec) -> ProblemDefinition:
    scenario = spec.scenario
    if spec.kinematic is None:
        return ProblemDefinition(scenario.start, scenario.goal)
    setup = spec.kinematic
    return ProblemDefinition(
        scenario.start,
        scenario.goal,
        state_predicate=self_collision_predicate(setup.system, setup.scdf),
        motion_term=motion_term(setup.system, setup.manip),
    )


def run_trial(spec: TrialSpec) -> TrialOutcome:
    """
    Run one trial to completion. Exceptions are caught and reported as ERROR.
    """
    start_time = time.perf_counter()
    try:
        planner = PlannerFactory.create(spec.variant, spec.config)
        if planner is None:
            raise KeyError(f"Unknown planner variant: {spec.variant}")
        rng = np.random.default_rng(planner_seed(spec.seed, spec.label))
        result = planner.plan(build_problem(spec), spec.scenario.world, rng)
        return TrialOutcome(
            spec=spec,
            status=TrialStatus.SUCCESS if result.success else TrialStatus.FAILED,
            path=result.path,
            trace=result.trace,
            execution_time=time.perf_counter() - start_time,
        )
    except Exception as e:
        logger.warning("trial %d (%s) failed: %s", spec.trial, spec.label, e)
        return TrialOutcome(
            spec=spec,
            status=TrialStatus.ERROR,
            execution_time=time.perf_counter() - start_time,
            error=str(e),
        )


class TrialExecutor:
    """Executes trials with at most ``threads`` worker processes."""

    def __init__(self, threads: int = 1):
        """
        Initialize trial executor.

        Args:
            threads: Worker processes; 1 runs every trial in this process
        """
        if threads < 1:
            raise ValueError(f"threads must be >= 1, got {threads}")
        self.threads = threads

    async def execute_all(
        self,
        specs: list[TrialSpec],
        on_trial_complete: Optional[Callable[[TrialOutcome], None]] = None,
    ) -> list[TrialOutcome]:
        """
        Run every trial and return outcomes ordered by (trial, planner).

        Args:
            specs: Trials to run
            on_trial_complete: Callback after each trial, in completion order

        Returns:
            List of TrialOutcomes
        """
        outcomes: list[TrialOutcome] = []
        if self.threads == 1:
            for spec in specs:
                outcome = run_trial(spec)
                outcomes.append(outcome)
                if on_trial_complete:
                    on_trial_complete(outcome)
        else:
            loop = asyncio.get_running_loop()
            with ProcessPoolExecutor(max_workers=self.threads) as pool:

                async def run_one(spec: TrialSpec) -> TrialOutcome:
                    outcome = await loop.run_in_executor(pool, run_trial, spec)
                    if on_trial_complete:
                        on_trial_complete(outcome)
                    return outcome

                outcomes = list(await asyncio.gather(*(run_one(s) for s in specs)))
        return sorted(outcomes, key=lambda o: (o.spec.trial, o.spec.planner_index))

    def execute(
        self,
        specs: list[TrialSpec],
        on_trial_complete: Optional[Callable[[TrialOutcome], None]] = None,
    ) -> list[TrialOutcome]:
        """Blocking wrapper around execute_all."""
        return asyncio.run(self.execute_all(specs, on_trial_complete))
