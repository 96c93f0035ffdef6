"""
Base Planner Module

Abstract base class for all planners, the problem/result types they share and the
factory that resolves named planner variants.
"""

import dataclasses
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from jitstar.core.state import Path, StateVector
from jitstar.core.world import ObstacleWorld, ValidityChecker

StatePredicate = Callable[[np.ndarray], bool]
MotionTerm = Callable[[np.ndarray], float]
SolutionCallback = Callable[[Path, float], None]


class ProblemDefinitionError(ValueError):
    """Raised when a planning problem is malformed (invalid start/goal, missing chain)."""
    pass


@dataclass(frozen=True)
class PlannerConfig:
    """Planner parameters."""

    batch_size: int = 100
    tau: int = 5
    surrogates: int = 3
    per_edge: int = 10
    alpha: float = 1.0
    eta_rewire: float = 1.001
    max_time: float = 1.0
    max_iterations: Optional[int] = None
    use_just_edge: bool = True
    use_just_sample: bool = True
    use_motion_performance: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.surrogates < 0 or self.per_edge < 0:
            raise ValueError("surrogates and per_edge must be >= 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.eta_rewire > 1.0:
            raise ValueError(f"eta_rewire must be > 1, got {self.eta_rewire}")
        if not self.max_time > 0.0:
            raise ValueError(f"max_time must be positive, got {self.max_time}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")

    def with_overrides(self, **overrides: Any) -> "PlannerConfig":
        """Copy with the given fields replaced; None values are ignored."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "PlannerConfig":
        """Build from a config mapping, ignoring keys that are not config fields."""
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


@dataclass(frozen=True)
class ProblemDefinition:
    """
    A single-query planning problem.

    Args:
        start: Start state
        goal: Goal state (pre-refined in motion-performance mode)
        state_predicate: Extra state validity test, e.g. self-collision
        motion_term: State -> D_tanh value; required for motion-performance mode
    """

    start: StateVector
    goal: StateVector
    state_predicate: Optional[StatePredicate] = None
    motion_term: Optional[MotionTerm] = None

    def checker(self, world: ObstacleWorld) -> ValidityChecker:
        return ValidityChecker(world, self.state_predicate)

    def validate(self, world: ObstacleWorld, config: PlannerConfig) -> None:
        """
        Raises:
            ProblemDefinitionError: If start or goal is invalid, dimensions
                disagree, or motion-performance mode has no motion term
        """
        if self.start.dim != world.dim or self.goal.dim != world.dim:
            raise ProblemDefinitionError(
                f"Start/goal dimensions {self.start.dim}/{self.goal.dim} "
                f"do not match the {world.dim}-D world"
            )
        checker = self.checker(world)
        if not checker.state_valid(self.start.array):
            raise ProblemDefinitionError(f"Start state {self.start} is invalid")
        if not checker.state_valid(self.goal.array):
            raise ProblemDefinitionError(f"Goal state {self.goal} is invalid")
        if config.use_motion_performance and self.motion_term is None:
            raise ProblemDefinitionError(
                "Motion-performance mode needs a kinematic chain (motion_term)"
            )


@dataclass
class PlanResult:
    """Outcome of one planner run."""

    path: Optional[Path]
    trace: list[tuple[float, float]] = field(default_factory=list)
    elapsed: float = 0.0
    iterations: int = 0
    batches: int = 0
    samples: int = 0
    edge_checks: int = 0

    @property
    def success(self) -> bool:
        return self.path is not None

    @property
    def cost(self) -> float:
        return self.path.total_cost if self.path is not None else math.inf

    @property
    def t_init(self) -> Optional[float]:
        return self.trace[0][0] if self.trace else None

    @property
    def c_init(self) -> Optional[float]:
        return self.trace[0][1] if self.trace else None


class BasePlanner(ABC):
    """Abstract base class for planners."""

    name: str = "base"

    def __init__(self, config: Optional[PlannerConfig] = None):
        """
        Initialize planner.

        Args:
            config: Planner parameters (defaults when omitted)
        """
        self.config = config or PlannerConfig()

    @abstractmethod
    def plan(
        self,
        problem: ProblemDefinition,
        world: ObstacleWorld,
        rng: np.random.Generator,
        on_solution: Optional[SolutionCallback] = None,
    ) -> PlanResult:
        """
        Solve a problem until the time or iteration budget runs out.

        Args:
            problem: Start/goal and optional predicates
            world: Obstacle world
            rng: Random generator owned by this run
            on_solution: Called with (path, elapsed) on every strictly cheaper solution

        Returns:
            PlanResult holding the last emitted path (or None) and the cost trace
        """
        pass


class PlannerFactory:
    """Factory for creating planner instances from registered variant names."""

    _variants: dict[str, tuple[type[BasePlanner], dict[str, Any]]] = {}

    @classmethod
    def register(cls, name: str, planner_class: type[BasePlanner], **overrides: Any) -> None:
        """
        Register a planner variant.

        Args:
            name: Variant name (jit, ablation, ...)
            planner_class: Planner class
            **overrides: PlannerConfig fields fixed by this variant
        """
        cls._variants[name] = (planner_class, overrides)

    @classmethod
    def create(cls, name: str, config: Optional[PlannerConfig] = None) -> Optional[BasePlanner]:
        """
        Create a planner for a variant; its fixed overrides win over ``config``.

        Returns:
            Planner instance or None if the variant is not registered
        """
        entry = cls._variants.get(name)
        if entry is None:
            return None
        planner_class, overrides = entry
        base = config or PlannerConfig()
        return planner_class(base.with_overrides(**overrides))

    @classmethod
    def variant_config(cls, name: str, config: Optional[PlannerConfig] = None) -> PlannerConfig:
        """Effective configuration of a variant."""
        entry = cls._variants.get(name)
        if entry is None:
            raise KeyError(f"Unknown planner variant: {name}")
        return (config or PlannerConfig()).with_overrides(**entry[1])

    @classmethod
    def get_available_planners(cls) -> list[str]:
        """Get list of registered planner variants."""
        return list(cls._variants.keys())
