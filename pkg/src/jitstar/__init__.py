"""
jitstar - Just-in-Time Informed Trees

Asymptotically optimal sampling-based path planning with a lazy reverse search,
on-demand edge and sample repair, and manipulability-aware joint-space planning.
"""

__version__ = "0.1.0"
__author__ = "jitstar Contributors"
__license__ = "MIT"

from jitstar.core.state import Path, StateVector
from jitstar.core.world import ObstacleWorld, Scenario, build_scenario
from jitstar.planners.base_planner import PlannerConfig, PlannerFactory, ProblemDefinition
from jitstar.planners.jit_planner import JitStarPlanner, plan

__all__ = [
    "Path",
    "StateVector",
    "ObstacleWorld",
    "Scenario",
    "build_scenario",
    "PlannerConfig",
    "PlannerFactory",
    "ProblemDefinition",
    "JitStarPlanner",
    "plan",
    "__version__",
]
