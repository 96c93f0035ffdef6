"""Shared fixtures."""

import numpy as np
import pytest

from jitstar.core.state import StateVector
from jitstar.core.world import HyperRect, ObstacleWorld
from jitstar.robot.kinematics import KinematicChain, KinematicSystem


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def unit_square() -> ObstacleWorld:
    return ObstacleWorld(HyperRect.of([0.0, 0.0], [1.0, 1.0]), (), 0.01)


@pytest.fixture
def centre_block() -> ObstacleWorld:
    """Unit square with the box [0.4, 0.6]² in the middle."""
    return ObstacleWorld(
        HyperRect.of([0.0, 0.0], [1.0, 1.0]),
        (HyperRect.of([0.4, 0.4], [0.6, 0.6]),),
        0.01,
    )


@pytest.fixture
def planar_2r() -> KinematicChain:
    return KinematicChain.planar([1.0, 1.0])


@pytest.fixture
def planar_3r() -> KinematicChain:
    return KinematicChain.planar([0.5, 0.5, 0.5])


@pytest.fixture
def dual_3r() -> KinematicSystem:
    return KinematicSystem.of(
        [
            KinematicChain.planar([0.5, 0.5, 0.5], origin=(0.0, 0.0)),
            KinematicChain.planar([0.5, 0.5, 0.5], origin=(2.0, 0.0)),
        ]
    )


def sv(*coords: float) -> StateVector:
    return StateVector.of(coords)
