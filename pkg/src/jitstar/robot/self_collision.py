"""
Self-Collision Module

Closed-form segment-segment distance, self-collision danger fields over link
segments and the state predicate used to reject self-colliding samples.
"""

import dataclasses
import itertools
import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from jitstar.robot.kinematics import KinematicSystem, forward_kinematics
from jitstar.robot.motion_performance import ChainLike

SINGULAR_TOLERANCE = 1e-12


@dataclass(frozen=True)
class LinkSegment:
    """A link as the segment between two consecutive joint origins."""

    p1: np.ndarray
    p2: np.ndarray

    @classmethod
    def of(cls, p1: Sequence[float], p2: Sequence[float]) -> "LinkSegment":
        return cls(np.asarray(p1, dtype=np.float64), np.asarray(p2, dtype=np.float64))

    def at(self, u: float) -> np.ndarray:
        return self.p1 + u * (self.p2 - self.p1)


@dataclass(frozen=True)
class ScdfConfig:
    """Danger-field parameters: gain κ and collision tolerance λ."""

    kappa: float = 0.001
    lambda_tol: float = 0.018

    def __post_init__(self) -> None:
        if not self.kappa > 0.0 or not self.lambda_tol > 0.0:
            raise ValueError("kappa and lambda_tol must be positive")

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ScdfConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


def _clamp(u: float) -> float:
    return min(1.0, max(0.0, u))


def segment_distance_squared(p: LinkSegment, q: LinkSegment) -> tuple[float, float, float]:
    """
    Minimum squared distance between two segments.

    With P(u1) = P1 + u1·d1 and Q(u2) = Q1 + u2·d2, the squared distance is the
    quadratic α·u1² + β·u2² + γ·u1·u2 + δ·u1 + ε·u2 + ζ. Its critical point solves
    [[2α, γ], [γ, 2β]]·(u1, u2) = (−δ, −ε). When that system is near-singular or
    the critical point leaves the unit square, the four corners and the four
    clamped-edge minimizers are compared instead.

    Returns:
        (d_sq, u1, u2) with d_sq == ‖P(u1) − Q(u2)‖²
    """
    d1 = p.p2 - p.p1
    d2 = q.p2 - q.p1
    r = p.p1 - q.p1
    alpha = float(d1 @ d1)
    beta = float(d2 @ d2)
    gamma = -2.0 * float(d1 @ d2)
    delta = 2.0 * float(r @ d1)
    eps = -2.0 * float(r @ d2)

    def dist_sq(u1: float, u2: float) -> float:
        diff = p.at(u1) - q.at(u2)
        return float(diff @ diff)

    det = 4.0 * alpha * beta - gamma * gamma
    if abs(det) > SINGULAR_TOLERANCE * max(1.0, alpha * beta):
        u1 = (-2.0 * beta * delta + gamma * eps) / det
        u2 = (-2.0 * alpha * eps + gamma * delta) / det
        if 0.0 <= u1 <= 1.0 and 0.0 <= u2 <= 1.0:
            return dist_sq(u1, u2), u1, u2

    def best_u2(u1: float) -> float:
        return _clamp(-(gamma * u1 + eps) / (2.0 * beta)) if beta > 0.0 else 0.0

    def best_u1(u2: float) -> float:
        return _clamp(-(gamma * u2 + delta) / (2.0 * alpha)) if alpha > 0.0 else 0.0

    candidates = [
        (0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0),
        (0.0, best_u2(0.0)), (1.0, best_u2(1.0)),
        (best_u1(0.0), 0.0), (best_u1(1.0), 1.0),
    ]
    best = min(candidates, key=lambda uv: dist_sq(*uv))
    return dist_sq(*best), best[0], best[1]


def _risk(d_sq: float, cfg: ScdfConfig) -> float:
    if d_sq <= 0.0:
        return math.inf
    return cfg.kappa / math.sqrt(d_sq)


def scdf_between_arms(
    arm_a: Sequence[LinkSegment], arm_b: Sequence[LinkSegment], cfg: ScdfConfig
) -> float:
    """Σ κ/√d* over every cross-arm link pair; infinite when two links touch."""
    return sum(
        _risk(segment_distance_squared(a, b)[0], cfg) for a in arm_a for b in arm_b
    )


def scdf_within_arm(links: Sequence[LinkSegment], cfg: ScdfConfig) -> float:
    """Σ κ/√d* over link pairs (i, i + 2); adjacent links are not compared."""
    return sum(
        _risk(segment_distance_squared(links[i], links[i + 2])[0], cfg)
        for i in range(len(links) - 2)
    )


def link_segments(chains: ChainLike, q) -> list[list[LinkSegment]]:
    """Link segments of every chain, from consecutive joint origins."""
    system = KinematicSystem.of(chains)
    arms = []
    for ch, part in zip(system.chains, system.split(q)):
        origins = forward_kinematics(ch, part).origins
        arms.append([LinkSegment(a, b) for a, b in zip(origins, origins[1:])])
    return arms


def _exceeds(pairs, cfg: ScdfConfig) -> bool:
    total = 0.0
    for a, b in pairs:
        risk = _risk(segment_distance_squared(a, b)[0], cfg)
        if risk >= cfg.lambda_tol:
            return True
        total += risk
        if total >= cfg.lambda_tol:
            return True
    return False


def is_self_collision_free(chains: ChainLike, q, cfg: ScdfConfig) -> bool:
    """
    Accept q when neither any arm's own danger field nor any arm pair's reaches λ.

    Sums stop early once a single pair or the running total reaches λ; every term
    is positive so the outcome equals comparing the full sums.

    Raises:
        KinematicsError: If q does not partition across the chains
    """
    arms = link_segments(chains, q)
    for links in arms:
        within = ((links[i], links[i + 2]) for i in range(len(links) - 2))
        if _exceeds(within, cfg):
            return False
    for arm_a, arm_b in itertools.combinations(arms, 2):
        if _exceeds(((a, b) for a in arm_a for b in arm_b), cfg):
            return False
    return True


def self_collision_predicate(chains: ChainLike, cfg: ScdfConfig) -> Callable[[np.ndarray], bool]:
    """State predicate for ValidityChecker and bias sampling."""
    system = KinematicSystem.of(chains)

    def predicate(q: np.ndarray) -> bool:
        return is_self_collision_free(system, q, cfg)

    return predicate
