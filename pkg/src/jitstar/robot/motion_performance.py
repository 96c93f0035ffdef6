"""
Motion Performance Module

Manipulability heuristics: the D_tanh penalty, the singularity gate, null-space
goal refinement and post-processing of interpolated path states.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Optional, Union

import numpy as np

from jitstar.core.state import Path, StateVector, interpolate
from jitstar.core.world import ValidityChecker
from jitstar.robot.kinematics import (
    KinematicChain,
    KinematicSystem,
    forward_kinematics,
    geometric_jacobian,
    min_singular_value,
    null_space_basis,
)

logger = logging.getLogger(__name__)

ChainLike = Union[KinematicChain, KinematicSystem]


class ManipulabilityError(ValueError):
    """Raised for invalid manipulability inputs (negative σ_min, goal outside limits)."""
    pass


@dataclass(frozen=True)
class ManipConfig:
    """Manipulability parameters."""

    eta_m: float = 0.2
    eps_div: float = 1e-6
    eps_gate: float = 0.05
    perturb_count: int = 30
    perturb_scale: float = 0.1
    gauss_mean: float = 0.5
    gauss_std: float = 0.4
    ee_drift_tol: float = 1e-4
    fd_step: float = 1e-5
    damping: float = 1e-3
    correction_steps: int = 10
    backtracks: int = 5

    def __post_init__(self) -> None:
        if not self.eta_m > 0.0:
            raise ValueError(f"eta_m must be positive, got {self.eta_m}")
        if self.eps_div < 0.0:
            raise ValueError(f"eps_div must be >= 0, got {self.eps_div}")
        for name in ("eps_gate", "perturb_scale", "ee_drift_tol", "fd_step"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.perturb_count < 0 or self.correction_steps < 1:
            raise ValueError("perturb_count must be >= 0 and correction_steps >= 1")

    @classmethod
    def from_mapping(cls, data: dict[str, Any]) -> "ManipConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


def d_tanh(sigma_min: float, cfg: ManipConfig) -> float:
    """
    tanh(η / (σ_min + ε)) / (σ_min + ε): large near singularities, vanishing as
    σ_min grows.

    Raises:
        ManipulabilityError: If σ_min < 0 or σ_min + ε == 0
    """
    if sigma_min < 0.0:
        raise ManipulabilityError(f"sigma_min must be >= 0, got {sigma_min}")
    denom = sigma_min + cfg.eps_div
    if denom == 0.0:
        raise ManipulabilityError("sigma_min + eps_div is zero; set eps_div > 0")
    return math.tanh(cfg.eta_m / denom) / denom


def near_singularity(sigma_min: float, cfg: ManipConfig) -> bool:
    """True iff σ_min <= ϵ (the boundary counts as singular)."""
    return sigma_min <= cfg.eps_gate


def motion_term(chains: ChainLike, cfg: ManipConfig) -> Callable[[np.ndarray], float]:
    """State -> D_tanh(σ_min) for the planner heuristics."""
    system = KinematicSystem.of(chains)

    def term(q: np.ndarray) -> float:
        return d_tanh(system.sigma_min(q), cfg)

    return term


def _position(ch: KinematicChain, q: np.ndarray) -> np.ndarray:
    rows = min(ch.task_dim, 3)
    return forward_kinematics(ch, q).position[:rows]


def _sigma(ch: KinematicChain, q: np.ndarray) -> float:
    return min_singular_value(geometric_jacobian(ch, q))


def _correct(ch: KinematicChain, q: np.ndarray, target: np.ndarray, cfg: ManipConfig) -> np.ndarray:
    """Damped-least-squares steps pulling the end-effector back onto target."""
    rows = min(ch.task_dim, 3)
    q = q.copy()
    for _ in range(cfg.correction_steps):
        err = target - _position(ch, q)
        if np.linalg.norm(err) <= cfg.ee_drift_tol * 0.1:
            break
        j = geometric_jacobian(ch, q)[:rows]
        q = q + j.T @ np.linalg.solve(j @ j.T + cfg.damping**2 * np.eye(rows), err)
    return q


def _acceptable(
    ch: KinematicChain, q: np.ndarray, target: np.ndarray, cfg: ManipConfig
) -> bool:
    return ch.within_limits(q) and bool(
        np.linalg.norm(_position(ch, q) - target) <= cfg.ee_drift_tol
    )


def _refine_chain_goal(
    ch: KinematicChain, q: np.ndarray, cfg: ManipConfig, rng: np.random.Generator
) -> np.ndarray:
    j = geometric_jacobian(ch, q)
    sigma = min_singular_value(j)
    if not near_singularity(sigma, cfg):
        return q
    basis = null_space_basis(j)
    if len(basis) == 0:
        return q
    target = _position(ch, q)
    best, best_sigma = q, sigma
    for _ in range(cfg.perturb_count):
        lam = rng.normal(0.0, cfg.perturb_scale, size=len(basis))
        candidate = _correct(ch, q + basis.T @ lam, target, cfg)
        if not _acceptable(ch, candidate, target, cfg):
            continue
        s = _sigma(ch, candidate)
        if s > best_sigma:
            best, best_sigma = candidate, s
    logger.debug("goal refinement: sigma_min %.3g -> %.3g", sigma, best_sigma)
    return best


def refine_goal(
    chains: ChainLike, x_goal: StateVector, cfg: ManipConfig, rng: np.random.Generator
) -> StateVector:
    """
    Move a near-singular goal through the null space to raise σ_min.

    Each chain whose σ_min passes the singularity gate gets perturbCount
    null-space perturbations, each followed by a damped-least-squares correction
    of the end-effector. Candidates that drift further than eeDriftTol or leave
    the joint limits are dropped and the best surviving σ_min wins. Chains
    without a singularity or a null space keep their joints. When nothing
    changes the input state is returned as-is.

    Raises:
        ManipulabilityError: If x_goal lies outside the joint limits
    """
    system = KinematicSystem.of(chains)
    q = x_goal.array
    if q.shape == (system.dof,) and not (
        np.all(q >= system.lower) and np.all(q <= system.upper)
    ):
        raise ManipulabilityError(f"Goal {x_goal} lies outside the joint limits")
    parts = system.split(x_goal)
    refined = [_refine_chain_goal(ch, part, cfg, rng) for ch, part in zip(system.chains, parts)]
    if all(r is p for r, p in zip(refined, parts)):
        return x_goal
    return StateVector.of(np.concatenate(refined))


def _sigma_gradient(ch: KinematicChain, q: np.ndarray, h: float) -> np.ndarray:
    grad = np.zeros_like(q)
    for i in range(len(q)):
        step = np.zeros_like(q)
        step[i] = h
        grad[i] = (_sigma(ch, q + step) - _sigma(ch, q - step)) / (2.0 * h)
    return grad


def _refine_chain_state(
    ch: KinematicChain, q: np.ndarray, cfg: ManipConfig, rng: np.random.Generator
) -> np.ndarray:
    j = geometric_jacobian(ch, q)
    projector = np.eye(ch.dof) - np.linalg.pinv(j) @ j
    direction = projector @ _sigma_gradient(ch, q, cfg.fd_step)
    if np.linalg.norm(direction) < 1e-12:
        return q
    gain = rng.normal(cfg.gauss_mean, cfg.gauss_std)
    if gain <= 0.0:
        return q
    delta = gain * direction
    norm = float(np.linalg.norm(delta))
    if norm > cfg.perturb_scale:
        delta *= cfg.perturb_scale / norm
    target = _position(ch, q)
    sigma = min_singular_value(j)
    for _ in range(cfg.backtracks + 1):
        candidate = _correct(ch, q + delta, target, cfg)
        if _acceptable(ch, candidate, target, cfg) and _sigma(ch, candidate) >= sigma:
            return candidate
        delta = delta / 2.0
    return q


def densify(path: Path, samples_per_edge: int) -> list[StateVector]:
    """Waypoints plus samples_per_edge - 1 evenly spaced states inside every edge."""
    if samples_per_edge < 1:
        raise ValueError(f"samples_per_edge must be >= 1, got {samples_per_edge}")
    states = [path.start]
    for edge in path.edges():
        for k in range(1, samples_per_edge + 1):
            states.append(interpolate(edge.source, edge.target, k / samples_per_edge))
    return states


def refine_interpolated_path(
    chains: ChainLike,
    path: Path,
    cfg: ManipConfig,
    rng: np.random.Generator,
    samples_per_edge: Optional[int] = None,
    checker: Optional[ValidityChecker] = None,
) -> Path:
    """
    Nudge interior path states along the null-space projected σ_min gradient.

    The step is the projected finite-difference gradient scaled by a Gaussian
    gain (mean μ, std τ) and capped at perturbScale. A state is replaced only if
    the end-effector stays within eeDriftTol and σ_min does not drop; otherwise
    the original state is kept. Endpoints are never touched.

    With a checker, a refined state must also be valid and reach both the
    previous output state and the next original state by valid edges. Given a
    valid input path the result is then valid too.

    Args:
        samples_per_edge: Densify each edge into this many segments before refining
        checker: Joint-space validity (limits, self-collision) for refined states
    """
    system = KinematicSystem.of(chains)
    states = densify(path, samples_per_edge) if samples_per_edge else list(path.waypoints)
    out = [states[0]]
    rejected = 0
    for x, following in zip(states[1:-1], states[2:]):
        parts = system.split(x)
        refined = [
            _refine_chain_state(ch, part, cfg, rng) for ch, part in zip(system.chains, parts)
        ]
        if all(r is p for r, p in zip(refined, parts)):
            out.append(x)
            continue
        candidate = np.concatenate(refined)
        if checker is not None and not (
            checker.state_valid(candidate)
            and checker.edge_valid(out[-1].array, candidate)
            and checker.edge_valid(candidate, following.array)
        ):
            rejected += 1
            out.append(x)
            continue
        out.append(StateVector.of(candidate))
    out.append(states[-1])
    if rejected:
        logger.debug("kept %d original states whose refinement was invalid", rejected)
    return Path(tuple(out))


def path_min_sigma(chains: ChainLike, path: Path, samples_per_edge: int = 10) -> float:
    """Minimum σ_min over densely interpolated path states."""
    system = KinematicSystem.of(chains)
    return min(system.sigma_min(x) for x in densify(path, samples_per_edge))
