"""
Kinematics Module

Denavit-Hartenberg serial chains: forward kinematics, geometric Jacobians,
singular values and null-space bases. Several chains sharing one joint vector
form a KinematicSystem (e.g. a dual-arm setup).
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path as FilePath
from typing import Any, Iterable, Sequence, Union

import numpy as np

from jitstar.core.state import StateVector

TASK_ROWS = {2: [0, 1], 3: [0, 1, 2], 6: [0, 1, 2, 3, 4, 5]}
RANK_TOLERANCE = 1e-9


class KinematicsError(ValueError):
    """Raised on joint-vector dimension mismatches and malformed chains."""
    pass


class ChainLoadError(Exception):
    """Raised when a chain description cannot be read or parsed."""
    pass


class JointType(Enum):
    """Joint type."""
    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"


@dataclass(frozen=True)
class DHLink:
    """Standard (distal) DH parameters of one link."""

    a: float
    alpha: float
    d: float = 0.0
    theta_offset: float = 0.0
    joint_type: JointType = JointType.REVOLUTE

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.a, self.alpha, self.d, self.theta_offset)):
            raise KinematicsError(f"Non-finite DH parameters in {self}")

    def transform(self, q: float) -> np.ndarray:
        """Homogeneous transform from frame i-1 to frame i for joint value q."""
        theta, d = self.theta_offset, self.d
        if self.joint_type is JointType.REVOLUTE:
            theta += q
        else:
            d += q
        ct, st = math.cos(theta), math.sin(theta)
        ca, sa = math.cos(self.alpha), math.sin(self.alpha)
        return np.array(
            [
                [ct, -st * ca, st * sa, self.a * ct],
                [st, ct * ca, -ct * sa, self.a * st],
                [0.0, sa, ca, d],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )


@dataclass(frozen=True)
class Pose:
    """End-effector pose plus every joint frame (base frame first)."""

    position: np.ndarray
    rotation: np.ndarray
    frames: tuple[np.ndarray, ...]

    @property
    def origins(self) -> np.ndarray:
        """Joint frame origins p_0 .. p_n, shape (n + 1, 3)."""
        return np.array([f[:3, 3] for f in self.frames])


@dataclass(frozen=True)
class KinematicChain:
    """
    Serial chain of DH links.

    Args:
        links: Links from base to tip
        base: 4x4 base transform
        task_dim: Jacobian rows kept (2 planar position, 3 position, 6 full twist)
        limits: Per-joint (lower, upper) bounds; [-π, π] for every joint by default
    """

    links: tuple[DHLink, ...]
    base: np.ndarray = field(default_factory=lambda: np.eye(4))
    task_dim: int = 2
    limits: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if len(self.links) == 0:
            raise KinematicsError("A chain needs at least one link")
        if self.task_dim not in TASK_ROWS:
            raise KinematicsError(f"task_dim must be 2, 3 or 6, got {self.task_dim}")
        base = np.asarray(self.base, dtype=np.float64)
        if base.shape != (4, 4):
            raise KinematicsError(f"Base transform must be 4x4, got {base.shape}")
        object.__setattr__(self, "base", base)
        if not self.limits:
            object.__setattr__(self, "limits", tuple((-math.pi, math.pi) for _ in self.links))
        if len(self.limits) != len(self.links):
            raise KinematicsError(
                f"{len(self.limits)} joint limits for {len(self.links)} links"
            )

    @property
    def dof(self) -> int:
        return len(self.links)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.limits])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.limits])

    def within_limits(self, q: np.ndarray) -> bool:
        return bool(np.all(q >= self.lower) and np.all(q <= self.upper))

    def to_dict(self) -> dict[str, Any]:
        return {
            "convention": "standard-dh",
            "task_dim": self.task_dim,
            "base": [float(v) for v in self.base.reshape(-1)],
            "links": [
                {
                    "a": link.a,
                    "alpha": link.alpha,
                    "d": link.d,
                    "theta_offset": link.theta_offset,
                    "type": link.joint_type.value,
                }
                for link in self.links
            ],
            "limits": [list(lim) for lim in self.limits],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "KinematicChain":
        """
        Raises:
            ChainLoadError: If the description is malformed
        """
        convention = data.get("convention", "standard-dh")
        if convention != "standard-dh":
            raise ChainLoadError(f"Unsupported convention: {convention}")
        try:
            links = tuple(
                DHLink(
                    a=float(item["a"]),
                    alpha=float(item["alpha"]),
                    d=float(item.get("d", 0.0)),
                    theta_offset=float(item.get("theta_offset", 0.0)),
                    joint_type=JointType(item.get("type", "revolute")),
                )
                for item in data["links"]
            )
            base = np.array(data.get("base", np.eye(4).reshape(-1)), dtype=np.float64)
            limits = tuple(
                (float(lo), float(hi)) for lo, hi in data.get("limits", [])
            )
            return cls(links, base.reshape(4, 4), int(data.get("task_dim", 2)), limits)
        except (KeyError, TypeError, ValueError) as e:
            raise ChainLoadError(f"Malformed chain description: {e}") from e

    @classmethod
    def planar(
        cls, lengths: Sequence[float], origin: Sequence[float] = (0.0, 0.0)
    ) -> "KinematicChain":
        """Planar revolute chain with the given link lengths and base position."""
        base = np.eye(4)
        base[0, 3], base[1, 3] = origin
        return cls(tuple(DHLink(a=float(l), alpha=0.0) for l in lengths), base, task_dim=2)


def _joints(ch: KinematicChain, q: Union[StateVector, np.ndarray, Sequence[float]]) -> np.ndarray:
    values = q.array if isinstance(q, StateVector) else np.asarray(q, dtype=np.float64)
    if values.shape != (ch.dof,):
        raise KinematicsError(f"Chain has {ch.dof} joints, got a vector of shape {values.shape}")
    return values


def forward_kinematics(ch: KinematicChain, q) -> Pose:
    """
    Compose the DH transforms onto the base transform.

    Raises:
        KinematicsError: If q does not match the number of links
    """
    values = _joints(ch, q)
    frames = [ch.base]
    current = ch.base
    for link, value in zip(ch.links, values):
        current = current @ link.transform(float(value))
        frames.append(current)
    return Pose(current[:3, 3].copy(), current[:3, :3].copy(), tuple(frames))


def geometric_jacobian(ch: KinematicChain, q) -> np.ndarray:
    """
    Geometric Jacobian truncated to the chain's task rows.

    Revolute column i is [z_{i-1} × (p_e − p_{i-1}); z_{i-1}], prismatic column is
    [z_{i-1}; 0].
    """
    pose = forward_kinematics(ch, q)
    full = np.zeros((6, ch.dof))
    for i, link in enumerate(ch.links):
        frame = pose.frames[i]
        z = frame[:3, 2]
        if link.joint_type is JointType.REVOLUTE:
            full[:3, i] = np.cross(z, pose.position - frame[:3, 3])
            full[3:, i] = z
        else:
            full[:3, i] = z
    return full[TASK_ROWS[ch.task_dim], :]


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray

    @property
    def v(self) -> np.ndarray:
        return self.vt.T


def svd(jacobian: np.ndarray) -> SvdResult:
    """Full SVD, singular values in descending order."""
    u, s, vt = np.linalg.svd(np.atleast_2d(jacobian), full_matrices=True)
    return SvdResult(u, s, vt)


def min_singular_value(jacobian: np.ndarray) -> float:
    """
    Smallest of the min(m, n) singular values.

    For m >= n this is min over unit v of ‖Jv‖; a redundant (wide) Jacobian is
    measured over its task-space directions only.
    """
    s = np.linalg.svd(np.atleast_2d(jacobian), compute_uv=False)
    return float(s[-1]) if len(s) else 0.0


def numerical_rank(s: np.ndarray) -> int:
    if len(s) == 0:
        return 0
    return int(np.sum(s > RANK_TOLERANCE * s[0]))


def null_space_basis(jacobian: np.ndarray) -> np.ndarray:
    """Rows spanning the null space of J (shape (d, n), possibly empty)."""
    result = svd(jacobian)
    rank = numerical_rank(result.s)
    return result.vt[rank:, :]


def yoshikawa(jacobian: np.ndarray) -> float:
    """Yoshikawa manipulability √det(J Jᵀ)."""
    j = np.atleast_2d(jacobian)
    return math.sqrt(max(float(np.linalg.det(j @ j.T)), 0.0))


@dataclass(frozen=True)
class KinematicSystem:
    """One or more chains driven by a single joint vector, partitioned in order."""

    chains: tuple[KinematicChain, ...]

    def __post_init__(self) -> None:
        if len(self.chains) == 0:
            raise KinematicsError("A kinematic system needs at least one chain")

    @classmethod
    def of(cls, chains: Union[KinematicChain, Iterable[KinematicChain]]) -> "KinematicSystem":
        if isinstance(chains, KinematicSystem):
            return chains
        if isinstance(chains, KinematicChain):
            return cls((chains,))
        return cls(tuple(chains))

    @property
    def dof(self) -> int:
        return sum(ch.dof for ch in self.chains)

    @property
    def lower(self) -> np.ndarray:
        return np.concatenate([ch.lower for ch in self.chains])

    @property
    def upper(self) -> np.ndarray:
        return np.concatenate([ch.upper for ch in self.chains])

    def split(self, q) -> list[np.ndarray]:
        values = q.array if isinstance(q, StateVector) else np.asarray(q, dtype=np.float64)
        if values.shape != (self.dof,):
            raise KinematicsError(
                f"System has {self.dof} joints, got a vector of shape {values.shape}"
            )
        out, offset = [], 0
        for ch in self.chains:
            out.append(values[offset:offset + ch.dof])
            offset += ch.dof
        return out

    def sigma_min_per_chain(self, q) -> list[float]:
        return [
            min_singular_value(geometric_jacobian(ch, part))
            for ch, part in zip(self.chains, self.split(q))
        ]

    def sigma_min(self, q) -> float:
        return min(self.sigma_min_per_chain(q))

    def end_effectors(self, q) -> list[np.ndarray]:
        return [
            forward_kinematics(ch, part).position for ch, part in zip(self.chains, self.split(q))
        ]

    def to_dict(self) -> dict[str, Any]:
        return {"chains": [ch.to_dict() for ch in self.chains]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "KinematicSystem":
        if "chains" in data:
            return cls(tuple(KinematicChain.from_dict(item) for item in data["chains"]))
        return cls((KinematicChain.from_dict(data),))


def load_system(path: Union[str, FilePath]) -> KinematicSystem:
    """
    Load a chain (or a {"chains": [...]} system) from JSON.

    Raises:
        ChainLoadError: If the file cannot be read or parsed
    """
    path = FilePath(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ChainLoadError(f"Failed to load chain file {path}: {e}") from e
    try:
        return KinematicSystem.from_dict(data)
    except ChainLoadError as e:
        raise ChainLoadError(f"{path}: {e}") from e
    except KinematicsError as e:
        raise ChainLoadError(f"{path}: {e}") from e
