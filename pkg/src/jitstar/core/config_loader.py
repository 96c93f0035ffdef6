"""
Configuration Loader Module

Loads and merges YAML planner profiles and scenario presets, and resolves chain
and goal files from the project data directory.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from jitstar.core.state import StateVector
from jitstar.planners.base_planner import PlannerConfig
from jitstar.robot.motion_performance import ManipConfig
from jitstar.robot.self_collision import ScdfConfig

THREADS_ENV = "JIT_THREADS"
DEFAULT_MAX_TIME = 1.0


class ConfigLoadError(Exception):
    """Raised when configuration loading fails."""
    pass


@dataclass
class ScenarioPreset:
    """Generator parameters and per-dimension time budgets of a scenario family."""

    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    max_time: dict[int, float] = field(default_factory=dict)
    max_time_fallback: float = DEFAULT_MAX_TIME

    def max_time_for(self, dim: int) -> float:
        return self.max_time.get(dim, self.max_time_fallback)


def merge_configs(common: Mapping[str, Any], specific: Mapping[str, Any]) -> dict[str, Any]:
    """
    Merge two config mappings; specific values win.

    Nested mappings are merged one level deep, so a profile can override a single
    key of a section without restating the rest.
    """
    merged: dict[str, Any] = {k: (dict(v) if isinstance(v, dict) else v) for k, v in common.items()}
    for key, value in specific.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


def threads_from_env(env: Optional[Mapping[str, str]] = None) -> int:
    """
    Harness parallelism cap from JIT_THREADS (default 1).

    Raises:
        ConfigLoadError: If the value is not an integer >= 1
    """
    env = os.environ if env is None else env
    raw = env.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        threads = int(raw)
    except ValueError as e:
        raise ConfigLoadError(f"{THREADS_ENV} must be an integer, got {raw!r}") from e
    if threads < 1:
        raise ConfigLoadError(f"{THREADS_ENV} must be >= 1, got {threads}")
    return threads


class ConfigLoader:
    """Loads and manages configuration files."""

    def __init__(self, config_dir: Optional[Path] = None):
        """
        Initialize the configuration loader.

        Args:
            config_dir: Path to configuration directory (defaults to the project data/)
        """
        if config_dir is None:
            # src/jitstar/core/config_loader.py -> project root
            package_root = Path(__file__).parent.parent.parent.parent
            self.config_dir = package_root / "data"
        else:
            self.config_dir = Path(config_dir)

        self.planners_dir = self.config_dir / "planners"
        self.scenarios_dir = self.config_dir / "scenarios"
        self.chains_dir = self.config_dir / "chains"
        self.goals_dir = self.config_dir / "goals"

    def load_yaml(self, file_path: Path) -> dict[str, Any]:
        """
        Load a YAML file; a missing file yields an empty mapping.

        Raises:
            ConfigLoadError: If the file cannot be read or parsed
        """
        try:
            if not file_path.exists():
                return {}
            with open(file_path, "r") as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigLoadError(f"Error parsing YAML file {file_path}: {e}") from e
        except OSError as e:
            raise ConfigLoadError(f"Error loading {file_path}: {e}") from e
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigLoadError(f"{file_path} must hold a mapping at the top level")
        return data

    def planner_settings(self, profile: Optional[str] = None) -> dict[str, Any]:
        """Common planner settings merged with an optional profile (profile wins)."""
        common = self.load_yaml(self.planners_dir / "common.yaml")
        if profile is None:
            return common
        profile_file = self.planners_dir / f"{profile}.yaml"
        if not profile_file.exists():
            raise ConfigLoadError(f"Unknown planner profile {profile!r} ({profile_file})")
        return merge_configs(common, self.load_yaml(profile_file))

    def planner_config(self, profile: Optional[str] = None, **overrides: Any) -> PlannerConfig:
        """
        Build a PlannerConfig from the merged settings and CLI overrides.

        Raises:
            ConfigLoadError: If a value is out of range
        """
        section = self.planner_settings(profile).get("planner", {})
        try:
            return PlannerConfig.from_mapping(section).with_overrides(**overrides)
        except (TypeError, ValueError) as e:
            raise ConfigLoadError(f"Invalid planner settings: {e}") from e

    def manip_config(self, profile: Optional[str] = None) -> ManipConfig:
        try:
            return ManipConfig.from_mapping(self.planner_settings(profile).get("manip", {}))
        except (TypeError, ValueError) as e:
            raise ConfigLoadError(f"Invalid manipulability settings: {e}") from e

    def scdf_config(self, profile: Optional[str] = None) -> ScdfConfig:
        try:
            return ScdfConfig.from_mapping(self.planner_settings(profile).get("scdf", {}))
        except (TypeError, ValueError) as e:
            raise ConfigLoadError(f"Invalid self-collision settings: {e}") from e

    def scenario_preset(self, kind: str) -> ScenarioPreset:
        """Scenario parameters: common.yaml merged with <kind>.yaml."""
        merged = merge_configs(
            self.load_yaml(self.scenarios_dir / "common.yaml"),
            self.load_yaml(self.scenarios_dir / f"{kind}.yaml"),
        )
        try:
            max_time = {int(k): float(v) for k, v in (merged.get("max_time") or {}).items()}
            return ScenarioPreset(
                kind=kind,
                params=dict(merged.get("params") or {}),
                max_time=max_time,
                max_time_fallback=float(merged.get("max_time_fallback", DEFAULT_MAX_TIME)),
            )
        except (TypeError, ValueError, AttributeError) as e:
            raise ConfigLoadError(f"Invalid scenario preset {kind!r}: {e}") from e

    def available_profiles(self) -> list[str]:
        return sorted(p.stem for p in self.planners_dir.glob("*.yaml") if p.stem != "common")

    def available_scenarios(self) -> list[str]:
        return sorted(p.stem for p in self.scenarios_dir.glob("*.yaml") if p.stem != "common")

    def resolve(self, name: str, directory: Path) -> Path:
        """A path as given if it exists, else <directory>/<name>[.json]."""
        candidate = Path(name)
        if candidate.exists():
            return candidate
        for option in (directory / name, directory / f"{name}.json"):
            if option.exists():
                return option
        raise ConfigLoadError(f"File not found: {name} (also looked in {directory})")

    def load_goal(self, name: str) -> tuple[Optional[StateVector], StateVector]:
        """
        Load a joint-space goal file {"start": [...], "goal": [...]} ("start" optional).

        Raises:
            ConfigLoadError: If the file is missing or malformed
        """
        path = self.resolve(name, self.goals_dir)
        try:
            with open(path, "r") as f:
                data = json.load(f)
            start = StateVector.of(data["start"]) if "start" in data else None
            return start, StateVector.of(data["goal"])
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise ConfigLoadError(f"Invalid goal file {path}: {e}") from e
