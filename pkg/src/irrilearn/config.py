"""Declarative run configuration.

A run is described by one TOML file with flat sections mirroring the
sub-configs; command-line flags override file values, and every command
writes the fully-resolved configuration it actually used into its
output directory, so any result can be reproduced from that echo alone.
Unknown sections or keys are rejected rather than ignored.
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .core import ActionSet, EconomicConfig
from .cropsim import CropParams, EnvConfig
from .policy import (
    DEFAULT_INPUT_OFFSET,
    DEFAULT_INPUT_SCALE,
    Architecture,
)
from .soil import DEFAULT_SOIL_LAYERS, parse_soil_csv


class ConfigError(Exception):
    """Configuration file or flag is invalid."""


@dataclass
class PathsConfig:
    train_weather_dir: Optional[str] = None
    test_weather_dir: Optional[str] = None
    out_dir: str = "out"
    checkpoint: Optional[str] = None


@dataclass
class TrainingSection:
    episodes: int = 20_000
    alpha: float = 1e-7
    ma_order: int = 100
    seed: int = 0
    checkpoint_every: int = 0
    frozen_theta_gradients: bool = False


@dataclass
class ArchitectureSection:
    hidden_dims: list[int] = field(default_factory=lambda: [400, 600, 800, 600, 400])
    bias_on_first_hidden: bool = False
    init_scale: float = 1.0
    normalize_inputs: bool = False


@dataclass
class EnvironmentSection:
    initial_pawc_fraction: float = 0.20
    sowing_window_start: list[int] = field(default_factory=lambda: [4, 25])
    sowing_window_end: list[int] = field(default_factory=lambda: [6, 1])
    sowing_rain_trigger_mm: float = 15.0
    sowing_rain_window_days: int = 3
    forced_sowing_irrigation_mm: float = 20.0
    stage_end: float = 85.0
    max_days: int = 220
    soil_table: Optional[str] = None


@dataclass
class RunConfig:
    """Fully-resolved configuration for any command."""

    economics: EconomicConfig = EconomicConfig()
    actions: ActionSet = ActionSet()
    environment: EnvironmentSection = field(default_factory=EnvironmentSection)
    crop: CropParams = CropParams()
    architecture: ArchitectureSection = field(default_factory=ArchitectureSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    paths: PathsConfig = field(default_factory=PathsConfig)
    replicates: int = 30

    def env_config(self) -> EnvConfig:
        env = self.environment
        if env.soil_table is not None:
            if not os.path.exists(env.soil_table):
                raise ConfigError(f"soil table not found: {env.soil_table}")
            layers = parse_soil_csv(env.soil_table)
        else:
            layers = DEFAULT_SOIL_LAYERS
        return EnvConfig(
            soil_layers=layers,
            initial_pawc_fraction=env.initial_pawc_fraction,
            sowing_window_start=tuple(env.sowing_window_start),
            sowing_window_end=tuple(env.sowing_window_end),
            sowing_rain_trigger_mm=env.sowing_rain_trigger_mm,
            sowing_rain_window_days=env.sowing_rain_window_days,
            forced_sowing_irrigation_mm=env.forced_sowing_irrigation_mm,
            stage_end=env.stage_end,
            max_days=env.max_days,
            crop=self.crop,
            econ=self.economics,
            actions=self.actions,
        )

    def arch_config(self) -> Architecture:
        return Architecture(
            input_dim=9,
            hidden_dims=tuple(self.architecture.hidden_dims),
            output_dim=len(self.actions),
            bias_on_first_hidden=self.architecture.bias_on_first_hidden,
        )

    def input_normalization(self) -> tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        if self.architecture.normalize_inputs:
            return DEFAULT_INPUT_OFFSET.copy(), DEFAULT_INPUT_SCALE.copy()
        return None, None


_SECTION_BUILDERS = {
    "economics": EconomicConfig,
    "actions": ActionSet,
    "environment": EnvironmentSection,
    "crop": CropParams,
    "architecture": ArchitectureSection,
    "training": TrainingSection,
    "paths": PathsConfig,
}


def _coerce_section(name: str, cls, data: dict[str, Any]):
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}"
        )
    kwargs = {}
    for key, value in data.items():
        if isinstance(value, list):
            value = tuple(value) if cls in (EconomicConfig, ActionSet, CropParams) else list(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{name}] section: {exc}") from exc


def load_config(path: Optional[str] = None, overrides: Optional[dict[str, Any]] = None) -> RunConfig:
    """Build a RunConfig from defaults, an optional TOML file, then overrides.

    Overrides use dotted keys like ``training.seed`` or the shorthand
    top-level names the CLI exposes (episodes, seed, out, replicates).
    """
    raw: dict[str, Any] = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, "rb") as fh:
            try:
                raw = _toml.load(fh)
            except _toml.TOMLDecodeError as exc:
                raise ConfigError(f"cannot parse {path}: {exc}") from exc
    cfg = RunConfig()
    known_sections = set(_SECTION_BUILDERS) | {"replicates"}
    unknown = set(raw) - known_sections
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    for name, cls in _SECTION_BUILDERS.items():
        if name in raw:
            if not isinstance(raw[name], dict):
                raise ConfigError(f"[{name}] must be a table")
            # Merge file values over the section defaults.
            base = dataclasses.asdict(getattr(cfg, name)) if dataclasses.is_dataclass(getattr(cfg, name)) else {}
            merged = {**base, **raw[name]}
            setattr(cfg, name, _coerce_section(name, cls, merged))
    if "replicates" in raw:
        cfg.replicates = int(raw["replicates"])
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        _apply_override(cfg, key, value)
    _validate(cfg)
    return cfg


def _apply_override(cfg: RunConfig, key: str, value: Any) -> None:
    shorthand = {
        "episodes": "training.episodes",
        "seed": "training.seed",
        "alpha": "training.alpha",
        "out": "paths.out_dir",
        "replicates": "replicates",
        "checkpoint": "paths.checkpoint",
        "weather_dir": None,  # handled by each command
    }
    key = shorthand.get(key, key)
    if key is None:
        return
    if key == "replicates":
        cfg.replicates = int(value)
        return
    if "." not in key:
        raise ConfigError(f"unknown override {key!r}")
    section_name, field_name = key.split(".", 1)
    section = getattr(cfg, section_name, None)
    if section is None or not dataclasses.is_dataclass(section):
        raise ConfigError(f"unknown override section {section_name!r}")
    if field_name not in {f.name for f in dataclasses.fields(section)}:
        raise ConfigError(f"unknown override {key!r}")
    data = dataclasses.asdict(section)
    data[field_name] = value
    setattr(cfg, section_name, _coerce_section(section_name, type(section), data))


def _validate(cfg: RunConfig) -> None:
    if cfg.replicates < 1:
        raise ConfigError(f"replicates must be >= 1, got {cfg.replicates}")
    try:
        cfg.arch_config()
        cfg.env_config()
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc)) from exc


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        text = repr(float(value))
        return text if any(c in text for c in ".einf") else text + ".0"
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize config value {value!r}")


def dump_config(cfg: RunConfig) -> str:
    """Deterministic TOML text of the fully-resolved configuration."""
    lines: list[str] = [f"replicates = {cfg.replicates}", ""]
    for name in _SECTION_BUILDERS:
        section = getattr(cfg, name)
        lines.append(f"[{name}]")
        for f in dataclasses.fields(section):
            value = getattr(section, f.name)
            if value is None:
                continue  # TOML has no null; absent key means unset
            lines.append(f"{f.name} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def write_resolved_config(cfg: RunConfig, out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "resolved_config.toml")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(dump_config(cfg))
    return path
