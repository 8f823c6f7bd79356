"""Global configuration: one JSON file drives the CLI and the session service.

Every field has a default, so an empty file (or no file) yields a working
demo setup.  Unknown keys and out-of-range values fail fast with a
:class:`ConfigError` naming the offending entry.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .dataset import SynthParams
from .errors import ConfigError
from .hfsm import HfsmConfig, Task, TaskRegistry
from .signals import SegmentConfig, TouchThresholds


@dataclass
class GlobalConfig:
    thresholds: TouchThresholds = field(default_factory=TouchThresholds)
    segment: SegmentConfig = field(default_factory=SegmentConfig)
    baseline_window: int = 50
    capture_window: int = 300
    confidence_threshold: float = 0.80
    confirm_timeout_s: float = 5.0
    double_tap_window_s: float = 2.0
    stroke_fps: float = 50.0
    model_path: str = "model.bin"
    task_registry: TaskRegistry = field(default_factory=TaskRegistry.demo)
    synth: SynthParams = field(default_factory=SynthParams)
    host: str = "127.0.0.1"
    port: int = 8750

    def hfsm_config(self) -> HfsmConfig:
        return HfsmConfig(confidence_threshold=self.confidence_threshold,
                          confirm_timeout=self.confirm_timeout_s,
                          double_tap_window=self.double_tap_window_s)

    def validate(self) -> "GlobalConfig":
        if self.baseline_window < 1:
            raise ConfigError("baseline_window must be >= 1")
        if self.capture_window < 2:
            raise ConfigError("capture_window must be >= 2")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ConfigError("confidence_threshold must be in [0, 1]")
        if self.thresholds.fz <= 0.0 or self.thresholds.tau2 <= 0.0:
            raise ConfigError("touch thresholds must be positive")
        if self.segment.debounce < 1 or self.segment.min_length < 1:
            raise ConfigError("segment debounce and min_length must be >= 1")
        if self.stroke_fps <= 0.0:
            raise ConfigError("stroke_fps must be positive")
        if not 1 <= self.port <= 65535:
            raise ConfigError(f"port {self.port} out of range")
        return self


def _build(section: str, cls, raw: dict):
    fields = {f.name for f in dataclasses.fields(cls)}
    unknown = set(raw) - fields
    if unknown:
        raise ConfigError(f"{section}: unknown keys {sorted(unknown)}")
    try:
        return cls(**raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{section}: {e}") from e


def _parse_registry(raw: dict) -> TaskRegistry:
    tasks = {}
    for key, value in raw.items():
        if not (isinstance(key, str) and key.isdigit() and int(key) in range(10)):
            raise ConfigError(f"task_registry: key {key!r} is not a digit 0..9")
        if not isinstance(value, dict) or "name" not in value:
            raise ConfigError(f"task_registry[{key}]: need an object with at least a name")
        tasks[int(key)] = Task(name=str(value["name"]),
                               motion_id=str(value.get("motion_id", f"task_{key}")))
    return TaskRegistry(tasks)


def from_dict(raw: dict) -> GlobalConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    known = {f.name for f in dataclasses.fields(GlobalConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if key == "thresholds":
            kwargs[key] = _build(key, TouchThresholds, value)
        elif key == "segment":
            kwargs[key] = _build(key, SegmentConfig, value)
        elif key == "synth":
            kwargs[key] = _build(key, SynthParams, value)
        elif key == "task_registry":
            kwargs[key] = _parse_registry(value)
        else:
            kwargs[key] = value
    try:
        cfg = GlobalConfig(**kwargs)
    except TypeError as e:
        raise ConfigError(str(e)) from e
    return cfg.validate()


def load_config(path: Optional[str] = None) -> GlobalConfig:
    """Parse and validate a config file; missing path means all defaults."""
    if path is None:
        return GlobalConfig().validate()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from e
    return from_dict(raw)
