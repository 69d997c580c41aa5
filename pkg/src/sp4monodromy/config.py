"""Run settings: defaults, JSON config file, environment overrides."""

import json
import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import ConfigError


logger = logging.getLogger(__name__)

ENV_MEMORY_MB = "SP4MONODROMY_MEMORY_MB"
ENV_WORKERS = "SP4MONODROMY_WORKERS"

# 12 int32 transitions plus the int32 union-find parent.
BYTES_PER_COSET = 13 * 4

STRATEGIES = ("hlt", "felsch")
OUTPUT_FORMATS = ("text", "json", "csv")


@dataclass(frozen=True)
class Settings:
    """Tunable limits shared by the CLI and the library entry points."""

    budget: int = 1 << 24
    long_budget: int = 1 << 27
    strategy: str = "hlt"
    workers: int = 1
    output_format: str = "text"
    bfs_cap: int = 1 << 25
    memory_mb: Optional[int] = None

    def __post_init__(self):
        if self.budget < 1 or self.long_budget < 1:
            raise ConfigError("budget must be positive")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.memory_mb is not None and self.memory_mb < 1:
            raise ConfigError("memory_mb must be positive")

    def effective_budget(self, long_run: bool = False) -> int:
        """Coset budget after applying the memory cap."""
        budget = self.long_budget if long_run else self.budget
        if self.memory_mb is not None:
            budget = min(budget, budget_for_memory(self.memory_mb))
        return budget

    def to_dict(self) -> dict:
        return asdict(self)


def budget_for_memory(memory_mb: int) -> int:
    """Largest coset count whose transition table fits in memory_mb."""
    return max(1, (memory_mb << 20) // BYTES_PER_COSET)


def _read_config_file(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc

    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")

    known = {f.name for f in fields(Settings)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def _int_from_env(name: str) -> Optional[int]:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {raw!r}") from exc


def load_settings(config_path: Optional[str] = None, **overrides) -> Settings:
    """Build settings from defaults, a config file, environment and overrides.

    Args:
        config_path: Optional JSON file with a subset of the Settings fields.
        **overrides: Explicit values (CLI flags); ``None`` values are ignored.

    Returns:
        Validated Settings.
    """
    values = {}
    if config_path:
        values.update(_read_config_file(Path(config_path)))
        logger.debug("loaded config file %s", config_path)

    memory_mb = _int_from_env(ENV_MEMORY_MB)
    if memory_mb is not None:
        values["memory_mb"] = memory_mb
    workers = _int_from_env(ENV_WORKERS)
    if workers is not None:
        values["workers"] = workers

    values.update({key: value for key, value in overrides.items() if value is not None})

    try:
        return replace(Settings(), **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
