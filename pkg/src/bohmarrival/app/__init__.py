"""Scenario presets, config files, the run pipeline and the CLI."""

from .config import config_hash, dump_config, load_config, parse_config
from .pipeline import RunOutcome, arrival_from_csv, compare_files, run, run_trajectories, simulate
from .presets import PRESETS, ConfigError, ScenarioConfig, preset

__all__ = [
    "ConfigError",
    "PRESETS",
    "RunOutcome",
    "ScenarioConfig",
    "arrival_from_csv",
    "compare_files",
    "config_hash",
    "dump_config",
    "load_config",
    "parse_config",
    "preset",
    "run",
    "run_trajectories",
    "simulate",
]
