"""Configuration, CLI, and benchmark sweeps."""

from .config import ConfigError, RunConfig, load_config, parse_run_config, serialize_config

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_run_config", "serialize_config"]
