"""Configuration records and orchestration for the command-line studies."""
from .config import CONFIG_TYPES, ExperimentConfig, config_hash, load_config, parse_config

__all__ = ["CONFIG_TYPES", "ExperimentConfig", "config_hash", "load_config", "parse_config"]
