"""Configuration module for RPF Cocycle."""

from rpf_cocycle.config.loader import ConfigLoader, parse_config
from rpf_cocycle.config.models import (
    Config,
    Expectations,
    MeasureConfig,
    PotentialConfig,
    RunConfig,
    SystemConfig,
)

__all__ = [
    "Config",
    "ConfigLoader",
    "Expectations",
    "MeasureConfig",
    "PotentialConfig",
    "RunConfig",
    "SystemConfig",
    "parse_config",
]
