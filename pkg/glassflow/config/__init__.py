"""
Configuration management for glassflow.
"""

from .manager import (
    ConfigManager, ConfigurationError, PhysicalParams, ProcessParams,
    GeometryParams, RewardTable, EnvParams, PpoConfig, RunConfig,
    ticks_from_seconds, CALIBRATION_SPEED
)
from .loader import (
    load_config, save_config, get_default_config, validate_config_file,
    create_config_from_template, config_from_template, get_template, merge_configs
)

__all__ = [
    'ConfigManager',
    'ConfigurationError',
    'PhysicalParams',
    'ProcessParams',
    'GeometryParams',
    'RewardTable',
    'EnvParams',
    'PpoConfig',
    'RunConfig',
    'ticks_from_seconds',
    'CALIBRATION_SPEED',
    'load_config',
    'save_config',
    'get_default_config',
    'validate_config_file',
    'create_config_from_template',
    'config_from_template',
    'get_template',
    'merge_configs',
]
