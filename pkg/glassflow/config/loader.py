"""
Configuration loading utilities.
"""

import json
import os
from typing import Dict, Any, List, Tuple

from .manager import ConfigManager, ConfigurationError


def load_config(config_file: str, apply_env: bool = True) -> ConfigManager:
    """
    Load and validate configuration from file.

    Args:
        config_file: Path to configuration file
        apply_env: Whether GLASSFLOW_* environment overrides are applied

    Returns:
        ConfigManager instance with loaded configuration

    Raises:
        ConfigurationError: If the file is unreadable or invalid
    """
    manager = ConfigManager(config_file, apply_env=apply_env)
    manager.ensure_valid()
    return manager


def save_config(config_manager: ConfigManager, config_file: str) -> None:
    """
    Save configuration to file.

    Args:
        config_manager: ConfigManager instance to save
        config_file: Path to save configuration file
    """
    config_manager.save_config(config_file)


def get_default_config() -> Dict[str, Any]:
    """
    Get default configuration as dictionary.

    Returns:
        Dictionary with default configuration values
    """
    return ConfigManager(apply_env=False).get_config_dict()


def validate_config_file(config_file: str) -> Tuple[bool, List[str]]:
    """
    Validate a configuration file.

    Args:
        config_file: Path to configuration file to validate

    Returns:
        Tuple of (is_valid, list_of_errors)
    """
    if not os.path.exists(config_file):
        return False, [f"Configuration file does not exist: {config_file}"]
    try:
        temp_config = ConfigManager(config_file, apply_env=False)
    except ConfigurationError as e:
        return False, [str(e)]
    errors = temp_config.validate_config()
    return len(errors) == 0, errors


def merge_configs(base_config: Dict[str, Any],
                  override_config: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge two configuration dictionaries section by section.

    Args:
        base_config: Base configuration dictionary
        override_config: Configuration overrides

    Returns:
        Merged configuration dictionary
    """
    merged = {k: dict(v) if isinstance(v, dict) else v for k, v in base_config.items()}

    for section, values in override_config.items():
        if section in merged and isinstance(merged[section], dict) and isinstance(values, dict):
            merged[section].update(values)
        else:
            merged[section] = values

    return merged


def get_config_from_env() -> Dict[str, Any]:
    """
    Extract configuration from environment variables.

    Returns:
        Configuration dictionary from environment variables (raw strings)
    """
    config: Dict[str, Dict[str, Any]] = {}
    env_mappings = {
        'GLASSFLOW_SEED': ('ppo', 'seed'),
        'GLASSFLOW_TRANSFER_SPEED': ('physical', 'transfer_speed'),
        'GLASSFLOW_GAMMA': ('ppo', 'gamma'),
        'GLASSFLOW_LEARNING_RATE': ('ppo', 'learning_rate'),
        'GLASSFLOW_OBSERVATION_MODE': ('env', 'observation_mode'),
        'GLASSFLOW_OUTPUT_DIR': ('run', 'output_dir'),
        'GLASSFLOW_LOG_LEVEL': ('run', 'log_level'),
    }
    for env_var, (section, name) in env_mappings.items():
        value = os.getenv(env_var)
        if value is not None:
            config.setdefault(section, {})[name] = value
    return config


def get_template(template_name: str) -> Dict[str, Any]:
    """
    Return a predefined configuration template as a dictionary.

    Args:
        template_name: 'default', 'basic', 'extension' or 'process_study'

    Raises:
        ValueError: If the template is unknown
    """
    templates = {
        'default': {},

        # One-arm robot, loader + unloader, desk-scaled training
        'basic': {
            'process': {'num_process_chambers': 0, 'num_arms': 1},
            'env': {'observation_mode': 'basic', 'rollout_horizon': 8192},
            'ppo': {
                'batch_size': 512, 'buffer_size': 8192, 'clip_epsilon': 0.2,
                'gamma': 0.99, 'gae_lambda': 0.95, 'learning_rate': 3.0e-4,
                'max_steps': 150000, 'hidden_width': 64, 'memory_size': 256,
                'optimizer': 'adam',
            },
        },

        # Two-arm robot, three process chambers, reduced observations
        'extension': {
            'process': {'num_process_chambers': 3, 'num_arms': 2},
            'env': {'observation_mode': 'reduced', 'rollout_horizon': 63},
            'ppo': {
                'batch_size': 32, 'buffer_size': 63, 'clip_epsilon': 1.0,
                'gamma': 0.01, 'gae_lambda': 0.95, 'learning_rate': 3.0e-4,
                'max_steps': 200000, 'hidden_width': 64, 'memory_size': 1536,
                'optimizer': 'adam',
            },
        },

        # Reference process parameters for baseline and split-test runs
        'process_study': {
            'process': {
                'glass_input_interval_s': 20.0, 'num_process_chambers': 3,
                'num_arms': 2, 'process_time_s': 30.0,
            },
            'physical': {'transfer_speed': 0.01},
            'env': {'observation_mode': 'reduced', 'rollout_horizon': 8192},
        },
    }

    if template_name not in templates:
        raise ValueError(f"Unknown template: {template_name}. Available: {list(templates.keys())}")

    return merge_configs(get_default_config(), templates[template_name])


def create_config_from_template(template_name: str, output_file: str) -> None:
    """
    Create configuration file from a predefined template.

    Args:
        template_name: Name of the template ('default', 'basic', 'extension', 'process_study')
        output_file: Path to create configuration file
    """
    config = get_template(template_name)
    directory = os.path.dirname(output_file)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(output_file, 'w', encoding='utf-8') as f:
        json.dump(config, f, indent=2, sort_keys=True)


def config_from_template(template_name: str) -> ConfigManager:
    """Build a validated ConfigManager from a template without touching disk."""
    manager = ConfigManager(apply_env=False)
    manager.apply_dict(get_template(template_name))
    manager.ensure_valid()
    return manager
