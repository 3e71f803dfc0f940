"""
Glassflow

Simulation of glass flow through a FAB cluster cell with a rotary transfer
robot, a PPO agent that learns to dispatch it, and the rule-based
dispatcher used on the shop floor as the comparison baseline.
"""

from .version import __version__
from .core import (
    baseline_run, evaluate, load_run_config, render_gantt, run_split_test, train
)
from .config.manager import ConfigManager, ConfigurationError
from .config.loader import config_from_template, load_config
from .env.fab_env import FabEnv
from .world.fab_world import build_world, tick

__all__ = [
    # Workflows
    "load_run_config", "train", "evaluate", "baseline_run", "run_split_test",
    "render_gantt",

    # Configuration
    "ConfigManager", "ConfigurationError", "config_from_template", "load_config",

    # Simulation
    "FabEnv", "build_world", "tick",

    "__version__",
]
