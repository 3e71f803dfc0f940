"""
Decision environment: macro-actions, observations and event rewards.
"""

from .fab_env import (
    EpisodeStats, FabEnv, StepResult, Transition, action_count, action_to_command,
    command_to_action, reset, reward_for_events,
)
from .observations import (
    basic_length, observe_basic, observe_reduced, one_hot_groups, reduced_length,
)

__all__ = [
    'EpisodeStats', 'FabEnv', 'StepResult', 'Transition', 'action_count',
    'action_to_command', 'command_to_action', 'reset', 'reward_for_events',
    'basic_length', 'observe_basic', 'observe_reduced', 'one_hot_groups',
    'reduced_length',
]
