"""
Dispatch policies: heuristic baseline, learned checkpoint and uniform random.
"""

from .engine import Policy, PolicyRegistry, registry
from .heuristic import (
    HeuristicPolicy,
    RobotView,
    Signal,
    SignalKind,
    collect_signals,
    describe_chains,
    heuristic_decide,
    robot_view,
)
from .learned import CheckpointPolicy, RandomPolicy

registry.register("heuristic", HeuristicPolicy, is_default=True)
registry.register("checkpoint", CheckpointPolicy)
registry.register("random", RandomPolicy)

__all__ = [
    'Policy',
    'PolicyRegistry',
    'registry',
    'HeuristicPolicy',
    'RobotView',
    'Signal',
    'SignalKind',
    'collect_signals',
    'describe_chains',
    'heuristic_decide',
    'robot_view',
    'CheckpointPolicy',
    'RandomPolicy',
]
