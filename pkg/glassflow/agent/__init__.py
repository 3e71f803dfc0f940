"""
Actor-critic network, PPO updates, checkpoints and the training loop.
"""

from .checkpoint import (
    Checkpoint,
    CheckpointError,
    ChecksumError,
    TruncatedCheckpointError,
    UnsupportedVersionError,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from .network import (
    DimensionMismatchError,
    PolicyParams,
    backward,
    effective_hidden_width,
    forward,
    greedy_action,
    init_params,
    policy_forward,
    zero_params,
)
from .ppo import (
    AdamOptimizer,
    Minibatch,
    RolloutBuffer,
    SgdOptimizer,
    UpdateInfo,
    clipped_objective,
    collect_rollout,
    compute_gae,
    gradient_check,
    ppo_loss,
    probability_ratio,
    sample_action,
    update,
)
from .trainer import Trainer, TrainingResult, merge_buffers

__all__ = [
    'Checkpoint',
    'CheckpointError',
    'ChecksumError',
    'TruncatedCheckpointError',
    'UnsupportedVersionError',
    'decode_checkpoint',
    'encode_checkpoint',
    'load_checkpoint',
    'save_checkpoint',
    'DimensionMismatchError',
    'PolicyParams',
    'backward',
    'effective_hidden_width',
    'forward',
    'greedy_action',
    'init_params',
    'policy_forward',
    'zero_params',
    'AdamOptimizer',
    'Minibatch',
    'RolloutBuffer',
    'SgdOptimizer',
    'UpdateInfo',
    'clipped_objective',
    'collect_rollout',
    'compute_gae',
    'gradient_check',
    'ppo_loss',
    'probability_ratio',
    'sample_action',
    'update',
    'Trainer',
    'TrainingResult',
    'merge_buffers',
]
