"""
Policies backed by learned parameters or by chance.
"""

import logging
from typing import Any, Dict, Optional

import numpy as np

from ..agent.checkpoint import load_checkpoint
from ..agent.network import DimensionMismatchError, PolicyParams, greedy_action
from ..env.fab_env import FabEnv
from .engine import Policy

logger = logging.getLogger(__name__)


class CheckpointPolicy(Policy):
    """
    Greedy actor of a trained network.

    Config keys:
        checkpoint: Path of a checkpoint file, read on initialize
        params: PolicyParams instance used instead of a file
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        super().__init__(config)
        self.params: Optional[PolicyParams] = self.config.get("params")
        self.step: Optional[int] = None

    @property
    def policy_type(self) -> str:
        return "checkpoint"

    def initialize(self) -> None:
        """
        Load the checkpoint named in the config.

        Raises:
            ValueError: If neither params nor a checkpoint path is configured
        """
        if self.params is None:
            path = self.config.get("checkpoint")
            if path is None:
                raise ValueError("Checkpoint policy needs 'checkpoint' or 'params'")
            checkpoint = load_checkpoint(path)
            self.params = checkpoint.params
            self.step = checkpoint.step
            logger.info(f"Loaded policy from {path} (step {checkpoint.step})")
        super().initialize()

    def check_dimensions(self, env: FabEnv) -> None:
        """
        Raises:
            DimensionMismatchError: If the network does not fit the environment
        """
        if self.params is None:
            raise ValueError("Policy not initialized")
        if (self.params.obs_dim, self.params.n_actions) != (env.obs_dim, env.n_actions):
            raise DimensionMismatchError(
                f"Network expects obs_dim={self.params.obs_dim}, "
                f"n_actions={self.params.n_actions}; environment has "
                f"obs_dim={env.obs_dim}, n_actions={env.n_actions}"
            )

    def select_action(self, env: FabEnv) -> int:
        self.check_dimensions(env)
        return greedy_action(self.params, env.observe())

    def cleanup(self) -> None:
        if self.config.get("params") is None:
            self.params = None
        super().cleanup()


class RandomPolicy(Policy):
    """
    Uniform choice among the actions legal in the current state.

    Config keys:
        seed: Seed of the policy's own generator (default 0)
    """

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        super().__init__(config)
        self.rng = np.random.default_rng(self.config.get("seed", 0))

    @property
    def policy_type(self) -> str:
        return "random"

    def select_action(self, env: FabEnv) -> int:
        legal = env.legal_actions()
        return int(legal[int(self.rng.integers(len(legal)))])
