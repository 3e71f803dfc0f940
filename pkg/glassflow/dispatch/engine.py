"""
Base classes for the dispatch policy strategy pattern.
"""

import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional

from ..env.fab_env import FabEnv

logger = logging.getLogger(__name__)


class Policy(ABC):
    """Abstract base class for policies that choose the next robot action."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        """
        Initialize policy.

        Args:
            config: Policy-specific configuration parameters
        """
        self.config = config or {}
        self.is_initialized = False
        self.decisions = 0

    @abstractmethod
    def select_action(self, env: FabEnv) -> int:
        """
        Choose the next action for an idle environment.

        Args:
            env: Environment whose robot has no active command

        Returns:
            Action id in ``range(env.n_actions)``
        """
        pass

    def initialize(self) -> None:
        """Load whatever the policy needs before its first decision."""
        self.is_initialized = True

    def cleanup(self) -> None:
        self.is_initialized = False

    @property
    @abstractmethod
    def policy_type(self) -> str:
        """Return the policy type identifier."""
        pass

    def act(self, env: FabEnv) -> int:
        if not self.is_initialized:
            self.initialize()
        self.decisions += 1
        return self.select_action(env)

    def get_health_status(self) -> Dict[str, Any]:
        """
        Get policy status information.

        Returns:
            Dictionary with status information
        """
        return {
            "policy_type": self.policy_type,
            "is_initialized": self.is_initialized,
            "decisions": self.decisions,
            "config": {k: v for k, v in self.config.items() if not k.startswith('_')},
        }

    def __enter__(self):
        if not self.is_initialized:
            self.initialize()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.cleanup()


class PolicyRegistry:
    """Registry for policy implementations."""

    def __init__(self):
        self._policies: Dict[str, type] = {}
        self._default_policy: Optional[str] = None

    def register(self, policy_type: str, policy_class: type,
                 is_default: bool = False) -> None:
        """
        Register a policy implementation.

        Args:
            policy_type: Unique identifier for the policy
            policy_class: Policy class (must inherit from Policy)
            is_default: Whether this should be the default policy

        Raises:
            ValueError: If policy_class is invalid
        """
        if not isinstance(policy_class, type) or not issubclass(policy_class, Policy):
            raise ValueError("Policy class must inherit from Policy")

        self._policies[policy_type] = policy_class
        if is_default or self._default_policy is None:
            self._default_policy = policy_type
        logger.debug(f"Registered policy: {policy_type}")

    def create_policy(self, policy_type: Optional[str] = None,
                      config: Optional[Dict[str, Any]] = None) -> Policy:
        """
        Create an instance of the specified policy.

        Args:
            policy_type: Type of policy to create. If None, uses default.
            config: Configuration for the policy

        Returns:
            Policy instance

        Raises:
            ValueError: If policy type is not registered
            RuntimeError: If policy creation fails
        """
        if policy_type is None:
            policy_type = self._default_policy
        if policy_type is None:
            raise ValueError("No default policy registered")
        if policy_type not in self._policies:
            available = list(self._policies.keys())
            raise ValueError(f"Unknown policy type '{policy_type}'. Available: {available}")

        try:
            return self._policies[policy_type](config)
        except Exception as e:
            raise RuntimeError(f"Failed to create {policy_type} policy: {e}")

    def get_available_policies(self) -> List[str]:
        return list(self._policies.keys())

    def get_default_policy(self) -> Optional[str]:
        return self._default_policy


# Global policy registry
registry = PolicyRegistry()
