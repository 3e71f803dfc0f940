"""
Feed-forward actor-critic in plain numpy with explicit reverse-mode gradients.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from ..config.manager import PpoConfig

logger = logging.getLogger(__name__)

# Fixed order used for flattening and checkpoints
PARAM_KEYS: Tuple[str, ...] = (
    "actor_w1", "actor_b1", "actor_w2", "actor_b2", "actor_w3", "actor_b3",
    "critic_w1", "critic_b1", "critic_w2", "critic_b2", "critic_w3", "critic_b3",
)


class DimensionMismatchError(ValueError):
    """Observation or parameter shapes do not fit the network."""


def effective_hidden_width(ppo: PpoConfig) -> int:
    """Hidden width: ``memory_size`` when configured, else ``hidden_width``."""
    return ppo.memory_size if ppo.memory_size is not None else ppo.hidden_width


@dataclass
class PolicyParams:
    """Actor and critic weights, float64, keyed by PARAM_KEYS."""
    obs_dim: int
    n_actions: int
    hidden_width: int
    arrays: Dict[str, np.ndarray] = field(default_factory=dict)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return expected_shapes(self.obs_dim, self.n_actions, self.hidden_width)

    def __getitem__(self, key: str) -> np.ndarray:
        return self.arrays[key]

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.obs_dim, self.n_actions, self.hidden_width,
                            {k: v.copy() for k, v in self.arrays.items()})

    def zeros_like(self) -> "PolicyParams":
        return PolicyParams(self.obs_dim, self.n_actions, self.hidden_width,
                            {k: np.zeros_like(v) for k, v in self.arrays.items()})

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.arrays[k].ravel() for k in PARAM_KEYS])

    @property
    def size(self) -> int:
        return int(sum(self.arrays[k].size for k in PARAM_KEYS))

    @classmethod
    def from_flat(cls, flat: np.ndarray, obs_dim: int, n_actions: int,
                  hidden_width: int) -> "PolicyParams":
        """
        Rebuild parameters from a flat vector.

        Raises:
            DimensionMismatchError: If the vector length does not match the shapes
        """
        shapes = expected_shapes(obs_dim, n_actions, hidden_width)
        total = sum(int(np.prod(s)) for s in shapes.values())
        if flat.size != total:
            raise DimensionMismatchError(
                f"Expected {total} weights for obs_dim={obs_dim}, n_actions={n_actions}, "
                f"hidden_width={hidden_width}; got {flat.size}"
            )
        arrays, offset = {}, 0
        for key in PARAM_KEYS:
            n = int(np.prod(shapes[key]))
            arrays[key] = np.array(flat[offset:offset + n], dtype=np.float64).reshape(shapes[key])
            offset += n
        return cls(obs_dim, n_actions, hidden_width, arrays)

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(v * v)) for v in self.arrays.values())))


def expected_shapes(obs_dim: int, n_actions: int, hidden: int) -> Dict[str, Tuple[int, ...]]:
    return {
        "actor_w1": (obs_dim, hidden), "actor_b1": (hidden,),
        "actor_w2": (hidden, hidden), "actor_b2": (hidden,),
        "actor_w3": (hidden, n_actions), "actor_b3": (n_actions,),
        "critic_w1": (obs_dim, hidden), "critic_b1": (hidden,),
        "critic_w2": (hidden, hidden), "critic_b2": (hidden,),
        "critic_w3": (hidden, 1), "critic_b3": (1,),
    }


def init_params(obs_dim: int, n_actions: int, hidden_width: int,
                rng: np.random.Generator) -> PolicyParams:
    """
    Seeded initialization, uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].

    Args:
        obs_dim: Observation length
        n_actions: Number of actions
        hidden_width: Width of both hidden layers
        rng: Generator providing the draws

    Returns:
        Freshly initialized PolicyParams
    """
    if obs_dim < 1 or n_actions < 1 or hidden_width < 1:
        raise DimensionMismatchError(
            f"Invalid network dimensions {obs_dim}/{n_actions}/{hidden_width}"
        )
    shapes = expected_shapes(obs_dim, n_actions, hidden_width)
    arrays = {}
    for key in PARAM_KEYS:
        weight_key = key.replace("_b", "_w")
        fan_in = shapes[weight_key][0]
        bound = 1.0 / np.sqrt(fan_in)
        arrays[key] = rng.uniform(-bound, bound, size=shapes[key]).astype(np.float64)
    logger.debug(f"Initialized network {obs_dim}->{hidden_width}x2->{n_actions}")
    return PolicyParams(obs_dim, n_actions, hidden_width, arrays)


def zero_params(obs_dim: int, n_actions: int, hidden_width: int) -> PolicyParams:
    shapes = expected_shapes(obs_dim, n_actions, hidden_width)
    return PolicyParams(obs_dim, n_actions, hidden_width,
                        {k: np.zeros(shapes[k], dtype=np.float64) for k in PARAM_KEYS})


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


@dataclass
class ForwardCache:
    """Activations kept for the backward pass."""
    obs: np.ndarray
    actor_h1: np.ndarray
    actor_h2: np.ndarray
    logits: np.ndarray
    log_probs: np.ndarray
    critic_h1: np.ndarray
    critic_h2: np.ndarray
    values: np.ndarray

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)


def _as_batch(params: PolicyParams, observation: np.ndarray) -> np.ndarray:
    obs = np.asarray(observation, dtype=np.float64)
    if obs.ndim == 1:
        obs = obs[None, :]
    if obs.ndim != 2 or obs.shape[1] != params.obs_dim:
        raise DimensionMismatchError(
            f"Observation shape {np.shape(observation)} does not match input width "
            f"{params.obs_dim}"
        )
    return obs


def forward(params: PolicyParams, observation: np.ndarray) -> ForwardCache:
    """Batched forward pass of both networks."""
    obs = _as_batch(params, observation)
    p = params.arrays
    a1 = np.tanh(obs @ p["actor_w1"] + p["actor_b1"])
    a2 = np.tanh(a1 @ p["actor_w2"] + p["actor_b2"])
    logits = a2 @ p["actor_w3"] + p["actor_b3"]
    c1 = np.tanh(obs @ p["critic_w1"] + p["critic_b1"])
    c2 = np.tanh(c1 @ p["critic_w2"] + p["critic_b2"])
    values = (c2 @ p["critic_w3"] + p["critic_b3"])[:, 0]
    return ForwardCache(obs, a1, a2, logits, log_softmax(logits), c1, c2, values)


def policy_forward(params: PolicyParams,
                   observation: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Action probabilities (softmax over logits) and the critic value of one observation.

    Raises:
        DimensionMismatchError: If the observation length does not match
    """
    cache = forward(params, observation)
    if cache.obs.shape[0] != 1:
        raise DimensionMismatchError("policy_forward takes a single observation")
    return cache.probs[0], float(cache.values[0])


def backward(params: PolicyParams, cache: ForwardCache, d_logits: np.ndarray,
             d_values: np.ndarray) -> PolicyParams:
    """
    Gradients of a scalar loss given its derivatives w.r.t. logits and values.

    Args:
        params: Parameters used in the forward pass
        cache: Activations from ``forward``
        d_logits: dL/dlogits, shape (B, n_actions)
        d_values: dL/dV, shape (B,)

    Returns:
        Gradients with the same layout as params
    """
    p = params.arrays
    grads: Dict[str, np.ndarray] = {}

    grads["actor_w3"] = cache.actor_h2.T @ d_logits
    grads["actor_b3"] = d_logits.sum(axis=0)
    dz2 = (d_logits @ p["actor_w3"].T) * (1.0 - cache.actor_h2 ** 2)
    grads["actor_w2"] = cache.actor_h1.T @ dz2
    grads["actor_b2"] = dz2.sum(axis=0)
    dz1 = (dz2 @ p["actor_w2"].T) * (1.0 - cache.actor_h1 ** 2)
    grads["actor_w1"] = cache.obs.T @ dz1
    grads["actor_b1"] = dz1.sum(axis=0)

    dv = d_values[:, None]
    grads["critic_w3"] = cache.critic_h2.T @ dv
    grads["critic_b3"] = dv.sum(axis=0)
    dc2 = (dv @ p["critic_w3"].T) * (1.0 - cache.critic_h2 ** 2)
    grads["critic_w2"] = cache.critic_h1.T @ dc2
    grads["critic_b2"] = dc2.sum(axis=0)
    dc1 = (dc2 @ p["critic_w2"].T) * (1.0 - cache.critic_h1 ** 2)
    grads["critic_w1"] = cache.obs.T @ dc1
    grads["critic_b1"] = dc1.sum(axis=0)

    return PolicyParams(params.obs_dim, params.n_actions, params.hidden_width, grads)


def greedy_action(params: PolicyParams, observation: np.ndarray) -> int:
    """Arg-max action; ties go to the lowest id."""
    probs, _ = policy_forward(params, observation)
    return int(np.argmax(probs))