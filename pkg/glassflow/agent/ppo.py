"""
Clipped-surrogate PPO: rollout collection, advantage estimation and updates.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from ..config.manager import PpoConfig
from ..env.fab_env import EpisodeStats, FabEnv, Transition
from .network import PolicyParams, backward, forward, policy_forward

logger = logging.getLogger(__name__)

ADV_EPS = 1e-8


@dataclass
class Minibatch:
    obs: np.ndarray
    actions: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return int(self.actions.shape[0])


@dataclass
class RolloutBuffer:
    """Ordered transitions of one or more rollouts, with advantages after ``compute``."""
    capacity: int
    transitions: List[Transition] = field(default_factory=list)
    bootstrap_value: Optional[float] = None
    advantages: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None
    stats: EpisodeStats = field(default_factory=EpisodeStats)

    def __len__(self) -> int:
        return len(self.transitions)

    def add(self, transition: Transition) -> None:
        if len(self.transitions) >= self.capacity:
            raise ValueError(f"Rollout buffer full ({self.capacity} transitions)")
        self.transitions.append(transition)
        self.advantages = None
        self.returns = None

    @property
    def obs(self) -> np.ndarray:
        return np.stack([t.obs for t in self.transitions])

    @property
    def actions(self) -> np.ndarray:
        return np.array([t.action for t in self.transitions], dtype=np.int64)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([t.reward for t in self.transitions], dtype=np.float64)

    @property
    def values(self) -> np.ndarray:
        return np.array([t.value for t in self.transitions], dtype=np.float64)

    @property
    def log_probs(self) -> np.ndarray:
        return np.array([t.log_prob for t in self.transitions], dtype=np.float64)

    def compute(self, gamma: float, lam: float) -> None:
        """Fill advantages and returns with GAE."""
        if self.bootstrap_value is None:
            raise ValueError("Bootstrap value missing; collect a rollout first")
        self.advantages, self.returns = compute_gae(
            self.rewards, self.values, self.bootstrap_value, gamma, lam
        )

    def full_batch(self) -> Minibatch:
        if self.advantages is None or self.returns is None:
            raise ValueError("Advantages not computed")
        return Minibatch(self.obs, self.actions, self.advantages, self.returns)

    def minibatches(self, batch_size: int, rng: np.random.Generator) -> Iterator[Minibatch]:
        """Shuffled minibatches of ``batch_size``; the last one may be shorter."""
        batch = self.full_batch()
        order = rng.permutation(len(self))
        for start in range(0, len(order), batch_size):
            idx = order[start:start + batch_size]
            yield Minibatch(batch.obs[idx], batch.actions[idx],
                            batch.advantages[idx], batch.returns[idx])


def sample_action(probabilities: np.ndarray, rng: np.random.Generator) -> int:
    """
    Inverse-CDF sample of an action id.

    Zero-probability actions are never returned.
    """
    cdf = np.cumsum(probabilities)
    u = rng.random() * cdf[-1]
    index = int(np.searchsorted(cdf, u, side="right"))
    return min(index, len(probabilities) - 1)


def collect_rollout(env: FabEnv, params: PolicyParams, horizon: int,
                    rng: np.random.Generator,
                    buffer: Optional[RolloutBuffer] = None) -> RolloutBuffer:
    """
    Run the policy for ``horizon`` macro-steps.

    Args:
        env: Environment, continued from its current state
        params: Policy parameters (read only)
        horizon: Number of transitions to collect
        rng: Generator for action sampling
        buffer: Buffer to append to; a new one sized ``horizon`` when omitted

    Returns:
        Buffer holding exactly ``horizon`` new transitions and the bootstrap value
    """
    if buffer is None:
        buffer = RolloutBuffer(capacity=horizon)
    if len(buffer) + horizon > buffer.capacity:
        raise ValueError(
            f"Rollout of {horizon} steps exceeds buffer capacity {buffer.capacity}"
        )

    obs = env.observe()
    for _ in range(horizon):
        probs, value = policy_forward(params, obs)
        action = sample_action(probs, rng)
        result = env.step(action)
        buffer.add(Transition(obs=obs, action=action, reward=result.reward,
                              next_obs=result.observation,
                              log_prob=float(np.log(probs[action])), value=value))
        buffer.stats.record(result)
        obs = result.observation
    _, buffer.bootstrap_value = policy_forward(params, obs)
    return buffer


def compute_gae(rewards: np.ndarray, values: np.ndarray, bootstrap_value: float,
                gamma: float, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generalized advantage estimates for a continuing task.

    delta_t = r_t + gamma * V(s_{t+1}) - V(s_t), with V(s_T) = bootstrap_value;
    A_t = sum_l (gamma * lam)^l delta_{t+l}; returns_t = A_t + V(s_t).
    No terminal masking.

    Raises:
        ValueError: If rewards and values differ in length
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if rewards.shape != values.shape:
        raise ValueError(
            f"rewards and values must have equal length, got {rewards.size} and {values.size}"
        )
    n = rewards.size
    next_values = np.append(values[1:], bootstrap_value)
    deltas = rewards + gamma * next_values - values
    advantages = np.zeros(n, dtype=np.float64)
    running = 0.0
    for t in range(n - 1, -1, -1):
        running = deltas[t] + gamma * lam * running
        advantages[t] = running
    return advantages, advantages + values


def log_prob_of(params: PolicyParams, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
    cache = forward(params, obs)
    return cache.log_probs[np.arange(cache.obs.shape[0]), np.asarray(actions)]


def probability_ratio(params: PolicyParams, old_params: PolicyParams,
                      obs: np.ndarray, action: int) -> float:
    """pi_new(a|s) / pi_old(a|s), evaluated in log space."""
    new = log_prob_of(params, obs, np.array([action]))[0]
    old = log_prob_of(old_params, obs, np.array([action]))[0]
    return float(np.exp(new - old))


def clipped_objective(ratio: np.ndarray, advantage: np.ndarray, epsilon: float) -> np.ndarray:
    """Pointwise min(r * A, clip(r, 1 - eps, 1 + eps) * A)."""
    return np.minimum(ratio * advantage, np.clip(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage)


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    return (advantages - advantages.mean()) / (advantages.std() + ADV_EPS)


@dataclass
class LossInfo:
    total: float
    clip_objective: float
    value_loss: float
    entropy: float
    clip_fraction: float


def ppo_loss(params: PolicyParams, old_params: PolicyParams, minibatch: Minibatch,
             config: PpoConfig,
             normalize: bool = True) -> Tuple[float, PolicyParams, LossInfo]:
    """
    Total loss -L_clip + c_v * MSE(V, returns) - beta_eff * entropy and its gradients.

    Args:
        params: Parameters being optimized
        old_params: Parameters that collected the data, evaluated on the same path
        minibatch: Observations, actions, advantages and returns
        config: PPO hyperparameters
        normalize: Whether advantages are normalized within the minibatch

    Returns:
        (loss, gradients, LossInfo)

    Raises:
        ValueError: If the minibatch is empty
    """
    b = len(minibatch)
    if b == 0:
        raise ValueError("Empty minibatch")
    adv = normalize_advantages(minibatch.advantages) if normalize else minibatch.advantages
    rows = np.arange(b)
    actions = np.asarray(minibatch.actions)

    cache = forward(params, minibatch.obs)
    old_log_probs = log_prob_of(old_params, minibatch.obs, actions)
    log_p = cache.log_probs[rows, actions]
    ratio = np.exp(log_p - old_log_probs)

    unclipped = ratio * adv
    clipped = np.clip(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon) * adv
    take_unclipped = unclipped <= clipped
    l_clip = float(np.mean(np.minimum(unclipped, clipped)))

    probs = cache.probs
    entropy_rows = -np.sum(probs * cache.log_probs, axis=1)
    entropy = float(np.mean(entropy_rows))

    value_err = cache.values - minibatch.returns
    value_loss = float(np.mean(value_err ** 2))

    beta = config.beta_effective
    total = -l_clip + config.value_loss_coef * value_loss - beta * entropy

    one_hot = np.zeros_like(probs)
    one_hot[rows, actions] = 1.0
    d_logp = -(adv * ratio * take_unclipped) / b
    d_logits = d_logp[:, None] * (one_hot - probs)
    d_logits += (beta / b) * probs * (cache.log_probs + entropy_rows[:, None])
    d_values = config.value_loss_coef * 2.0 * value_err / b

    grads = backward(params, cache, d_logits, d_values)
    info = LossInfo(
        total=total, clip_objective=l_clip, value_loss=value_loss, entropy=entropy,
        clip_fraction=float(np.mean(np.abs(ratio - 1.0) > config.clip_epsilon)),
    )
    return total, grads, info


def clip_gradients(grads: PolicyParams, max_norm: float) -> float:
    """Scale gradients in place to a global norm of at most ``max_norm``; returns the norm."""
    norm = grads.global_norm()
    if norm > max_norm > 0:
        scale = max_norm / (norm + 1e-12)
        for key in grads.arrays:
            grads.arrays[key] = grads.arrays[key] * scale
    return norm


class SgdOptimizer:
    """Plain gradient descent."""

    name = "sgd"

    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, params: PolicyParams, grads: PolicyParams) -> PolicyParams:
        updated = params.copy()
        for key in updated.arrays:
            updated.arrays[key] = params.arrays[key] - self.learning_rate * grads.arrays[key]
        return updated

    def state_dict(self) -> Dict[str, Any]:
        return {"name": self.name}

    def load_state_dict(self, state: Dict[str, Any]) -> None:
        pass


class AdamOptimizer:
    """Adam with bias correction."""

    name = "adam"

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: Dict[str, np.ndarray] = {}
        self.v: Dict[str, np.ndarray] = {}

    def step(self, params: PolicyParams, grads: PolicyParams) -> PolicyParams:
        self.t += 1
        updated = params.copy()
        for key, g in grads.arrays.items():
            m = self.m.get(key, np.zeros_like(g))
            v = self.v.get(key, np.zeros_like(g))
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self.m[key], self.v[key] = m, v
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            updated.arrays[key] = (params.arrays[key]
                                   - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps))
        return updated

    def state_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "t": self.t,
                "m": {k: v.copy() for k, v in self.m.items()},
                "v": {k: v.copy() for k, v in self.v.items()}}

    def load_state_dict(self, state: Dict[str, Any]) -> None:
        self.t = state["t"]
        self.m = {k: v.copy() for k, v in state["m"].items()}
        self.v = {k: v.copy() for k, v in state["v"].items()}


def make_optimizer(config: PpoConfig):
    if config.optimizer == "adam":
        return AdamOptimizer(config.learning_rate)
    if config.optimizer == "sgd":
        return SgdOptimizer(config.learning_rate)
    raise ValueError(f"Unknown optimizer: {config.optimizer}")


@dataclass
class UpdateInfo:
    loss: float
    entropy: float
    value_loss: float
    clip_fraction: float
    grad_norm: float
    minibatches: int


def update(params: PolicyParams, buffer: RolloutBuffer, config: PpoConfig,
           rng: np.random.Generator, optimizer=None) -> Tuple[PolicyParams, UpdateInfo]:
    """
    K epochs of shuffled minibatch steps on the clipped surrogate.

    The parameters that collected the buffer stay fixed as the ratio
    denominator for the whole update.

    Args:
        params: Current parameters
        buffer: Buffer with advantages computed
        config: PPO hyperparameters
        rng: Generator for minibatch shuffling
        optimizer: Optimizer carrying state across updates; a fresh one when omitted

    Returns:
        (updated params, UpdateInfo)

    Raises:
        ValueError: If the batch size exceeds the buffer or advantages are missing
    """
    if config.batch_size > len(buffer):
        raise ValueError(
            f"batch_size {config.batch_size} exceeds the {len(buffer)} buffered transitions"
        )
    if optimizer is None:
        optimizer = make_optimizer(config)
    old_params = params.copy()
    current = params
    losses, entropies, value_losses, clip_fractions, norms = [], [], [], [], []

    for _ in range(config.epochs_per_update):
        for minibatch in buffer.minibatches(config.batch_size, rng):
            loss, grads, info = ppo_loss(current, old_params, minibatch, config)
            norms.append(clip_gradients(grads, config.max_grad_norm))
            current = optimizer.step(current, grads)
            losses.append(loss)
            entropies.append(info.entropy)
            value_losses.append(info.value_loss)
            clip_fractions.append(info.clip_fraction)

    result = UpdateInfo(
        loss=float(np.mean(losses)), entropy=float(np.mean(entropies)),
        value_loss=float(np.mean(value_losses)),
        clip_fraction=float(np.mean(clip_fractions)),
        grad_norm=float(np.mean(norms)), minibatches=len(losses),
    )
    logger.debug(f"Update: loss={result.loss:.5f} entropy={result.entropy:.4f} "
                 f"clip={result.clip_fraction:.3f} over {result.minibatches} minibatches")
    return current, result


LossFn = Callable[[PolicyParams, Minibatch], Tuple[float, PolicyParams]]


def gradient_check(params: PolicyParams, minibatch: Minibatch, h: float = 1e-5,
                   config: Optional[PpoConfig] = None,
                   old_params: Optional[PolicyParams] = None,
                   loss_fn: Optional[LossFn] = None,
                   max_params: Optional[int] = 2000,
                   rng: Optional[np.random.Generator] = None) -> float:
    """
    Compare analytic gradients with central finite differences.

    Args:
        params: Point of evaluation
        minibatch: Data for the loss
        h: Finite-difference step
        config: PPO hyperparameters for the default loss
        old_params: Ratio denominator for the default loss; defaults to ``params``
        loss_fn: Alternative ``(params, minibatch) -> (loss, grads)``
        max_params: Check a random subsample of this many parameters; None checks all
        rng: Generator for the subsample

    Returns:
        Max relative error |g - n| / max(|g| + |n|, 1e-6)
    """
    if loss_fn is None:
        config = config or PpoConfig()
        anchor = (old_params or params).copy()

        def loss_fn(p: PolicyParams, mb: Minibatch) -> Tuple[float, PolicyParams]:
            loss, grads, _ = ppo_loss(p, anchor, mb, config)
            return loss, grads

    _, grads = loss_fn(params, minibatch)
    analytic = grads.flatten()
    base = params.flatten()

    indices = np.arange(base.size)
    if max_params is not None and base.size > max_params:
        rng = rng or np.random.default_rng(0)
        indices = np.sort(rng.choice(base.size, size=max_params, replace=False))

    def loss_at(flat: np.ndarray) -> float:
        p = PolicyParams.from_flat(flat, params.obs_dim, params.n_actions, params.hidden_width)
        return loss_fn(p, minibatch)[0]

    worst = 0.0
    for i in indices:
        probe = base.copy()
        probe[i] = base[i] + h
        plus = loss_at(probe)
        probe[i] = base[i] - h
        minus = loss_at(probe)
        numeric = (plus - minus) / (2.0 * h)
        denom = max(abs(analytic[i]) + abs(numeric), 1e-6)
        worst = max(worst, abs(analytic[i] - numeric) / denom)
    logger.debug(f"Gradient check over {len(indices)} parameters: max rel error {worst:.3e}")
    return worst
