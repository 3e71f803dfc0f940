"""
Training loop: multi-actor rollouts, PPO updates, metrics and checkpoints.
"""

import logging
import pickle
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np

from ..config.manager import ConfigManager
from ..env.fab_env import EpisodeStats, FabEnv
from ..metrics.collector import IterationMetrics, MetricsCollector
from .checkpoint import load_checkpoint, save_checkpoint
from .network import PolicyParams, effective_hidden_width, init_params
from .ppo import RolloutBuffer, UpdateInfo, collect_rollout, make_optimizer, update

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "policy.gfpc"
STATE_NAME = "trainer_state.pkl"
METRICS_NAME = "metrics.csv"


@dataclass
class Actor:
    """One environment instance with its own action-sampling stream."""
    env: FabEnv
    rng: np.random.Generator


@dataclass
class TrainingResult:
    params: PolicyParams
    iterations: int
    env_steps: int
    checkpoint: Optional[Path] = None
    history: List[IterationMetrics] = field(default_factory=list)


def merge_buffers(buffers: List[RolloutBuffer]) -> RolloutBuffer:
    """Concatenate per-actor buffers whose advantages are already computed."""
    merged = RolloutBuffer(capacity=sum(b.capacity for b in buffers))
    for b in buffers:
        for t in b.transitions:
            merged.add(t)
        for name in ("steps", "ticks", "reward", "processed", "incomplete",
                     "dropped", "broken", "illegal"):
            setattr(merged.stats, name, getattr(merged.stats, name) + getattr(b.stats, name))
    merged.advantages = np.concatenate([b.advantages for b in buffers])
    merged.returns = np.concatenate([b.returns for b in buffers])
    merged.bootstrap_value = buffers[-1].bootstrap_value
    return merged


class Trainer:
    """
    PPO trainer over ``ppo.num_actors`` parallel environments.

    Every random stream (weight init, per-actor worlds and action sampling,
    minibatch shuffling) is spawned from one seed, so a run is a pure
    function of (seed, config).
    """

    def __init__(self, config: ConfigManager, seed: Optional[int] = None,
                 run_dir: Optional[Union[str, Path]] = None):
        """
        Initialize trainer.

        Args:
            config: Validated configuration
            seed: Root seed; defaults to ``ppo.seed``
            run_dir: Directory for metrics, checkpoints and resume state
        """
        config.ensure_valid()
        self.config = config
        self.ppo = config.ppo
        self.seed = self.ppo.seed if seed is None else seed
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.horizon = config.env.rollout_horizon

        root = np.random.SeedSequence(self.seed)
        init_seq, update_seq, *actor_seqs = root.spawn(2 + self.ppo.num_actors)
        self.update_rng = np.random.default_rng(update_seq)
        self.actors: List[Actor] = []
        for seq in actor_seqs:
            world_seq, action_seq = seq.spawn(2)
            env_seed = int(world_seq.generate_state(1)[0])
            self.actors.append(Actor(FabEnv(config, seed=env_seed),
                                     np.random.default_rng(action_seq)))

        env = self.actors[0].env
        self.params = init_params(env.obs_dim, env.n_actions,
                                  effective_hidden_width(self.ppo),
                                  np.random.default_rng(init_seq))
        self.optimizer = make_optimizer(self.ppo)
        self.iteration = 0
        self.env_steps = 0
        self.collector = MetricsCollector(self.run_dir / METRICS_NAME if self.run_dir else None)

    @property
    def checkpoint_path(self) -> Optional[Path]:
        return self.run_dir / CHECKPOINT_NAME if self.run_dir else None

    @property
    def state_path(self) -> Optional[Path]:
        return self.run_dir / STATE_NAME if self.run_dir else None

    def _collect_one(self, actor: Actor) -> RolloutBuffer:
        buffer = collect_rollout(actor.env, self.params, self.horizon, actor.rng)
        buffer.compute(self.ppo.gamma, self.ppo.gae_lambda)
        return buffer

    def collect(self) -> RolloutBuffer:
        """Fill one buffer of num_actors * rollout_horizon transitions."""
        if len(self.actors) == 1:
            return merge_buffers([self._collect_one(self.actors[0])])
        with ThreadPoolExecutor(max_workers=len(self.actors)) as pool:
            buffers = list(pool.map(self._collect_one, self.actors))
        return merge_buffers(buffers)

    def train_iteration(self) -> IterationMetrics:
        buffer = self.collect()
        self.params, info = update(self.params, buffer, self.ppo, self.update_rng,
                                   self.optimizer)
        self.iteration += 1
        self.env_steps += len(buffer)
        metrics = self._iteration_metrics(buffer.stats, buffer.rewards, info)
        self.collector.record_iteration(metrics)
        return metrics

    def _iteration_metrics(self, stats: EpisodeStats, rewards: np.ndarray,
                           info: UpdateInfo) -> IterationMetrics:
        return IterationMetrics(
            iteration=self.iteration, env_steps=self.env_steps,
            mean_reward=float(np.mean(rewards)), success_count=stats.processed,
            drop_count=stats.dropped, break_count=stats.broken,
            loss=info.loss, entropy=info.entropy,
        )

    def train(self, max_steps: Optional[int] = None,
              callback: Optional[Callable[[IterationMetrics], None]] = None) -> TrainingResult:
        """
        Run iterations until ``max_steps`` environment steps are collected.

        Args:
            max_steps: Step budget; defaults to ``ppo.max_steps``
            callback: Called with each iteration's metrics

        Returns:
            TrainingResult with the final parameters
        """
        budget = self.ppo.max_steps if max_steps is None else max_steps
        logger.info(f"Training seed {self.seed}: {budget} steps, "
                    f"{len(self.actors)} actor(s), buffer {self.ppo.buffer_size}")
        history = []
        while self.env_steps < budget:
            metrics = self.train_iteration()
            history.append(metrics)
            if callback is not None:
                callback(metrics)
            interval = self.ppo.checkpoint_interval
            if interval and self.iteration % interval == 0:
                self.save()
        checkpoint = self.save() if self.run_dir else None
        logger.info(f"Training finished after {self.iteration} iterations "
                    f"({self.env_steps} steps)")
        return TrainingResult(params=self.params, iterations=self.iteration,
                              env_steps=self.env_steps, checkpoint=checkpoint,
                              history=history)

    def save(self) -> Optional[Path]:
        """Write the checkpoint and the resume state next to it."""
        if self.run_dir is None:
            return None
        path = save_checkpoint(self.params, self.config.get_config_dict(),
                               self.checkpoint_path, step=self.env_steps)
        state = {
            "seed": self.seed,
            "iteration": self.iteration,
            "env_steps": self.env_steps,
            "update_rng": self.update_rng.bit_generator.state,
            "optimizer": self.optimizer.state_dict(),
            "actors": [{"env": a.env.snapshot(), "rng": a.rng.bit_generator.state}
                       for a in self.actors],
        }
        tmp = self.state_path.with_name(STATE_NAME + ".tmp")
        with open(tmp, "wb") as f:
            pickle.dump(state, f)
        tmp.replace(self.state_path)
        return path

    @classmethod
    def resume(cls, config: ConfigManager, run_dir: Union[str, Path]) -> "Trainer":
        """
        Rebuild a trainer from the checkpoint and resume state in ``run_dir``.

        Raises:
            FileNotFoundError: If either file is missing
            ValueError: If the resume state belongs to another actor count
        """
        run_dir = Path(run_dir)
        with open(run_dir / STATE_NAME, "rb") as f:
            state: Dict[str, Any] = pickle.load(f)
        if len(state["actors"]) != config.ppo.num_actors:
            raise ValueError(
                f"Resume state has {len(state['actors'])} actors, config asks for "
                f"{config.ppo.num_actors}"
            )
        checkpoint = load_checkpoint(run_dir / CHECKPOINT_NAME)

        trainer = cls.__new__(cls)
        trainer.config = config
        trainer.ppo = config.ppo
        trainer.seed = state["seed"]
        trainer.run_dir = run_dir
        trainer.horizon = config.env.rollout_horizon
        trainer.update_rng = np.random.default_rng()
        trainer.update_rng.bit_generator.state = state["update_rng"]
        trainer.actors = []
        for saved in state["actors"]:
            env = FabEnv(config, seed=saved["env"]["seed"])
            env.restore(saved["env"])
            rng = np.random.default_rng()
            rng.bit_generator.state = saved["rng"]
            trainer.actors.append(Actor(env, rng))
        trainer.params = checkpoint.params
        trainer.optimizer = make_optimizer(config.ppo)
        trainer.optimizer.load_state_dict(state["optimizer"])
        trainer.iteration = state["iteration"]
        trainer.env_steps = state["env_steps"]
        trainer.collector = MetricsCollector(run_dir / METRICS_NAME, resume=True)
        _truncate_metrics(trainer.collector, trainer.iteration)
        logger.info(f"Resumed training in {run_dir} at iteration {trainer.iteration}")
        return trainer


def _truncate_metrics(collector: MetricsCollector, iteration: int) -> None:
    """Drop rows written after the resume point and rewrite the CSV."""
    kept = [r for r in collector.rows if r.iteration <= iteration]
    if len(kept) == len(collector.rows):
        return
    path = collector.csv_file
    fresh = MetricsCollector(path)
    for row in kept:
        fresh.record_iteration(row)
    collector.rows = fresh.rows
