"""
Policy evaluation over fixed-horizon episodes.
"""

import csv
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..config.manager import ConfigManager
from ..dispatch.engine import Policy
from ..env.fab_env import EpisodeStats, FabEnv
from ..logging.trace_logger import TraceLogger, write_event_log
from ..metrics.ledger import OutcomeLedger
from ..tact.timetable import measured_tact
from ..world.model import EventKind

logger = logging.getLogger(__name__)


@dataclass
class EvaluationReport:
    policy: str
    episodes: int
    horizon: int
    steps: int
    ticks: int
    successes: int
    drops: int
    breaks: int
    incompletes: int
    illegal: int
    success_ratio: float
    trailing_ratio: float
    ratio_label: str
    mean_reward_per_step: float
    mean_tact_s: float

    @property
    def failures(self) -> int:
        return self.drops + self.breaks + self.incompletes

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def episode_seeds(seed: int, episodes: int) -> List[int]:
    """World seeds of the evaluation episodes, spawned from one root seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(episodes)]


def run_episode(env: FabEnv, policy: Policy, horizon: int) -> EpisodeStats:
    """Let ``policy`` drive ``env`` for ``horizon`` macro-steps."""
    for _ in range(horizon):
        env.step(policy.act(env))
    return env.stats


def processed_tacts(env: FabEnv) -> List[float]:
    log = env.world.event_log
    tick_s = env.world.params.tick_duration_s
    return [measured_tact(log, e.glass_id, tick_s) for e in log
            if e.kind is EventKind.GLASS_UNLOADED and e.processed]


def evaluate(policy: Policy, config: ConfigManager, episodes: Optional[int] = None,
             horizon: Optional[int] = None, seed: int = 0,
             trace_dir: Optional[Union[str, Path]] = None) -> EvaluationReport:
    """
    Run ``policy`` for E episodes of H steps on fresh worlds.

    Args:
        policy: Policy to evaluate; checkpoints act greedily
        config: Validated configuration
        episodes: Number of episodes; defaults to ``run.eval_episodes``
        horizon: Macro-steps per episode; defaults to ``run.eval_horizon``
        seed: Root seed of the episode worlds
        trace_dir: When given, each episode writes a step trace and an event log

    Returns:
        EvaluationReport over all episodes

    Raises:
        DimensionMismatchError: If a checkpoint does not fit the environment
    """
    episodes = config.run.eval_episodes if episodes is None else episodes
    horizon = config.run.eval_horizon if horizon is None else horizon
    if episodes < 1 or horizon < 1:
        raise ValueError("episodes and horizon must be at least 1")

    ledger = OutcomeLedger(config.run.success_window)
    total_reward = 0.0
    steps = ticks = illegal = 0
    tacts: List[float] = []

    with policy:
        for index, world_seed in enumerate(episode_seeds(seed, episodes)):
            trace = None
            if trace_dir is not None:
                trace = TraceLogger(Path(trace_dir) / f"trace_ep{index}.csv")
            env = FabEnv(config, seed=world_seed, trace=trace)
            stats = run_episode(env, policy, horizon)
            ledger.record(env.world.event_log)
            if trace_dir is not None:
                write_event_log(env.world.event_log, Path(trace_dir) / f"events_ep{index}.csv")
            total_reward += stats.reward
            steps += stats.steps
            ticks += stats.ticks
            illegal += stats.illegal
            tacts.extend(processed_tacts(env))
            logger.debug(f"Episode {index}: processed={stats.processed} "
                         f"dropped={stats.dropped} broken={stats.broken}")

    totals = ledger.totals
    report = EvaluationReport(
        policy=policy.policy_type, episodes=episodes, horizon=horizon,
        steps=steps, ticks=ticks,
        successes=totals.successes, drops=totals.drops, breaks=totals.breaks,
        incompletes=totals.incompletes, illegal=illegal,
        success_ratio=totals.success_ratio, trailing_ratio=ledger.trailing_ratio,
        ratio_label=totals.ratio_label(),
        mean_reward_per_step=total_reward / steps,
        mean_tact_s=float(np.mean(tacts)) if tacts else math.nan,
    )
    logger.info(f"Evaluated {policy.policy_type}: {report.successes} successes, "
                f"{report.failures} failures ({report.ratio_label})")
    return report


def write_report(report: EvaluationReport, path: Union[str, Path]) -> Path:
    """Write the report as a two-line CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = report.as_dict()
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(values)
        writer.writerow([_format(v) for v in values.values()])
    return path


def _format(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)
