"""
Sequential decision environment over the FAB world.

One step issues one command and ticks the world until it finishes; every
reward arising meanwhile is credited to that step together with one time
penalty.
"""

import copy
import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from ..config.manager import ConfigManager, RewardTable
from ..logging.trace_logger import TraceLogger
from ..world.fab_world import (
    build_world_from_config, command_is_legal, issue_command, tick,
)
from ..world.model import Command, CommandKind, Event, EventKind, WorldState
from .observations import basic_length, observe_basic, observe_reduced, reduced_length

logger = logging.getLogger(__name__)


def action_count(num_chambers: int, num_arms: int) -> int:
    """
    Size of the action space: C rotations, A loads, A unloads and one wait.

    Raises:
        ValueError: If C < 1 or A is not 1 or 2
    """
    if num_chambers < 1:
        raise ValueError(f"num_chambers must be at least 1, got {num_chambers}")
    if num_arms not in (1, 2):
        raise ValueError(f"num_arms must be 1 or 2, got {num_arms}")
    return num_chambers + 2 * num_arms + 1


def action_to_command(action_id: int, num_chambers: int, num_arms: int) -> Command:
    """Map an action id onto [RotateTo(0..C-1), ArmLoad(0..A-1), ArmUnload(0..A-1), Wait]."""
    n = action_count(num_chambers, num_arms)
    if not 0 <= action_id < n:
        raise ValueError(f"Action id {action_id} out of range 0..{n - 1}")
    if action_id < num_chambers:
        return Command.rotate_to(action_id)
    action_id -= num_chambers
    if action_id < num_arms:
        return Command.arm_load(action_id)
    action_id -= num_arms
    if action_id < num_arms:
        return Command.arm_unload(action_id)
    return Command.wait()


def command_to_action(command: Command, num_chambers: int, num_arms: int) -> int:
    """Inverse of ``action_to_command``."""
    if command.is_arm_command:
        offset = num_chambers if command.kind is CommandKind.ARM_LOAD else num_chambers + num_arms
        return offset + command.target
    if command.kind is CommandKind.ROTATE_TO:
        return command.target
    return num_chambers + 2 * num_arms


def reward_for_events(events: Iterable[Event], table: RewardTable) -> float:
    """
    Sum of event rewards, without the time penalty.

    Processed arrival earns ``processed_arrival``; incomplete arrival, drops
    and breaks cost their penalties.
    """
    total = 0.0
    for event in events:
        if event.kind is EventKind.GLASS_UNLOADED:
            total += table.processed_arrival if event.processed else table.incomplete_arrival
        elif event.kind is EventKind.GLASS_DROPPED:
            total += table.glass_dropped
        elif event.kind is EventKind.GLASS_BROKEN:
            total += table.glass_broken
    return total


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    ticks_elapsed: int
    events: List[Event]
    done: bool = False
    illegal: bool = False
    action: int = -1

    @property
    def truncated(self) -> bool:
        """``done`` only ever marks horizon truncation."""
        return self.done


@dataclass
class Transition:
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    log_prob: float
    value: float


@dataclass
class EpisodeStats:
    """Running event counts of an environment."""
    steps: int = 0
    ticks: int = 0
    reward: float = 0.0
    processed: int = 0
    incomplete: int = 0
    dropped: int = 0
    broken: int = 0
    illegal: int = 0

    def record(self, result: StepResult) -> None:
        self.steps += 1
        self.ticks += result.ticks_elapsed
        self.reward += result.reward
        self.illegal += int(result.illegal)
        for event in result.events:
            if event.kind is EventKind.GLASS_UNLOADED:
                if event.processed:
                    self.processed += 1
                else:
                    self.incomplete += 1
            elif event.kind is EventKind.GLASS_DROPPED:
                self.dropped += 1
            elif event.kind is EventKind.GLASS_BROKEN:
                self.broken += 1


class FabEnv:
    """Continuing-task environment; ``done`` marks truncation every T steps."""

    def __init__(self, config: ConfigManager, seed: Optional[int] = None,
                 trace: Optional[TraceLogger] = None):
        """
        Initialize environment.

        Args:
            config: Validated configuration
            seed: World seed; defaults to ``ppo.seed``
            trace: Optional step-trace writer
        """
        self.config = config
        self.reward_table = config.reward
        self.mode = config.env.observation_mode
        self.horizon = config.env.rollout_horizon
        self.slots = config.max_glasses_tracked
        self.num_chambers = config.num_chambers
        self.num_arms = config.process.num_arms
        self.n_actions = action_count(self.num_chambers, self.num_arms)
        self.trace = trace
        self.seed = config.ppo.seed if seed is None else seed
        self.world: WorldState = build_world_from_config(config, self.seed)
        self.stats = EpisodeStats()

    @property
    def obs_dim(self) -> int:
        if self.mode == "reduced":
            return reduced_length(self.num_chambers, self.num_arms)
        return basic_length(self.num_chambers, self.num_arms, self.slots)

    def observe(self) -> np.ndarray:
        if self.mode == "reduced":
            return observe_reduced(self.world)
        return observe_basic(self.world, self.slots)

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        """Build a fresh world and return its observation."""
        if seed is not None:
            self.seed = seed
        self.world = build_world_from_config(self.config, self.seed)
        self.stats = EpisodeStats()
        logger.debug(f"Environment reset with seed {self.seed}")
        return self.observe()

    def command_for(self, action_id: int) -> Command:
        return action_to_command(action_id, self.num_chambers, self.num_arms)

    def is_legal(self, action_id: int) -> bool:
        return command_is_legal(self.world, self.command_for(action_id))

    def legal_actions(self) -> List[int]:
        return [a for a in range(self.n_actions) if self.is_legal(a)]

    def step(self, action_id: int) -> StepResult:
        """
        Execute one macro-action.

        Illegal-in-state actions run as a one-tick wait that earns only the
        time penalty plus whatever the world emits in that tick.

        Raises:
            ValueError: If the action id is out of range
        """
        command = self.command_for(action_id)
        illegal = not command_is_legal(self.world, command)
        if illegal:
            logger.debug(f"tick {self.world.tick}: {command.label} illegal, waiting one tick")
            command = Command.wait()

        issue_command(self.world, command)
        events: List[Event] = []
        ticks = 0
        while self.world.robot.active_command is not None:
            _, emitted = tick(self.world)
            events.extend(emitted)
            ticks += 1

        reward = reward_for_events(events, self.reward_table) + self.reward_table.time_penalty
        done = (self.stats.steps + 1) % self.horizon == 0
        result = StepResult(observation=self.observe(), reward=reward, ticks_elapsed=ticks,
                            events=events, done=done, illegal=illegal, action=action_id)
        self.stats.record(result)
        if self.trace is not None:
            self.trace.log_step(self.command_for(action_id).label, reward, ticks, events)
        return result

    def snapshot(self) -> Dict[str, Any]:
        """Deep copy of the resumable state (world, generator and counters)."""
        return {"world": copy.deepcopy(self.world), "stats": copy.deepcopy(self.stats),
                "seed": self.seed}

    def restore(self, state: Dict[str, Any]) -> None:
        self.world = copy.deepcopy(state["world"])
        self.stats = copy.deepcopy(state["stats"])
        self.seed = state["seed"]


def reset(config: ConfigManager, seed: Optional[int] = None) -> FabEnv:
    """Create an environment with a fresh world; its observation is ``env.observe()``."""
    env = FabEnv(config, seed)
    env.reset()
    return env
