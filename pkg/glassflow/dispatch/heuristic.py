"""
Rule-based dispatcher: serve the in-out signal whose move chain finishes first.

Chambers raise signals (the loader and finished process chambers ask for their
glass to be taken out, empty process chambers and the unloader report they can
take one in). The dispatcher enumerates every chain that honours the order
loader -> process -> unloader, estimates its completion ticks with the
simulator's kinematic constants and issues the first primitive of the
cheapest one.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from ..env.fab_env import FabEnv, command_to_action
from ..world.fab_world import aligned_chamber
from ..world.model import ChamberKind, Command, GlassState, WorldState
from .engine import Policy

logger = logging.getLogger(__name__)


class SignalKind(Enum):
    OUT_REQUEST = "OutRequest"
    IN_READY = "InReady"


@dataclass(frozen=True)
class Signal:
    chamber_id: int
    kind: SignalKind
    age_ticks: int
    glass_state: Optional[GlassState] = None


@dataclass(frozen=True)
class RobotView:
    """What the dispatcher knows about the robot and the cell layout."""
    theta: float
    aligned: Optional[int]
    held: Tuple[Optional[GlassState], ...]
    chamber_angles: Tuple[float, ...]
    rotation_step: float
    handling_ticks: int

    @property
    def num_chambers(self) -> int:
        return len(self.chamber_angles)

    @property
    def num_process_chambers(self) -> int:
        return self.num_chambers - 2

    @property
    def unloader_id(self) -> int:
        return self.num_chambers - 1

    def rotation_cost(self, from_angle: float, chamber_id: int) -> int:
        delta = abs(math.remainder(self.chamber_angles[chamber_id] - from_angle, 2 * math.pi))
        if delta <= 1e-9:
            return 0
        return int(math.ceil(round(delta / self.rotation_step, 9)))

    def leg_cost(self, from_chamber: Optional[int], to_chamber: int) -> int:
        if from_chamber is None:
            return self.rotation_cost(self.theta, to_chamber)
        if from_chamber == to_chamber:
            return 0
        return self.rotation_cost(self.chamber_angles[from_chamber], to_chamber)


@dataclass(frozen=True)
class Chain:
    """Candidate move chain, ranked by (cost, -age, chamber_id)."""
    cost: int
    age: int
    chamber_id: int
    first: Command

    @property
    def rank(self) -> Tuple[int, int, int]:
        return (self.cost, -self.age, self.chamber_id)


def collect_signals(world: WorldState) -> List[Signal]:
    """In-out signals of every chamber, in chamber order."""
    signals = []
    for chamber in world.chambers:
        age = world.tick - chamber.state_since
        occupant = None if chamber.occupant is None else world.glasses[chamber.occupant]
        if chamber.kind is ChamberKind.LOADER:
            if occupant is not None and occupant.state is GlassState.RAW:
                signals.append(Signal(chamber.id, SignalKind.OUT_REQUEST, age, GlassState.RAW))
        elif chamber.kind is ChamberKind.PROCESS:
            if occupant is None:
                signals.append(Signal(chamber.id, SignalKind.IN_READY, age))
            elif occupant.state is GlassState.PROCESSED:
                signals.append(Signal(chamber.id, SignalKind.OUT_REQUEST, age,
                                      GlassState.PROCESSED))
        elif occupant is None:
            signals.append(Signal(chamber.id, SignalKind.IN_READY, age))
    return signals


def robot_view(world: WorldState) -> RobotView:
    held = tuple(None if arm.held_glass is None else world.glasses[arm.held_glass].state
                 for arm in world.robot.arms)
    return RobotView(
        theta=world.robot.theta,
        aligned=aligned_chamber(world),
        held=held,
        chamber_angles=tuple(c.angle for c in world.chambers),
        rotation_step=world.params.rotation_step,
        handling_ticks=world.params.handling_ticks,
    )


def _first(robot: RobotView, chamber_id: int, arm_command: Command) -> Command:
    if robot.aligned == chamber_id:
        return arm_command
    return Command.rotate_to(chamber_id)


def _chains(signals: List[Signal], robot: RobotView) -> List[Chain]:
    k = robot.num_process_chambers
    unloader = robot.unloader_id
    in_ready = {s.chamber_id: s for s in signals if s.kind is SignalKind.IN_READY}
    out_requests = [s for s in signals if s.kind is SignalKind.OUT_REQUEST]
    ready_process = [c for c in in_ready if c != unloader]
    empty_arms = [i for i, state in enumerate(robot.held) if state is None]
    held_raw = sum(1 for state in robot.held if state is GlassState.RAW)
    t_move = robot.handling_ticks
    chains: List[Chain] = []

    for arm_id, state in enumerate(robot.held):
        if state is None:
            continue
        needs_process = state is GlassState.RAW and k > 0
        targets = ready_process if needs_process else (
            [unloader] if unloader in in_ready else [])
        for target in targets:
            cost = robot.leg_cost(None, target) + t_move
            chains.append(Chain(cost, in_ready[target].age_ticks, target,
                                _first(robot, target, Command.arm_unload(arm_id))))

    if not empty_arms:
        return chains
    arm_id = empty_arms[0]
    for signal in out_requests:
        source = signal.chamber_id
        pickup = robot.leg_cost(None, source) + t_move
        if signal.glass_state is GlassState.PROCESSED or k == 0:
            if unloader not in in_ready:
                continue
            cost = pickup + robot.leg_cost(source, unloader) + t_move
        else:
            # Raw pickup must leave a free process chamber for every raw glass on the arms
            if held_raw >= len(ready_process):
                continue
            cost = pickup + min(robot.leg_cost(source, c) for c in ready_process) + t_move
        chains.append(Chain(cost, signal.age_ticks, source,
                            _first(robot, source, Command.arm_load(arm_id))))
    return chains


def heuristic_decide(signals: List[Signal], robot: RobotView) -> int:
    """
    Action id of the first step of the fastest feasible chain.

    Ties go to the older signal, then to the lower chamber id. With nothing
    feasible the answer is Wait.
    """
    chains = _chains(signals, robot)
    if chains:
        command = min(chains, key=lambda c: c.rank).first
    else:
        command = Command.wait()
    return command_to_action(command, robot.num_chambers, len(robot.held))


class HeuristicPolicy(Policy):
    """Fastest-signal dispatcher used as the comparison baseline."""

    @property
    def policy_type(self) -> str:
        return "heuristic"

    def select_action(self, env: FabEnv) -> int:
        world = env.world
        action = heuristic_decide(collect_signals(world), robot_view(world))
        logger.debug(f"tick {world.tick}: heuristic chose {env.command_for(action).label}")
        return action


def describe_chains(world: WorldState) -> List[Dict[str, Any]]:
    """Ranked candidate chains of the current state, for inspection."""
    chains = sorted(_chains(collect_signals(world), robot_view(world)), key=lambda c: c.rank)
    return [{"chamber_id": c.chamber_id, "cost": c.cost, "age": c.age, "first": c.first.label}
            for c in chains]
