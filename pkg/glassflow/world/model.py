"""
Domain types of the FAB unit-process simulator.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config.manager import GeometryParams, PhysicalParams, ProcessParams


class InvalidTargetError(ValueError):
    """Chamber or arm id outside the configured range."""


class BusyError(RuntimeError):
    """A command was issued while another one is in progress (interlock)."""


class GlassState(Enum):
    """Lifecycle states of a glass."""
    RAW = "raw"
    PROCESSING = "processing"
    PROCESSED = "processed"
    UNLOADED = "unloaded"
    DROPPED = "dropped"
    BROKEN = "broken"

    @property
    def is_terminal(self) -> bool:
        return self in (GlassState.UNLOADED, GlassState.DROPPED, GlassState.BROKEN)

    @property
    def rank(self) -> int:
        """Position along the lifecycle; transitions never decrease it."""
        return _STATE_RANK[self]


_STATE_RANK = {
    GlassState.RAW: 0,
    GlassState.PROCESSING: 1,
    GlassState.PROCESSED: 2,
    GlassState.UNLOADED: 3,
    GlassState.DROPPED: 4,
    GlassState.BROKEN: 4,
}


class ChamberKind(Enum):
    LOADER = "loader"
    PROCESS = "process"
    UNLOADER = "unloader"


class SensorReading(Enum):
    """Glass state detection sensor of a chamber."""
    EMPTY = "empty"
    RAW = "raw"
    PROCESSING = "processing"
    PROCESSED = "processed"


class CommandKind(Enum):
    ROTATE_TO = "RotateTo"
    ARM_LOAD = "ArmLoad"
    ARM_UNLOAD = "ArmUnload"
    WAIT = "Wait"


@dataclass(frozen=True)
class Command:
    """Robot command; ``target`` is a chamber id for RotateTo and an arm id otherwise."""
    kind: CommandKind
    target: int = 0

    @classmethod
    def rotate_to(cls, chamber_id: int) -> "Command":
        return cls(CommandKind.ROTATE_TO, chamber_id)

    @classmethod
    def arm_load(cls, arm_id: int) -> "Command":
        return cls(CommandKind.ARM_LOAD, arm_id)

    @classmethod
    def arm_unload(cls, arm_id: int) -> "Command":
        return cls(CommandKind.ARM_UNLOAD, arm_id)

    @classmethod
    def wait(cls) -> "Command":
        return cls(CommandKind.WAIT, 0)

    @property
    def is_arm_command(self) -> bool:
        return self.kind in (CommandKind.ARM_LOAD, CommandKind.ARM_UNLOAD)

    @property
    def label(self) -> str:
        if self.kind is CommandKind.WAIT:
            return "Wait"
        return f"{self.kind.value}({self.target})"

    @classmethod
    def parse(cls, label: str) -> "Command":
        """Inverse of ``label``."""
        if label == "Wait":
            return cls.wait()
        name, _, rest = label.partition("(")
        try:
            kind = CommandKind(name)
            target = int(rest.rstrip(")"))
        except ValueError:
            raise ValueError(f"Unrecognized command label: {label}")
        return cls(kind, target)


class EventKind(Enum):
    GLASS_SPAWNED = "GlassSpawned"
    PROCESS_STARTED = "ProcessStarted"
    PROCESS_COMPLETED = "ProcessCompleted"
    GLASS_DROPPED = "GlassDropped"
    GLASS_BROKEN = "GlassBroken"
    GLASS_UNLOADED = "GlassUnloaded"
    COMMAND_STARTED = "CommandStarted"
    COMMAND_FINISHED = "CommandFinished"


@dataclass(frozen=True)
class Event:
    """
    One entry of the world's event log.

    ``detail`` holds "processed"/"incomplete" for GlassUnloaded and the
    command label for command events.
    """
    tick: int
    kind: EventKind
    glass_id: Optional[int] = None
    chamber_id: Optional[int] = None
    detail: str = ""

    @property
    def processed(self) -> bool:
        return self.kind is EventKind.GLASS_UNLOADED and self.detail == "processed"

    @property
    def command(self) -> Optional[Command]:
        if self.kind in (EventKind.COMMAND_STARTED, EventKind.COMMAND_FINISHED):
            return Command.parse(self.detail)
        return None


@dataclass
class Glass:
    id: int
    state: GlassState
    spawn_tick: int
    chamber_id: Optional[int] = None
    arm_id: Optional[int] = None
    process_ticks_remaining: int = 0

    @property
    def location(self) -> Optional[Tuple[str, int]]:
        if self.chamber_id is not None:
            return ("chamber", self.chamber_id)
        if self.arm_id is not None:
            return ("arm", self.arm_id)
        return None


@dataclass
class Chamber:
    id: int
    kind: ChamberKind
    angle: float
    occupant: Optional[int] = None
    spawn_cooldown: int = 0
    unload_count: int = 0
    state_since: int = 0


@dataclass
class Arm:
    id: int
    extension: float = 0.0
    height: float = 0.0
    held_glass: Optional[int] = None
    guide_pin_engaged: bool = False


@dataclass
class CommandInProgress:
    """Schedule of the active command, advanced one tick at a time."""
    command: Command
    start_tick: int
    duration: int
    chamber_id: Optional[int] = None
    elapsed: int = 0
    start_theta: float = 0.0
    target_theta: float = 0.0
    direction: float = 0.0
    step: float = 0.0
    contact_tick: int = 0


@dataclass
class Motion:
    """What the robot did during the current tick; read by the failure rules."""
    angular_speed: float = 0.0
    contact: Optional[Tuple[CommandKind, int, int]] = None


@dataclass
class Robot:
    theta: float
    arms: List[Arm]
    active_command: Optional[CommandInProgress] = None
    motion: Motion = field(default_factory=Motion)


@dataclass
class Counters:
    spawned: int = 0
    unloaded: int = 0
    unloaded_processed: int = 0
    unloaded_incomplete: int = 0
    dropped: int = 0
    broken: int = 0

    @property
    def failures(self) -> int:
        return self.dropped + self.broken + self.unloaded_incomplete


@dataclass(frozen=True)
class WorldParams:
    """Configuration snapshot plus the tick-based constants derived from it."""
    physical: PhysicalParams
    process: ProcessParams
    geometry: GeometryParams
    process_ticks: int
    interval_ticks: int
    handling_ticks: int
    rotation_step: float
    omega_max_per_tick: float
    facing_tolerance: float

    @property
    def num_process_chambers(self) -> int:
        return self.process.num_process_chambers

    @property
    def num_chambers(self) -> int:
        return self.process.num_process_chambers + 2

    @property
    def num_arms(self) -> int:
        return self.process.num_arms

    @property
    def tick_duration_s(self) -> float:
        return self.process.tick_duration_s


@dataclass
class WorldState:
    """Complete simulator state, advanced by exactly one driver."""
    params: WorldParams
    seed: int
    tick: int
    chambers: List[Chamber]
    robot: Robot
    glasses: Dict[int, Glass]
    rng: np.random.Generator
    event_log: List[Event] = field(default_factory=list)
    counters: Counters = field(default_factory=Counters)
    next_glass_id: int = 0

    @property
    def loader(self) -> Chamber:
        return self.chambers[0]

    @property
    def unloader(self) -> Chamber:
        return self.chambers[-1]

    @property
    def process_chambers(self) -> List[Chamber]:
        return self.chambers[1:-1]

    def glasses_in_play(self) -> List[Glass]:
        return [g for g in self.glasses.values() if not g.state.is_terminal]
