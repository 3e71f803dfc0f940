"""
Tick-driven FAB unit-process world.

The world is mutated in place by its single driver; ``tick`` and
``apply_failure_rules`` return the same object together with the events
emitted during the call.
"""

import logging
import math
from dataclasses import replace
from typing import List, Optional, Tuple

import numpy as np

from ..config.manager import (
    ConfigManager, ConfigurationError, GeometryParams, PhysicalParams, ProcessParams,
    ticks_from_seconds,
)
from .model import (
    Arm, BusyError, Chamber, ChamberKind, Command, CommandInProgress, CommandKind,
    Event, EventKind, Glass, GlassState, InvalidTargetError, Motion, Robot,
    SensorReading, WorldParams, WorldState,
)

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_ANGLE_EPS = 1e-9
_SPEED_RTOL = 1e-9


def max_safe_rotation_speed(physical: PhysicalParams) -> float:
    """
    Highest angular speed (rad/s) at which static friction holds a carried glass.

    Args:
        physical: Physical parameter setting

    Returns:
        sqrt(mu_s * g / r)
    """
    return math.sqrt(physical.static_friction * physical.gravity_accel / physical.arm_radius)


def safe_transfer_speed(physical: PhysicalParams,
                        geometry: Optional[GeometryParams] = None) -> float:
    """Largest transfer speed setting whose rotation stays under the slip limit."""
    geometry = geometry or GeometryParams()
    return max_safe_rotation_speed(physical) / geometry.effective_rotation_gain


def chamber_angle(chamber_id: int, num_chambers: int) -> float:
    return TWO_PI * chamber_id / num_chambers


def _normalize(angle: float) -> float:
    angle = math.fmod(angle, TWO_PI)
    if angle < 0:
        angle += TWO_PI
    return angle


def angular_distance(a: float, b: float) -> float:
    """Unsigned shortest angle between two headings."""
    d = abs(_normalize(a) - _normalize(b))
    return min(d, TWO_PI - d)


def _signed_delta(start: float, target: float) -> float:
    """Shortest signed rotation from start to target; half turns go positive."""
    d = _normalize(target - start)
    if d > math.pi + _ANGLE_EPS:
        d -= TWO_PI
    elif abs(d - math.pi) <= _ANGLE_EPS:
        d = math.pi
    return d


def build_world(process: ProcessParams,
                physical: PhysicalParams,
                seed: int,
                geometry: Optional[GeometryParams] = None) -> WorldState:
    """
    Create a world with every chamber empty and the robot facing the loader.

    Args:
        process: Process parameters (chamber and arm counts, timings)
        physical: Physical parameter setting
        seed: Seed of the world's random generator
        geometry: Cell geometry; defaults are used when omitted

    Returns:
        Fresh WorldState at tick 0

    Raises:
        ConfigurationError: If the parameters do not validate
    """
    manager = ConfigManager(apply_env=False)
    manager.process = replace(process)
    manager.physical = replace(physical)
    manager.geometry = replace(geometry) if geometry is not None else GeometryParams()
    errors = [e for e in manager.validate_config()
              if e.split(".", 1)[0] in ("physical", "process", "geometry")]
    if errors:
        raise ConfigurationError(errors[0], errors[0].split(" ", 1)[0])

    num_chambers = process.num_process_chambers + 2
    omega_max = max_safe_rotation_speed(physical)
    rotation_speed = physical.transfer_speed * manager.geometry.effective_rotation_gain
    params = WorldParams(
        physical=manager.physical,
        process=manager.process,
        geometry=manager.geometry,
        process_ticks=manager.process_time_ticks,
        interval_ticks=ticks_from_seconds(process.glass_input_interval_s,
                                          process.tick_duration_s),
        handling_ticks=manager.geometry.handling_ticks,
        rotation_step=rotation_speed * process.tick_duration_s,
        omega_max_per_tick=omega_max * process.tick_duration_s,
        facing_tolerance=0.5 * TWO_PI / num_chambers,
    )

    chambers = []
    for cid in range(num_chambers):
        if cid == 0:
            kind = ChamberKind.LOADER
        elif cid == num_chambers - 1:
            kind = ChamberKind.UNLOADER
        else:
            kind = ChamberKind.PROCESS
        chambers.append(Chamber(id=cid, kind=kind, angle=chamber_angle(cid, num_chambers)))

    robot = Robot(theta=chambers[0].angle,
                  arms=[Arm(id=a) for a in range(process.num_arms)])

    logger.debug(f"Built world: {num_chambers} chambers, {process.num_arms} arms, seed {seed}")
    return WorldState(
        params=params,
        seed=seed,
        tick=0,
        chambers=chambers,
        robot=robot,
        glasses={},
        rng=np.random.default_rng(seed),
    )


def build_world_from_config(config: ConfigManager, seed: Optional[int] = None) -> WorldState:
    """Build a world from a ConfigManager; the seed defaults to ``ppo.seed``."""
    return build_world(config.process, config.physical,
                       config.ppo.seed if seed is None else seed,
                       config.geometry)


def facing_chamber(world: WorldState, tolerance: Optional[float] = None) -> Optional[int]:
    """
    Chamber the robot faces, or None when it sits between chambers.

    Args:
        world: World state
        tolerance: Angular tolerance in radians; defaults to half the chamber spacing

    Returns:
        Chamber id or None
    """
    if tolerance is None:
        tolerance = world.params.facing_tolerance
    best_id, best_dist = None, None
    for chamber in world.chambers:
        dist = angular_distance(world.robot.theta, chamber.angle)
        if best_dist is None or dist < best_dist:
            best_id, best_dist = chamber.id, dist
    if best_dist is not None and best_dist < tolerance - _ANGLE_EPS:
        return best_id
    return None


def aligned_chamber(world: WorldState) -> Optional[int]:
    """Chamber the robot is stopped exactly in front of (arm work possible)."""
    return facing_chamber(world, tolerance=1e-6)


def is_busy(world: WorldState, chamber_id: int) -> bool:
    """True while the active arm command works on the chamber."""
    active = world.robot.active_command
    return (active is not None and active.command.is_arm_command
            and active.chamber_id == chamber_id)


def _check_chamber(world: WorldState, chamber_id: int) -> None:
    if not 0 <= chamber_id < len(world.chambers):
        raise InvalidTargetError(
            f"Chamber {chamber_id} out of range 0..{len(world.chambers) - 1}"
        )


def chamber_glass_state(world: WorldState, chamber_id: int) -> SensorReading:
    """
    Read the glass state detection sensor of a chamber.

    Raises:
        InvalidTargetError: If the chamber id is out of range
    """
    _check_chamber(world, chamber_id)
    occupant = world.chambers[chamber_id].occupant
    if occupant is None:
        return SensorReading.EMPTY
    return SensorReading(world.glasses[occupant].state.value)


def rotation_ticks(world: WorldState, from_angle: float, chamber_id: int) -> int:
    """Ticks a RotateTo needs from a heading to a chamber (at least one)."""
    delta = abs(_signed_delta(from_angle, world.chambers[chamber_id].angle))
    if delta <= _ANGLE_EPS:
        return 1
    return max(1, int(math.ceil(round(delta / world.params.rotation_step, 9))))


def command_duration(world: WorldState, command: Command) -> int:
    """Ticks the command would take if issued now."""
    if command.kind is CommandKind.ROTATE_TO:
        return rotation_ticks(world, world.robot.theta, command.target)
    if command.is_arm_command:
        return world.params.handling_ticks
    return 1


def issue_command(world: WorldState, command: Command) -> WorldState:
    """
    Start a command on the idle robot.

    Args:
        world: World state; left untouched when the command is rejected
        command: Command to start

    Returns:
        The world with the command scheduled

    Raises:
        BusyError: If a command is already in progress
        InvalidTargetError: If the chamber or arm id is out of range
    """
    if world.robot.active_command is not None:
        raise BusyError(
            f"Robot busy with {world.robot.active_command.command.label}, "
            f"cannot start {command.label}"
        )
    if command.kind is CommandKind.ROTATE_TO:
        _check_chamber(world, command.target)
    elif command.is_arm_command:
        if not 0 <= command.target < len(world.robot.arms):
            raise InvalidTargetError(
                f"Arm {command.target} out of range 0..{len(world.robot.arms) - 1}"
            )

    robot = world.robot
    duration = command_duration(world, command)
    progress = CommandInProgress(command=command, start_tick=world.tick, duration=duration)

    if command.kind is CommandKind.ROTATE_TO:
        target_theta = world.chambers[command.target].angle
        delta = _signed_delta(robot.theta, target_theta)
        progress.chamber_id = command.target
        progress.start_theta = robot.theta
        progress.target_theta = target_theta
        progress.direction = 0.0 if abs(delta) <= _ANGLE_EPS else math.copysign(1.0, delta)
        progress.step = world.params.rotation_step
    elif command.is_arm_command:
        progress.chamber_id = aligned_chamber(world)
        geometry = world.params.geometry
        progress.contact_tick = geometry.extend_ticks + geometry.lift_ticks
    else:
        progress.chamber_id = facing_chamber(world)

    robot.active_command = progress
    world.event_log.append(Event(
        tick=world.tick, kind=EventKind.COMMAND_STARTED,
        chamber_id=progress.chamber_id, detail=command.label,
    ))
    logger.debug(f"tick {world.tick}: started {command.label} for {duration} ticks")
    return world


def command_is_legal(world: WorldState, command: Command) -> bool:
    """
    Whether a command would do useful work in the current state.

    Loads from empty or processing chambers, loads onto an occupied arm,
    unloads with an empty arm and arm work while not aligned with a chamber
    are not legal. Calling ``issue_command`` directly still runs them, and the
    failure rules apply.
    """
    if command.kind is CommandKind.WAIT:
        return True
    if command.kind is CommandKind.ROTATE_TO:
        return 0 <= command.target < len(world.chambers)
    if not 0 <= command.target < len(world.robot.arms):
        return False
    chamber_id = aligned_chamber(world)
    if chamber_id is None:
        return False
    arm = world.robot.arms[command.target]
    occupant = world.chambers[chamber_id].occupant
    if command.kind is CommandKind.ARM_LOAD:
        if occupant is None or arm.held_glass is not None:
            return False
        return world.glasses[occupant].state is not GlassState.PROCESSING
    return arm.held_glass is not None


def legal_commands(world: WorldState) -> List[Command]:
    """Every legal command in a fixed order."""
    candidates = [Command.rotate_to(c.id) for c in world.chambers]
    for arm in world.robot.arms:
        candidates.append(Command.arm_load(arm.id))
        candidates.append(Command.arm_unload(arm.id))
    candidates.append(Command.wait())
    return [c for c in candidates if command_is_legal(world, c)]


def sample_legal_command(world: WorldState) -> Command:
    """Draw a legal command uniformly with the world's generator."""
    commands = legal_commands(world)
    return commands[int(world.rng.integers(len(commands)))]


def _terminate(world: WorldState, glass: Glass, state: GlassState,
               kind: EventKind, detail: str = "") -> Event:
    chamber_id = glass.chamber_id
    if glass.chamber_id is not None:
        world.chambers[glass.chamber_id].occupant = None
        world.chambers[glass.chamber_id].state_since = world.tick
    if glass.arm_id is not None:
        arm = world.robot.arms[glass.arm_id]
        arm.held_glass = None
        arm.guide_pin_engaged = False
    glass.chamber_id = None
    glass.arm_id = None
    glass.state = state
    return Event(tick=world.tick, kind=kind, glass_id=glass.id,
                 chamber_id=chamber_id, detail=detail)


def apply_failure_rules(world: WorldState) -> Tuple[WorldState, List[Event]]:
    """
    Apply the drop and break rules to the motion of the current tick.

    Rotation faster than the slip limit drops every carried glass. An arm
    putting a glass into an occupied chamber breaks the carried glass; a
    loaded arm reaching into an occupied chamber breaks the resident glass.
    """
    events: List[Event] = []
    motion = world.robot.motion
    limit = world.params.omega_max_per_tick * (1.0 + _SPEED_RTOL)

    if motion.angular_speed > limit:
        for arm in world.robot.arms:
            if arm.held_glass is not None:
                glass = world.glasses[arm.held_glass]
                events.append(_terminate(world, glass, GlassState.DROPPED,
                                         EventKind.GLASS_DROPPED, "overspeed"))
                world.counters.dropped += 1
                logger.debug(f"tick {world.tick}: glass {glass.id} dropped")

    if motion.contact is not None:
        kind, arm_id, chamber_id = motion.contact
        arm = world.robot.arms[arm_id]
        occupant = world.chambers[chamber_id].occupant
        if arm.held_glass is not None and occupant is not None:
            if kind is CommandKind.ARM_UNLOAD:
                victim = world.glasses[arm.held_glass]
                detail = "put into occupied chamber"
            else:
                victim = world.glasses[occupant]
                detail = "loaded arm hit resident glass"
            event = _terminate(world, victim, GlassState.BROKEN, EventKind.GLASS_BROKEN, detail)
            events.append(replace(event, chamber_id=chamber_id))
            world.counters.broken += 1
            logger.debug(f"tick {world.tick}: glass {victim.id} broken in chamber {chamber_id}")

    return world, events


def _spawn(world: WorldState, events: List[Event]) -> None:
    loader = world.loader
    if loader.spawn_cooldown > 0:
        loader.spawn_cooldown -= 1
    if loader.spawn_cooldown == 0 and loader.occupant is None and not is_busy(world, loader.id):
        glass = Glass(id=world.next_glass_id, state=GlassState.RAW,
                      spawn_tick=world.tick, chamber_id=loader.id)
        world.next_glass_id += 1
        world.glasses[glass.id] = glass
        loader.occupant = glass.id
        loader.state_since = world.tick
        loader.spawn_cooldown = world.params.interval_ticks
        world.counters.spawned += 1
        events.append(Event(tick=world.tick, kind=EventKind.GLASS_SPAWNED,
                            glass_id=glass.id, chamber_id=loader.id))


def _advance_processes(world: WorldState, events: List[Event]) -> None:
    for chamber in world.process_chambers:
        if chamber.occupant is None:
            continue
        glass = world.glasses[chamber.occupant]
        if glass.state is not GlassState.PROCESSING:
            continue
        glass.process_ticks_remaining -= 1
        if glass.process_ticks_remaining <= 0:
            glass.process_ticks_remaining = 0
            glass.state = GlassState.PROCESSED
            chamber.state_since = world.tick
            events.append(Event(tick=world.tick, kind=EventKind.PROCESS_COMPLETED,
                                glass_id=glass.id, chamber_id=chamber.id))


def _arm_pose(world: WorldState, progress: CommandInProgress, arm: Arm) -> None:
    geometry = world.params.geometry
    e, lift = geometry.extend_ticks, geometry.lift_ticks
    t = progress.elapsed
    loading = progress.command.kind is CommandKind.ARM_LOAD
    low, high = (0.0, geometry.lift_height) if loading else (geometry.lift_height, 0.0)
    if t <= e:
        arm.extension = geometry.arm_reach * t / e
        arm.height = low
    elif t <= e + lift:
        arm.extension = geometry.arm_reach
        arm.height = low + (high - low) * (t - e) / lift
    else:
        arm.extension = geometry.arm_reach * max(0, progress.duration - t) / e
        arm.height = high


def _transfer(world: WorldState, progress: CommandInProgress,
              events: List[Event]) -> Optional[int]:
    """Move a glass between arm and chamber at the end of an arm command."""
    if progress.chamber_id is None:
        return None
    chamber = world.chambers[progress.chamber_id]
    arm = world.robot.arms[progress.command.target]

    if progress.command.kind is CommandKind.ARM_LOAD:
        if arm.held_glass is not None or chamber.occupant is None:
            return None
        glass = world.glasses[chamber.occupant]
        if glass.state is GlassState.PROCESSING:
            return None
        chamber.occupant = None
        chamber.state_since = world.tick
        glass.chamber_id = None
        glass.arm_id = arm.id
        arm.held_glass = glass.id
        arm.guide_pin_engaged = True
        return glass.id

    if arm.held_glass is None or chamber.occupant is not None:
        return None
    glass = world.glasses[arm.held_glass]
    arm.held_glass = None
    arm.guide_pin_engaged = False
    glass.arm_id = None
    glass.chamber_id = chamber.id
    chamber.occupant = glass.id
    chamber.state_since = world.tick
    if chamber.kind is ChamberKind.PROCESS and glass.state is GlassState.RAW:
        glass.state = GlassState.PROCESSING
        glass.process_ticks_remaining = world.params.process_ticks
        events.append(Event(tick=world.tick, kind=EventKind.PROCESS_STARTED,
                            glass_id=glass.id, chamber_id=chamber.id))
    return glass.id


def _advance_command(world: WorldState, events: List[Event]) -> None:
    robot = world.robot
    progress = robot.active_command
    if progress is None:
        return
    progress.elapsed += 1
    kind = progress.command.kind
    moved_glass = None

    if kind is CommandKind.ROTATE_TO:
        if progress.direction != 0.0:
            travelled = min(progress.step * progress.elapsed,
                            abs(_signed_delta(progress.start_theta, progress.target_theta)))
            robot.theta = _normalize(progress.start_theta + progress.direction * travelled)
            robot.motion.angular_speed = progress.step
        if progress.elapsed >= progress.duration:
            robot.theta = progress.target_theta
    elif progress.command.is_arm_command:
        arm = robot.arms[progress.command.target]
        _arm_pose(world, progress, arm)
        if progress.elapsed == progress.contact_tick and progress.chamber_id is not None:
            robot.motion.contact = (kind, arm.id, progress.chamber_id)
        if progress.elapsed >= progress.duration:
            moved_glass = _transfer(world, progress, events)
            arm.extension = 0.0
            arm.height = world.params.geometry.lift_height if arm.held_glass is not None else 0.0

    if progress.elapsed >= progress.duration:
        robot.active_command = None
        events.append(Event(tick=world.tick, kind=EventKind.COMMAND_FINISHED,
                            glass_id=moved_glass, chamber_id=progress.chamber_id,
                            detail=progress.command.label))


def _consume_unloader(world: WorldState, events: List[Event]) -> None:
    unloader = world.unloader
    if unloader.occupant is None or is_busy(world, unloader.id):
        return
    glass = world.glasses[unloader.occupant]
    processed = (glass.state is GlassState.PROCESSED
                 or world.params.num_process_chambers == 0)
    detail = "processed" if processed else "incomplete"
    events.append(_terminate(world, glass, GlassState.UNLOADED,
                             EventKind.GLASS_UNLOADED, detail))
    unloader.unload_count += 1
    world.counters.unloaded += 1
    if processed:
        world.counters.unloaded_processed += 1
    else:
        world.counters.unloaded_incomplete += 1


def tick(world: WorldState) -> Tuple[WorldState, List[Event]]:
    """
    Advance the world by one tick.

    Order within a tick: loader spawn, process timers, command progress,
    failure rules, unloader consumption.

    Returns:
        (world, events emitted during this tick)
    """
    world.tick += 1
    world.robot.motion = Motion()
    events: List[Event] = []

    _spawn(world, events)
    _advance_processes(world, events)
    _advance_command(world, events)
    _, failures = apply_failure_rules(world)
    events.extend(failures)
    _consume_unloader(world, events)

    world.event_log.extend(events)
    return world, events


def run_until_idle(world: WorldState, max_ticks: Optional[int] = None) -> List[Event]:
    """Tick until the active command finishes; returns the events seen."""
    events: List[Event] = []
    count = 0
    while world.robot.active_command is not None:
        if max_ticks is not None and count >= max_ticks:
            break
        _, emitted = tick(world)
        events.extend(emitted)
        count += 1
    return events


def conservation_holds(world: WorldState) -> bool:
    """
    spawned == in chambers + on arms + unloaded + dropped + broken, and every
    glass location agrees with the chamber and arm it claims to be in.
    """
    c = world.counters
    in_chambers = sum(1 for ch in world.chambers if ch.occupant is not None)
    on_arms = sum(1 for arm in world.robot.arms if arm.held_glass is not None)
    if c.spawned != in_chambers + on_arms + c.unloaded + c.dropped + c.broken:
        return False
    for glass in world.glasses.values():
        location = glass.location
        if location is None:
            if not glass.state.is_terminal:
                return False
        elif location[0] == "chamber":
            if world.chambers[location[1]].occupant != glass.id:
                return False
        elif world.robot.arms[location[1]].held_glass != glass.id:
            return False
    return True
