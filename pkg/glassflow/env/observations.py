"""
Observation encodings of the world: positional (basic) and sensor-based (reduced).
"""

import math
from typing import Optional

import numpy as np

from ..world.fab_world import chamber_glass_state, facing_chamber
from ..world.model import GlassState, SensorReading, WorldState

SENSOR_ORDER = (SensorReading.EMPTY, SensorReading.RAW, SensorReading.PROCESSING,
                SensorReading.PROCESSED)
ARM_ORDER = ("none", "raw", "processed")


def basic_length(num_chambers: int, num_arms: int, slots: int) -> int:
    return 2 * num_chambers + 2 + 3 * num_arms + 3 * slots + num_chambers + num_arms


def reduced_length(num_chambers: int, num_arms: int) -> int:
    """
    4C + (C + 1) + 3A. The facing group carries a trailing "between" slot, so one
    process chamber with two arms (C = 3, A = 2) gives 22 entries; a facing group
    without that slot would give 21.
    """
    return 4 * num_chambers + (num_chambers + 1) + 3 * num_arms


def _chamber_xy(world: WorldState, chamber_id: int):
    angle = world.chambers[chamber_id].angle
    return math.cos(angle), math.sin(angle)


def _glass_xy(world: WorldState, glass_id: int):
    glass = world.glasses[glass_id]
    if glass.chamber_id is not None:
        return _chamber_xy(world, glass.chamber_id)
    arm = world.robot.arms[glass.arm_id]
    reach = arm.extension / world.params.geometry.layout_radius
    theta = world.robot.theta
    return reach * math.cos(theta), reach * math.sin(theta)


def observe_basic(world: WorldState, slots: Optional[int] = None) -> np.ndarray:
    """
    Positional encoding, scaled to [-1, 1] by the layout radius.

    Layout: chamber (x, z) pairs; robot heading (sin, cos); per arm
    (extension, height, held); per glass slot (presence, x, z); robot to
    chamber distances; per arm distance to the nearest other glass. A glass
    occupies slot ``id % slots``.

    Args:
        world: World state
        slots: Glass slot count; defaults to chambers + arms

    Returns:
        float64 vector of fixed length for a fixed configuration
    """
    num_chambers = len(world.chambers)
    arms = world.robot.arms
    geometry = world.params.geometry
    if slots is None:
        slots = num_chambers + len(arms)
    obs = np.zeros(basic_length(num_chambers, len(arms), slots), dtype=np.float64)
    i = 0

    for chamber in world.chambers:
        obs[i:i + 2] = _chamber_xy(world, chamber.id)
        i += 2

    theta = world.robot.theta
    obs[i] = math.sin(theta)
    obs[i + 1] = math.cos(theta)
    i += 2

    for arm in arms:
        obs[i] = arm.extension / geometry.arm_reach
        obs[i + 1] = arm.height / geometry.lift_height
        obs[i + 2] = 1.0 if arm.held_glass is not None else 0.0
        i += 3

    slot_base = i
    for glass in world.glasses_in_play():
        slot = slot_base + 3 * (glass.id % slots)
        x, z = _glass_xy(world, glass.id)
        obs[slot:slot + 3] = (1.0, x, z)
    i += 3 * slots

    tip = (math.cos(theta), math.sin(theta))
    for chamber in world.chambers:
        cx, cz = _chamber_xy(world, chamber.id)
        obs[i] = math.hypot(tip[0] - cx, tip[1] - cz) / 2.0
        i += 1

    for arm in arms:
        reach = arm.extension / geometry.layout_radius
        ax, az = reach * math.cos(theta), reach * math.sin(theta)
        nearest = 1.0
        for glass in world.glasses_in_play():
            if glass.id == arm.held_glass:
                continue
            gx, gz = _glass_xy(world, glass.id)
            nearest = min(nearest, math.hypot(ax - gx, az - gz) / 2.0)
        obs[i] = nearest
        i += 1

    return obs


def observe_reduced(world: WorldState) -> np.ndarray:
    """
    Sensor encoding: per chamber one-hot {Empty, Raw, Processing, Processed},
    facing-chamber one-hot with a trailing "between" slot, per arm one-hot
    held state {None, Raw, Processed}.
    """
    num_chambers = len(world.chambers)
    arms = world.robot.arms
    obs = np.zeros(reduced_length(num_chambers, len(arms)), dtype=np.float64)

    for chamber in world.chambers:
        reading = chamber_glass_state(world, chamber.id)
        obs[4 * chamber.id + SENSOR_ORDER.index(reading)] = 1.0

    base = 4 * num_chambers
    facing = facing_chamber(world)
    obs[base + (num_chambers if facing is None else facing)] = 1.0

    base += num_chambers + 1
    for arm in arms:
        if arm.held_glass is None:
            state = "none"
        elif world.glasses[arm.held_glass].state is GlassState.PROCESSED:
            state = "processed"
        else:
            state = "raw"
        obs[base + 3 * arm.id + ARM_ORDER.index(state)] = 1.0

    return obs


def one_hot_groups(num_chambers: int, num_arms: int):
    """Index slices of every one-hot group of the reduced encoding."""
    groups = [slice(4 * c, 4 * c + 4) for c in range(num_chambers)]
    base = 4 * num_chambers
    groups.append(slice(base, base + num_chambers + 1))
    base += num_chambers + 1
    groups.extend(slice(base + 3 * a, base + 3 * a + 3) for a in range(num_arms))
    return groups
