"""
FAB unit-process simulator: chambers, a rotating two-arm robot and glass flow.
"""

from .model import (
    Arm, BusyError, Chamber, ChamberKind, Command, CommandKind, Counters, Event,
    EventKind, Glass, GlassState, InvalidTargetError, Robot, SensorReading,
    WorldParams, WorldState,
)
from .fab_world import (
    aligned_chamber, angular_distance, apply_failure_rules, build_world,
    build_world_from_config, chamber_glass_state, command_duration, command_is_legal,
    conservation_holds, facing_chamber, is_busy, issue_command, legal_commands,
    max_safe_rotation_speed, rotation_ticks, run_until_idle, safe_transfer_speed,
    sample_legal_command, tick,
)

__all__ = [
    'Arm', 'BusyError', 'Chamber', 'ChamberKind', 'Command', 'CommandKind', 'Counters',
    'Event', 'EventKind', 'Glass', 'GlassState', 'InvalidTargetError', 'Robot',
    'SensorReading', 'WorldParams', 'WorldState',
    'aligned_chamber', 'angular_distance', 'apply_failure_rules', 'build_world',
    'build_world_from_config', 'chamber_glass_state', 'command_duration',
    'command_is_legal', 'conservation_holds', 'facing_chamber', 'is_busy',
    'issue_command', 'legal_commands', 'max_safe_rotation_speed', 'rotation_ticks',
    'run_until_idle', 'safe_transfer_speed', 'sample_legal_command', 'tick',
]
