"""
Tests for the tick-driven FAB world.
"""

import math

import pytest

from glassflow.config import ConfigurationError, PhysicalParams, ProcessParams
from glassflow.world import (
    BusyError, ChamberKind, Command, EventKind, GlassState, InvalidTargetError,
    SensorReading, aligned_chamber, build_world, chamber_glass_state, command_is_legal,
    conservation_holds, facing_chamber, issue_command, legal_commands,
    max_safe_rotation_speed, rotation_ticks, run_until_idle, safe_transfer_speed,
    sample_legal_command, tick,
)


def make_world(chambers=0, arms=1, seed=0, transfer_speed=0.01):
    return build_world(ProcessParams(num_process_chambers=chambers, num_arms=arms),
                       PhysicalParams(transfer_speed=transfer_speed), seed)


def run(world, command):
    issue_command(world, command)
    return run_until_idle(world)


def kinds(events):
    return [e.kind for e in events]


def tick_until(world, predicate, limit=1000):
    for _ in range(limit):
        if predicate(world):
            return
        tick(world)
    raise AssertionError("condition not reached")


class TestBuildWorld:
    """Tests for build_world()."""

    def test_layout(self):
        """Test loader first, unloader last, process chambers between."""
        world = make_world(chambers=3, arms=2)
        kinds_ = [c.kind for c in world.chambers]
        assert kinds_ == [ChamberKind.LOADER] + [ChamberKind.PROCESS] * 3 + [ChamberKind.UNLOADER]
        assert len(world.robot.arms) == 2
        assert world.chambers[1].angle == pytest.approx(2 * math.pi / 5)

    def test_fresh_world_is_empty(self):
        """Test tick 0 with no glass and the robot facing the loader."""
        world = make_world()
        assert world.tick == 0
        assert world.glasses == {}
        assert aligned_chamber(world) == 0
        assert chamber_glass_state(world, 0) is SensorReading.EMPTY

    def test_invalid_parameters_raise(self):
        """Test that invalid process parameters are rejected with the field."""
        with pytest.raises(ConfigurationError) as exc:
            build_world(ProcessParams(num_arms=3), PhysicalParams(), 0)
        assert exc.value.field == "process.num_arms"

    def test_derived_constants(self):
        """Test tick constants derived from the default parameters."""
        world = make_world()
        assert world.params.process_ticks == 300
        assert world.params.interval_ticks == 200
        assert world.params.handling_ticks == 10
        assert world.params.rotation_step == pytest.approx(world.params.omega_max_per_tick)


class TestSafeSpeed:
    """Tests for the slip limit."""

    def test_max_safe_rotation_speed(self):
        """Test sqrt(mu_s * g / r)."""
        assert max_safe_rotation_speed(PhysicalParams()) == pytest.approx(math.sqrt(0.6 * 9.81))

    def test_safe_transfer_speed_is_calibration_point(self):
        """Test that the default physics is safe up to transfer speed 0.01."""
        assert safe_transfer_speed(PhysicalParams()) == pytest.approx(0.01)

    def test_more_friction_allows_faster_transfer(self):
        """Test that the safe speed grows with static friction."""
        assert safe_transfer_speed(PhysicalParams(static_friction=1.2, dynamic_friction=0.6)) \
            > safe_transfer_speed(PhysicalParams())


class TestSpawning:
    """Tests for loader spawning."""

    def test_first_glass_spawns_on_first_tick(self):
        """Test that a glass appears in the loader at tick 1."""
        world = make_world()
        _, events = tick(world)
        assert kinds(events) == [EventKind.GLASS_SPAWNED]
        assert events[0].tick == 1
        assert world.loader.occupant == 0
        assert chamber_glass_state(world, 0) is SensorReading.RAW

    def test_occupied_loader_does_not_spawn(self):
        """Test that no second glass appears while the loader is full."""
        world = make_world()
        for _ in range(450):
            tick(world)
        assert world.counters.spawned == 1

    def test_next_spawn_after_interval(self):
        """Test the input interval once the loader is emptied."""
        world = make_world()
        tick(world)
        run(world, Command.arm_load(0))
        tick_until(world, lambda w: w.loader.occupant is not None)
        spawns = [e for e in world.event_log if e.kind is EventKind.GLASS_SPAWNED]
        assert [e.tick for e in spawns] == [1, 201]


class TestCommands:
    """Tests for command issue, legality and timing."""

    def test_busy_robot_rejects_second_command(self):
        """Test the one-command interlock."""
        world = make_world()
        issue_command(world, Command.rotate_to(1))
        with pytest.raises(BusyError):
            issue_command(world, Command.wait())

    def test_invalid_targets(self):
        """Test out-of-range chamber and arm ids."""
        world = make_world()
        with pytest.raises(InvalidTargetError):
            issue_command(world, Command.rotate_to(5))
        with pytest.raises(InvalidTargetError):
            issue_command(world, Command.arm_load(3))
        assert world.robot.active_command is None

    def test_legality_of_empty_world(self):
        """Test that only rotations and wait are legal with nothing to move."""
        world = make_world()
        assert legal_commands(world) == [Command.rotate_to(0), Command.rotate_to(1),
                                         Command.wait()]
        assert not command_is_legal(world, Command.arm_unload(0))

    def test_load_from_processing_chamber_is_illegal(self):
        """Test that a processing glass cannot be taken out."""
        world = make_world(chambers=1)
        tick(world)
        run(world, Command.arm_load(0))
        run(world, Command.rotate_to(1))
        run(world, Command.arm_unload(0))
        assert chamber_glass_state(world, 1) is SensorReading.PROCESSING
        assert not command_is_legal(world, Command.arm_load(0))

    def test_load_onto_occupied_arm_is_illegal(self):
        """Test that a full arm facing a waiting glass may not load again."""
        world = make_world()
        tick(world)
        run(world, Command.arm_load(0))
        tick_until(world, lambda w: w.loader.occupant is not None)
        assert not command_is_legal(world, Command.arm_load(0))
        assert Command.arm_load(0) not in legal_commands(world)
        assert command_is_legal(world, Command.arm_unload(0))

    def test_wait_takes_one_tick(self):
        """Test the duration of Wait."""
        world = make_world()
        events = run(world, Command.wait())
        assert world.tick == 1
        assert EventKind.COMMAND_FINISHED in kinds(events)

    def test_arm_command_duration(self):
        """Test that get and put take extend + lift + retract ticks."""
        world = make_world()
        tick(world)
        run(world, Command.arm_load(0))
        assert world.tick == 11
        assert world.robot.arms[0].held_glass == 0

    def test_half_turn_duration(self):
        """Test rotation ticks for a half turn at the calibration speed."""
        world = make_world()
        assert rotation_ticks(world, 0.0, 1) == math.ceil(math.pi / world.params.rotation_step)
        run(world, Command.rotate_to(1))
        assert world.robot.theta == pytest.approx(math.pi)
        assert aligned_chamber(world) == 1

    def test_rotation_in_place_takes_one_tick(self):
        """Test rotating to the chamber already faced."""
        world = make_world()
        run(world, Command.rotate_to(0))
        assert world.tick == 1

    def test_between_chambers_faces_nothing(self):
        """Test the between-chambers heading."""
        world = make_world()
        world.robot.theta = math.pi / 2
        assert facing_chamber(world) is None
        assert not command_is_legal(world, Command.arm_unload(0))


class TestGlassFlow:
    """Tests for transfers, processing and unloading."""

    def test_basic_delivery_counts_as_processed(self):
        """Test loader to unloader without process chambers."""
        world = make_world()
        tick(world)
        run(world, Command.arm_load(0))
        run(world, Command.rotate_to(1))
        events = run(world, Command.arm_unload(0))
        unloaded = [e for e in events if e.kind is EventKind.GLASS_UNLOADED]
        assert len(unloaded) == 1 and unloaded[0].processed
        assert world.counters.unloaded_processed == 1
        assert world.glasses[0].state is GlassState.UNLOADED
        assert world.counters.dropped == 0

    def test_process_runs_for_process_time(self):
        """Test ProcessStarted to ProcessCompleted spacing."""
        world = make_world(chambers=1)
        tick(world)
        run(world, Command.arm_load(0))
        run(world, Command.rotate_to(1))
        run(world, Command.arm_unload(0))
        tick_until(world, lambda w: w.glasses[0].state is GlassState.PROCESSED)
        started = [e for e in world.event_log if e.kind is EventKind.PROCESS_STARTED]
        completed = [e for e in world.event_log if e.kind is EventKind.PROCESS_COMPLETED]
        assert completed[0].tick - started[0].tick == 300

    def test_raw_glass_at_unloader_is_incomplete(self):
        """Test that skipping the process stage is an incomplete arrival."""
        world = make_world(chambers=1)
        tick(world)
        run(world, Command.arm_load(0))
        run(world, Command.rotate_to(2))
        events = run(world, Command.arm_unload(0))
        unloaded = [e for e in events if e.kind is EventKind.GLASS_UNLOADED]
        assert unloaded[0].detail == "incomplete"
        assert world.counters.unloaded_incomplete == 1
        assert world.counters.failures == 1


class TestFailureRules:
    """Tests for drops and breaks."""

    def test_overspeed_rotation_drops_glass(self):
        """Test that rotating a held glass above the slip limit drops it."""
        world = make_world(transfer_speed=0.02)
        tick(world)
        run(world, Command.arm_load(0))
        events = run(world, Command.rotate_to(1))
        dropped = [e for e in events if e.kind is EventKind.GLASS_DROPPED]
        assert len(dropped) == 1
        assert world.glasses[0].state is GlassState.DROPPED
        assert world.robot.arms[0].held_glass is None
        assert world.counters.dropped == 1

    def test_calibration_speed_keeps_glass(self):
        """Test that rotation exactly at the limit is loss-free."""
        world = make_world(transfer_speed=0.01)
        tick(world)
        run(world, Command.arm_load(0))
        events = run(world, Command.rotate_to(1))
        assert EventKind.GLASS_DROPPED not in kinds(events)

    def test_overspeed_without_glass_is_harmless(self):
        """Test that an empty robot may rotate at any speed."""
        world = make_world(transfer_speed=0.05)
        events = run(world, Command.rotate_to(1))
        assert EventKind.GLASS_DROPPED not in kinds(events)

    def test_put_into_occupied_chamber_breaks_carried_glass(self):
        """Test unloading onto a resident glass."""
        world = make_world(arms=2)
        tick(world)
        run(world, Command.arm_load(0))
        tick_until(world, lambda w: w.loader.occupant is not None)
        events = run(world, Command.arm_unload(0))
        broken = [e for e in events if e.kind is EventKind.GLASS_BROKEN]
        assert len(broken) == 1
        assert broken[0].glass_id == 0
        assert broken[0].chamber_id == 0
        assert world.loader.occupant == 1

    def test_loaded_arm_reaching_in_breaks_resident_glass(self):
        """Test a get with an occupied arm into an occupied chamber."""
        world = make_world()
        tick(world)
        run(world, Command.arm_load(0))
        tick_until(world, lambda w: w.loader.occupant is not None)
        events = run(world, Command.arm_load(0))
        broken = [e for e in events if e.kind is EventKind.GLASS_BROKEN]
        assert [e.glass_id for e in broken] == [1]
        assert world.robot.arms[0].held_glass == 0
        assert world.loader.occupant is None


class TestInvariants:
    """Property checks over random command streams."""

    @pytest.mark.parametrize("chambers,arms,speed", [(0, 1, 0.01), (3, 2, 0.01), (1, 2, 0.02)])
    def test_conservation_and_monotone_states(self, chambers, arms, speed):
        """Test glass conservation and forward-only lifecycles."""
        world = make_world(chambers=chambers, arms=arms, seed=3, transfer_speed=speed)
        ranks = {}
        for _ in range(400):
            run(world, sample_legal_command(world))
            assert conservation_holds(world)
            for glass in world.glasses.values():
                assert glass.state.rank >= ranks.get(glass.id, 0)
                ranks[glass.id] = glass.state.rank

    def test_glass_location_follows_the_glass(self):
        """Test the location of a glass from loader to arm to unloader."""
        world = make_world()
        tick(world)
        assert world.glasses[0].location == ("chamber", 0)
        run(world, Command.arm_load(0))
        assert world.glasses[0].location == ("arm", 0)
        run(world, Command.rotate_to(1))
        run(world, Command.arm_unload(0))
        assert world.glasses[0].location is None
        assert world.glasses[0].state is GlassState.UNLOADED

    def test_conservation_detects_stale_location(self):
        """Test that a glass claiming a chamber it is not in breaks conservation."""
        world = make_world()
        tick(world)
        run(world, Command.arm_load(0))
        assert conservation_holds(world)
        world.glasses[0].chamber_id = 0
        world.glasses[0].arm_id = None
        assert not conservation_holds(world)

    def test_same_seed_same_event_log(self):
        """Test determinism of random command streams."""
        logs = []
        for _ in range(2):
            world = make_world(chambers=3, arms=2, seed=11)
            for _ in range(200):
                run(world, sample_legal_command(world))
            logs.append(list(world.event_log))
        assert logs[0] == logs[1]

    def test_event_ticks_non_decreasing(self):
        """Test the ordering of the event log."""
        world = make_world(chambers=2, arms=2, seed=5)
        for _ in range(200):
            run(world, sample_legal_command(world))
        ticks = [e.tick for e in world.event_log]
        assert ticks == sorted(ticks)
