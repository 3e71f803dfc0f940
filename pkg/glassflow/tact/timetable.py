"""
Measured tact, timetables and Gantt export built from world event logs.
"""

import csv
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple, Union

from ..world.model import CommandKind, Event, EventKind
from .equations import DEFAULT_TICK_S, TactTerms, to_seconds

logger = logging.getLogger(__name__)

ROBOT = "robot"
GANTT_COLUMNS = ["resource", "activity", "start_s", "end_s", "glass_id", "detail"]


class NotCompletedError(LookupError):
    """The glass has no spawn or no unload event in the log."""


class TimetableError(ValueError):
    """The event log is out of order or inconsistent."""


class Activity(Enum):
    MOVING = "Moving"
    IDLE = "Idle"
    PROCESS = "Process"
    LOAD = "Load"
    UNLOAD = "Unload"


_COMMAND_ACTIVITY = {
    CommandKind.ROTATE_TO: Activity.MOVING,
    CommandKind.ARM_LOAD: Activity.LOAD,
    CommandKind.ARM_UNLOAD: Activity.UNLOAD,
    CommandKind.WAIT: Activity.IDLE,
}


def chamber_resource(chamber_id: int) -> str:
    return f"chamber{chamber_id}"


def _resource_key(resource: str) -> Tuple[int, int]:
    if resource == ROBOT:
        return (0, 0)
    return (1, int(resource[len("chamber"):]))


@dataclass(frozen=True)
class TimetableRow:
    resource: str
    activity: Activity
    start_tick: int
    end_tick: int
    glass_id: Optional[int] = None
    detail: str = ""

    @property
    def duration(self) -> int:
        return self.end_tick - self.start_tick


@dataclass
class Timetable:
    rows: List[TimetableRow]
    tick_duration_s: float = DEFAULT_TICK_S

    def for_resource(self, resource: str) -> List[TimetableRow]:
        return [r for r in self.rows if r.resource == resource]

    def resources(self) -> List[str]:
        return sorted({r.resource for r in self.rows}, key=_resource_key)

    def total(self, resource: str, activity: Activity) -> int:
        return sum(r.duration for r in self.for_resource(resource) if r.activity is activity)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class Exchange:
    """A processed glass taken out and another placed in, at one rotation stop."""
    tick: int
    chamber_id: int
    picked_glass: int
    placed_glass: int
    picked_arm: int
    placed_arm: int


def measured_tact(event_log: Sequence[Event], glass_id: int,
                  tick_duration_s: float = DEFAULT_TICK_S) -> float:
    """
    Time from spawn to unload of one glass.

    Args:
        event_log: World event log
        glass_id: Glass to measure
        tick_duration_s: Seconds per tick

    Returns:
        (unload tick - spawn tick) * tick_duration_s

    Raises:
        NotCompletedError: If the glass was never spawned or never unloaded
    """
    spawn, unload = _spawn_and_unload(event_log, glass_id)
    return to_seconds(unload - spawn, tick_duration_s)


def _spawn_and_unload(event_log: Sequence[Event], glass_id: int) -> Tuple[int, int]:
    spawn = unload = None
    for event in event_log:
        if event.glass_id != glass_id:
            continue
        if event.kind is EventKind.GLASS_SPAWNED:
            spawn = event.tick
        elif event.kind is EventKind.GLASS_UNLOADED:
            unload = event.tick
    if spawn is None:
        raise NotCompletedError(f"Glass {glass_id} has no spawn event")
    if unload is None:
        raise NotCompletedError(f"Glass {glass_id} was never unloaded")
    return spawn, unload


@dataclass
class _Transfer:
    kind: CommandKind
    arm_id: int
    chamber_id: Optional[int]
    start: int
    finish: int


def _command_spans(event_log: Sequence[Event]) -> List[Tuple[Event, Event]]:
    """Pair every CommandFinished with the CommandStarted before it."""
    spans = []
    pending: Optional[Event] = None
    last_tick = None
    for event in event_log:
        if last_tick is not None and event.tick < last_tick:
            raise TimetableError(
                f"Event at tick {event.tick} follows an event at tick {last_tick}"
            )
        last_tick = event.tick
        if event.kind is EventKind.COMMAND_STARTED:
            if pending is not None:
                raise TimetableError(
                    f"{event.detail} started at tick {event.tick} while "
                    f"{pending.detail} is still running"
                )
            pending = event
        elif event.kind is EventKind.COMMAND_FINISHED:
            if pending is None or pending.detail != event.detail:
                raise TimetableError(
                    f"{event.detail} finished at tick {event.tick} without a start"
                )
            spans.append((pending, event))
            pending = None
    return spans


def _overlap(rows: Iterable[TimetableRow], lo: int, hi: int) -> int:
    return sum(max(0, min(r.end_tick, hi) - max(r.start_tick, lo)) for r in rows)


def glass_tact_terms(event_log: Sequence[Event], glass_id: int,
                     tick_duration_s: float = DEFAULT_TICK_S,
                     timetable: Optional[Timetable] = None) -> TactTerms:
    """
    Reconstruct the tact terms of one unloaded glass from its timetable.

    Every term is read from timetable rows inside the windows bounded by the
    glass's own gets and puts: rotation legs are robot Moving rows while the
    glass is carried (the last leg folded into the final stage), process times
    are its Process rows, and waits are robot rows other than Moving while it
    is carried or queued at the loader plus chamber Idle rows while it sits
    processed. The unload event is never consulted, so the general tact of the
    result agrees with ``measured_tact`` only for a consistent log. Loading and
    unloading are instantaneous in the simulator (t_L = t_U = 0).

    Args:
        event_log: World event log
        glass_id: Glass to reconstruct
        tick_duration_s: Seconds per tick
        timetable: Timetable of the same log, built when omitted

    Returns:
        TactTerms with one entry per visited process chamber

    Raises:
        NotCompletedError: If the glass was not unloaded
        TimetableError: If the glass never visited a process chamber
    """
    spawn, _ = _spawn_and_unload(event_log, glass_id)

    transfers: List[_Transfer] = []
    for started, finished in _command_spans(event_log):
        command = finished.command
        if command is not None and command.is_arm_command and finished.glass_id == glass_id:
            transfers.append(_Transfer(command.kind, command.target, finished.chamber_id,
                                       started.tick, finished.tick))

    gets = [t for t in transfers if t.kind is CommandKind.ARM_LOAD]
    puts = [t for t in transfers if t.kind is CommandKind.ARM_UNLOAD]
    if len(gets) != len(puts) or len(puts) < 2:
        raise TimetableError(
            f"Glass {glass_id} did not pass through a process chamber "
            f"({len(gets)} gets, {len(puts)} puts)"
        )
    k = len(puts) - 1

    if timetable is None:
        timetable = build_timetable(event_log, tick_duration_s)
    robot = timetable.for_resource(ROBOT)
    moving = [r for r in robot if r.activity is Activity.MOVING]
    not_moving = [r for r in robot if r.activity is not Activity.MOVING]

    carry_rot = [_overlap(moving, gets[i].finish, puts[i].start) for i in range(k + 1)]
    carry_wait = [_overlap(not_moving, gets[i].finish, puts[i].start) for i in range(k + 1)]

    proc: List[int] = []
    dwell: List[int] = []
    for i in range(k):
        chamber_id = puts[i].chamber_id
        rows: List[TimetableRow] = (
            [] if chamber_id is None else timetable.for_resource(chamber_resource(chamber_id)))
        lo, hi = puts[i].finish, gets[i + 1].start
        proc.append(_overlap((r for r in rows if r.activity is Activity.PROCESS
                              and r.glass_id == glass_id), lo, hi))
        dwell.append(_overlap((r for r in rows if r.activity is Activity.IDLE), lo, hi))

    t_get = gets[0].finish - gets[0].start
    t_put = puts[0].finish - puts[0].start

    t_r = carry_rot[:k]
    t_r[-1] += carry_rot[k]
    t_w = [carry_wait[i] + dwell[i] for i in range(k)]
    t_w[0] += _overlap(robot, spawn, gets[0].start)
    t_w[-1] += carry_wait[k]

    return TactTerms.from_ticks(0, 0, t_r, t_get, t_put, proc, t_w, tick_duration_s)


def build_timetable(event_log: Sequence[Event],
                    tick_duration_s: float = DEFAULT_TICK_S) -> Timetable:
    """
    Per-resource activity intervals from tick 0 to the last logged tick.

    Robot rows come from command events, with Idle rows wherever no command
    ran. Chamber rows are the Process intervals of every chamber that ever
    processed, with Idle rows filling the time before, between and after
    them. Rows of one resource never overlap and are sorted by resource,
    then start tick.

    Raises:
        TimetableError: If ticks decrease or commands are not paired
    """
    if not event_log:
        return Timetable(rows=[], tick_duration_s=tick_duration_s)

    last_tick = event_log[-1].tick
    rows: List[TimetableRow] = []
    robot_rows: List[TimetableRow] = []
    for started, finished in _command_spans(event_log):
        if finished.tick <= started.tick:
            continue
        command = finished.command
        assert command is not None
        robot_rows.append(TimetableRow(ROBOT, _COMMAND_ACTIVITY[command.kind], started.tick,
                                       finished.tick, finished.glass_id, command.label))
    rows.extend(robot_rows)
    rows.extend(_idle_gaps(ROBOT, robot_rows, last_tick))

    open_process: Dict[int, Tuple[int, Optional[int]]] = {}
    process_rows: Dict[int, List[TimetableRow]] = {}

    def close(chamber_id: int, end: int, detail: str = "") -> None:
        start, glass = open_process.pop(chamber_id)
        if end > start:
            process_rows.setdefault(chamber_id, []).append(TimetableRow(
                chamber_resource(chamber_id), Activity.PROCESS, start, end, glass, detail))

    for event in event_log:
        if event.kind is EventKind.PROCESS_STARTED and event.chamber_id is not None:
            if event.chamber_id in open_process:
                raise TimetableError(
                    f"Chamber {event.chamber_id} started a process at tick {event.tick} "
                    f"while another is running"
                )
            open_process[event.chamber_id] = (event.tick, event.glass_id)
        elif event.kind is EventKind.PROCESS_COMPLETED and event.chamber_id is not None:
            if event.chamber_id not in open_process:
                raise TimetableError(
                    f"Chamber {event.chamber_id} completed a process at tick {event.tick} "
                    f"that never started"
                )
            close(event.chamber_id, event.tick)
        elif event.kind is EventKind.GLASS_BROKEN and event.chamber_id in open_process:
            close(event.chamber_id, event.tick, "broken")
    for chamber_id in list(open_process):
        close(chamber_id, last_tick, "running")

    for chamber_id, chamber_rows in process_rows.items():
        rows.extend(chamber_rows)
        rows.extend(_idle_gaps(chamber_resource(chamber_id), chamber_rows, last_tick))

    rows.sort(key=lambda r: (_resource_key(r.resource), r.start_tick))
    return Timetable(rows=rows, tick_duration_s=tick_duration_s)


def _idle_gaps(resource: str, busy: Sequence[TimetableRow], last_tick: int) -> List[TimetableRow]:
    """Idle rows covering [0, last_tick] outside the sorted busy rows."""
    gaps = []
    cursor = 0
    for row in busy:
        if row.start_tick > cursor:
            gaps.append(TimetableRow(resource, Activity.IDLE, cursor, row.start_tick))
        cursor = max(cursor, row.end_tick)
    if last_tick > cursor:
        gaps.append(TimetableRow(resource, Activity.IDLE, cursor, last_tick))
    return gaps


def find_exchanges(event_log: Sequence[Event]) -> List[Exchange]:
    """
    Exchanges: a glass picked from a chamber and another placed into it by a
    different arm with no rotation in between.
    """
    exchanges = []
    last_pick: Optional[Tuple[Event, int]] = None
    for _, finished in _command_spans(event_log):
        command = finished.command
        if command is None:
            continue
        if command.kind is CommandKind.ROTATE_TO:
            last_pick = None
        elif command.kind is CommandKind.ARM_LOAD and finished.glass_id is not None:
            last_pick = (finished, command.target)
        elif command.kind is CommandKind.ARM_UNLOAD and finished.glass_id is not None:
            if (last_pick is not None and last_pick[0].chamber_id == finished.chamber_id
                    and last_pick[1] != command.target):
                assert last_pick[0].glass_id is not None and finished.chamber_id is not None
                exchanges.append(Exchange(
                    tick=finished.tick, chamber_id=finished.chamber_id,
                    picked_glass=last_pick[0].glass_id, placed_glass=finished.glass_id,
                    picked_arm=last_pick[1], placed_arm=command.target,
                ))
            last_pick = None
    return exchanges


def arms_used(event_log: Iterable[Event]) -> Set[int]:
    """Arms that moved at least one glass."""
    used = set()
    for event in event_log:
        if event.kind is EventKind.COMMAND_FINISHED and event.glass_id is not None:
            command = event.command
            if command is not None and command.is_arm_command:
                used.add(command.target)
    return used


def write_timetable_csv(timetable: Timetable, path: Union[str, Path]) -> Path:
    """Write resource,activity,start_s,end_s,glass_id,detail rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dt = timetable.tick_duration_s
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(GANTT_COLUMNS)
        for row in timetable.rows:
            writer.writerow([
                row.resource, row.activity.value,
                str(to_seconds(row.start_tick, dt)), str(to_seconds(row.end_tick, dt)),
                "" if row.glass_id is None else row.glass_id, row.detail,
            ])
    logger.debug(f"Wrote {len(timetable)} timetable rows to {path}")
    return path


_ACTIVITY_COLORS = {
    Activity.MOVING: "#4c72b0",
    Activity.IDLE: "#dddddd",
    Activity.PROCESS: "#55a868",
    Activity.LOAD: "#dd8452",
    Activity.UNLOAD: "#c44e52",
}


def write_timetable_svg(timetable: Timetable, path: Union[str, Path],
                        title: str = "Timetable") -> Path:
    """
    Render one horizontal band per resource as a standalone SVG.

    Output is byte-stable for equal timetables (no date metadata, fixed hash salt).
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Patch

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dt = timetable.tick_duration_s
    resources = timetable.resources()

    with matplotlib.rc_context({"svg.hashsalt": "glassflow", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(10, 1 + 0.5 * max(1, len(resources))))
        try:
            for index, resource in enumerate(resources):
                rows = timetable.for_resource(resource)
                xranges = [(to_seconds(r.start_tick, dt), to_seconds(r.duration, dt))
                           for r in rows]
                colors = [_ACTIVITY_COLORS[r.activity] for r in rows]
                ax.broken_barh(xranges, (index - 0.4, 0.8), facecolors=colors)
            ax.set_yticks(range(len(resources)))
            ax.set_yticklabels(resources)
            ax.invert_yaxis()
            ax.set_xlabel("time (s)")
            ax.set_title(title)
            ax.legend(handles=[Patch(color=c, label=a.value)
                               for a, c in _ACTIVITY_COLORS.items()],
                      loc="upper right", fontsize="small")
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    logger.debug(f"Wrote timetable graphic to {path}")
    return path
