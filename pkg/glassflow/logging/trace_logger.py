"""
Event-log and step-trace files for simulator runs.
"""

import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

from ..world.model import Event, EventKind

logger = logging.getLogger(__name__)

EVENT_LOG_COLUMNS = ["tick", "event", "glass_id", "chamber_id", "detail"]
STEP_TRACE_COLUMNS = [
    "step", "action", "reward", "ticks", "cumulative_unloaded", "cumulative_failed"
]


def _cell(value: Optional[int]) -> str:
    return "" if value is None else str(value)


def write_event_log(events: Iterable[Event], path: Union[str, Path]) -> Path:
    """
    Write events as CSV with columns tick,event,glass_id,chamber_id,detail.

    Args:
        events: Events in emission order
        path: Destination file

    Returns:
        Path of the written file

    Raises:
        RuntimeError: If the file cannot be written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(EVENT_LOG_COLUMNS)
            count = 0
            for event in events:
                writer.writerow([event.tick, event.kind.value, _cell(event.glass_id),
                                 _cell(event.chamber_id), event.detail])
                count += 1
    except OSError as e:
        logger.error(f"Failed to write event log {path}: {e}")
        raise RuntimeError(f"Event log writing failed: {e}")
    logger.debug(f"Wrote {count} events to {path}")
    return path


def read_event_log(path: Union[str, Path]) -> List[Event]:
    """Parse an event log written by ``write_event_log``."""
    events = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        for row in reader:
            events.append(Event(
                tick=int(row["tick"]),
                kind=EventKind(row["event"]),
                glass_id=int(row["glass_id"]) if row["glass_id"] else None,
                chamber_id=int(row["chamber_id"]) if row["chamber_id"] else None,
                detail=row["detail"] or "",
            ))
    return events


def summarize_events(events: Iterable[Event]) -> Dict[str, Any]:
    """Counts per event kind plus the tick span."""
    stats: Dict[str, Any] = {"total_entries": 0, "events": {}, "first_tick": None,
                             "last_tick": None}
    for event in events:
        stats["total_entries"] += 1
        name = event.kind.value
        stats["events"][name] = stats["events"].get(name, 0) + 1
        if stats["first_tick"] is None:
            stats["first_tick"] = event.tick
        stats["last_tick"] = event.tick
    return stats


class TraceLogger:
    """Appends one row per decision step to a step-trace CSV."""

    def __init__(self, trace_file: Union[str, Path]):
        """
        Initialize trace logger.

        Args:
            trace_file: Path of the step trace; it is truncated and given a header.
        """
        self.trace_file = Path(trace_file)
        self.trace_file.parent.mkdir(parents=True, exist_ok=True)
        self.cumulative_unloaded = 0
        self.cumulative_failed = 0
        self.steps = 0
        with open(self.trace_file, 'w', encoding='utf-8', newline='') as f:
            csv.writer(f, lineterminator='\n').writerow(STEP_TRACE_COLUMNS)
        logger.info(f"Step trace initialized with file: {self.trace_file}")

    def log_step(self, action: str, reward: float, ticks: int,
                 events: Iterable[Event]) -> None:
        """
        Record one macro-step.

        Args:
            action: Label of the command taken
            reward: Reward of the step
            ticks: Simulator ticks the step consumed
            events: Events emitted during the step

        Raises:
            RuntimeError: If writing fails
        """
        for event in events:
            if event.kind is EventKind.GLASS_UNLOADED:
                self.cumulative_unloaded += 1
                if not event.processed:
                    self.cumulative_failed += 1
            elif event.kind in (EventKind.GLASS_DROPPED, EventKind.GLASS_BROKEN):
                self.cumulative_failed += 1
        try:
            with open(self.trace_file, 'a', encoding='utf-8', newline='') as f:
                csv.writer(f, lineterminator='\n').writerow([
                    self.steps, action, f"{reward:.6g}", ticks,
                    self.cumulative_unloaded, self.cumulative_failed,
                ])
        except OSError as e:
            logger.error(f"Failed to log step: {e}")
            raise RuntimeError(f"Step trace logging failed: {e}")
        self.steps += 1

    def read_rows(self) -> List[Dict[str, str]]:
        with open(self.trace_file, 'r', encoding='utf-8', newline='') as f:
            return list(csv.DictReader(f))
