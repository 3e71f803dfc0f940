"""Event logs and step traces of simulator runs."""

from .trace_logger import (
    EVENT_LOG_COLUMNS, STEP_TRACE_COLUMNS, TraceLogger, read_event_log,
    summarize_events, write_event_log,
)

__all__ = [
    "EVENT_LOG_COLUMNS", "STEP_TRACE_COLUMNS", "TraceLogger", "read_event_log",
    "summarize_events", "write_event_log",
]
