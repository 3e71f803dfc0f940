"""
Tests for event logs and step traces.
"""

import os
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest

from glassflow.logging import (
    EVENT_LOG_COLUMNS, STEP_TRACE_COLUMNS, TraceLogger, read_event_log, summarize_events,
    write_event_log,
)
from glassflow.world import Event, EventKind


def sample_events():
    return [
        Event(tick=1, kind=EventKind.GLASS_SPAWNED, glass_id=0, chamber_id=0),
        Event(tick=1, kind=EventKind.COMMAND_STARTED, chamber_id=0, detail="ArmLoad(0)"),
        Event(tick=11, kind=EventKind.COMMAND_FINISHED, glass_id=0, chamber_id=0,
              detail="ArmLoad(0)"),
        Event(tick=40, kind=EventKind.GLASS_UNLOADED, glass_id=0, chamber_id=1,
              detail="processed"),
    ]


class TestEventLog:
    """Tests for write_event_log() and read_event_log()."""

    def test_header_and_rows(self):
        """Test the CSV layout of an event log."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = write_event_log(sample_events(), Path(temp_dir) / "events.csv")
            lines = path.read_text().splitlines()
            assert lines[0] == ",".join(EVENT_LOG_COLUMNS)
            assert lines[1] == "1,GlassSpawned,0,0,"
            assert lines[2] == "1,CommandStarted,,0,ArmLoad(0)"
            assert len(lines) == 5

    def test_read_restores_events(self):
        """Test that a written log reads back to equal events."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = write_event_log(sample_events(), os.path.join(temp_dir, "a", "events.csv"))
            events = read_event_log(path)
            assert events == sample_events()
            assert events[2].command.label == "ArmLoad(0)"
            assert events[3].processed

    def test_write_failure_raises_runtime_error(self):
        """Test that I/O errors are wrapped."""
        with tempfile.TemporaryDirectory() as temp_dir:
            with patch("builtins.open", side_effect=OSError("disk full")):
                with pytest.raises(RuntimeError, match="Event log writing failed"):
                    write_event_log(sample_events(), Path(temp_dir) / "events.csv")

    def test_summarize_events(self):
        """Test per-kind counts and tick span."""
        stats = summarize_events(sample_events())
        assert stats["total_entries"] == 4
        assert stats["events"]["GlassSpawned"] == 1
        assert stats["first_tick"] == 1
        assert stats["last_tick"] == 40

    def test_summarize_empty(self):
        """Test summaries of an empty log."""
        stats = summarize_events([])
        assert stats["total_entries"] == 0
        assert stats["first_tick"] is None


class TestTraceLogger:
    """Tests for TraceLogger class."""

    def test_header_written_on_init(self):
        """Test that a new trace holds only the header."""
        with tempfile.TemporaryDirectory() as temp_dir:
            trace = TraceLogger(Path(temp_dir) / "trace.csv")
            assert trace.trace_file.read_text().strip() == ",".join(STEP_TRACE_COLUMNS)
            assert trace.read_rows() == []

    def test_cumulative_counts(self):
        """Test that unloads and failures accumulate across steps."""
        with tempfile.TemporaryDirectory() as temp_dir:
            trace = TraceLogger(Path(temp_dir) / "trace.csv")
            trace.log_step("ArmLoad(0)", -0.01, 10, [])
            trace.log_step("ArmUnload(0)", 0.99, 10, [
                Event(tick=21, kind=EventKind.GLASS_UNLOADED, glass_id=0, chamber_id=1,
                      detail="processed"),
            ])
            trace.log_step("RotateTo(1)", -1.0, 13, [
                Event(tick=34, kind=EventKind.GLASS_DROPPED, glass_id=1),
            ])
            rows = trace.read_rows()
            assert [r["step"] for r in rows] == ["0", "1", "2"]
            assert rows[1]["cumulative_unloaded"] == "1"
            assert rows[1]["cumulative_failed"] == "0"
            assert rows[2]["cumulative_failed"] == "1"
            assert rows[2]["ticks"] == "13"
            assert float(rows[1]["reward"]) == pytest.approx(0.99)

    def test_incomplete_unload_counts_as_failure(self):
        """Test that an unprocessed arrival is both unloaded and failed."""
        with tempfile.TemporaryDirectory() as temp_dir:
            trace = TraceLogger(Path(temp_dir) / "trace.csv")
            trace.log_step("ArmUnload(0)", -1.0, 10, [
                Event(tick=5, kind=EventKind.GLASS_UNLOADED, glass_id=0, chamber_id=2,
                      detail="incomplete"),
            ])
            assert trace.cumulative_unloaded == 1
            assert trace.cumulative_failed == 1

    def test_new_logger_truncates(self):
        """Test that reopening a trace starts it over."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "trace.csv"
            TraceLogger(path).log_step("Wait", 0.0, 1, [])
            assert TraceLogger(path).read_rows() == []
