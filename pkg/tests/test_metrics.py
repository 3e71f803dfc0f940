"""
Tests for outcome ledgers and training metrics.
"""

import math
import tempfile
import threading
from pathlib import Path

import pytest

from glassflow.metrics import (
    METRIC_COLUMNS, IterationMetrics, MetricsCollector, OutcomeLedger, OutcomeMetrics,
    read_metrics_csv,
)
from glassflow.world import Event, EventKind


def unloaded(processed=True):
    return Event(tick=1, kind=EventKind.GLASS_UNLOADED, glass_id=0,
                 detail="processed" if processed else "incomplete")


def dropped():
    return Event(tick=1, kind=EventKind.GLASS_DROPPED, glass_id=0)


def iteration(i, steps=64):
    return IterationMetrics(iteration=i, env_steps=steps * (i + 1), mean_reward=0.25 * i,
                            success_count=i, drop_count=1, break_count=0, loss=0.5,
                            entropy=1.2)


class TestOutcomeMetrics:
    """Tests for OutcomeMetrics class."""

    def test_ratio_and_label(self):
        """Test 40 successes against one failure."""
        metrics = OutcomeMetrics(successes=40, drops=1)
        assert metrics.success_ratio == 40.0
        assert metrics.ratio_label() == "40:1"
        assert metrics.success_rate == pytest.approx(100 * 40 / 41)

    def test_no_failures(self):
        """Test an infinite ratio when nothing failed."""
        metrics = OutcomeMetrics(successes=12)
        assert math.isinf(metrics.success_ratio)
        assert metrics.ratio_label() == "12:0"

    def test_empty(self):
        """Test the empty ledger."""
        metrics = OutcomeMetrics()
        assert metrics.success_ratio == 0.0
        assert metrics.success_rate == 0.0

    def test_unknown_outcome(self):
        """Test that unknown outcomes raise ValueError."""
        with pytest.raises(ValueError, match="Unknown outcome"):
            OutcomeMetrics().add("lost")


class TestOutcomeLedger:
    """Tests for OutcomeLedger class."""

    def test_record_counts_every_failure_kind(self):
        """Test successes, incompletes, drops and breaks."""
        ledger = OutcomeLedger()
        ledger.record([unloaded(), unloaded(False), dropped(),
                       Event(tick=2, kind=EventKind.GLASS_BROKEN, glass_id=1),
                       Event(tick=2, kind=EventKind.GLASS_SPAWNED, glass_id=2)])
        assert ledger.totals.as_dict() == {
            "successes": 1, "drops": 1, "breaks": 1, "incompletes": 1, "failures": 3,
            "success_ratio": pytest.approx(1 / 3),
        }

    def test_trailing_window(self):
        """Test that only the last glasses count in the window."""
        ledger = OutcomeLedger(window=3)
        ledger.record([dropped(), dropped(), unloaded(), unloaded(), unloaded()])
        assert ledger.trailing().failures == 0
        assert math.isinf(ledger.trailing_ratio)
        assert ledger.totals.drops == 2

    def test_invalid_window(self):
        """Test that the window must hold at least one glass."""
        with pytest.raises(ValueError, match="window"):
            OutcomeLedger(window=0)

    def test_reset(self):
        """Test that reset clears totals and window."""
        ledger = OutcomeLedger()
        ledger.record([unloaded()])
        ledger.reset()
        assert ledger.totals.total == 0
        assert ledger.trailing().total == 0

    def test_concurrent_recording(self):
        """Test that parallel writers lose no outcomes."""
        ledger = OutcomeLedger()

        def worker():
            for _ in range(200):
                ledger.record([unloaded()])

        threads = [threading.Thread(target=worker) for _ in range(4)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        assert ledger.totals.successes == 800


class TestMetricsCollector:
    """Tests for MetricsCollector class."""

    def test_in_memory_summary(self):
        """Test summaries without a CSV file."""
        collector = MetricsCollector()
        assert collector.get_summary() == {"iterations": 0, "env_steps": 0}
        collector.record_iteration(iteration(0))
        collector.record_iteration(iteration(1))
        summary = collector.get_summary()
        assert summary["iterations"] == 2
        assert summary["env_steps"] == 128
        assert summary["successes"] == 1
        assert summary["drops"] == 2
        assert summary["last"]["iteration"] == 1

    def test_csv_rows(self):
        """Test the CSV header and one row per iteration."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "metrics.csv"
            collector = MetricsCollector(path)
            collector.record_iteration(iteration(0))
            collector.record_iteration(iteration(1))
            lines = path.read_text().splitlines()
            assert lines[0] == ",".join(METRIC_COLUMNS)
            assert lines[2] == "1,128,0.25,1,1,0,0.5,1.2"
            assert read_metrics_csv(path) == [iteration(0), iteration(1)]

    def test_resume_keeps_rows(self):
        """Test that resuming appends instead of truncating."""
        with tempfile.TemporaryDirectory() as temp_dir:
            path = Path(temp_dir) / "metrics.csv"
            MetricsCollector(path).record_iteration(iteration(0))
            resumed = MetricsCollector(path, resume=True)
            assert len(resumed.rows) == 1
            resumed.record_iteration(iteration(1))
            assert len(read_metrics_csv(path)) == 2

    def test_reset_metrics(self):
        """Test that reset clears the in-memory rows."""
        collector = MetricsCollector()
        collector.record_iteration(iteration(0))
        collector.reset_metrics()
        assert collector.rows == []
