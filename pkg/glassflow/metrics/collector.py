"""
Per-iteration training metrics.
"""

import csv
import logging
import statistics
import threading
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

logger = logging.getLogger(__name__)


@dataclass
class IterationMetrics:
    """One row of the training metrics CSV."""
    iteration: int
    env_steps: int
    mean_reward: float
    success_count: int
    drop_count: int
    break_count: int
    loss: float
    entropy: float

    def csv_row(self) -> List[str]:
        return [str(self.iteration), str(self.env_steps), f"{self.mean_reward:.10g}",
                str(self.success_count), str(self.drop_count), str(self.break_count),
                f"{self.loss:.10g}", f"{self.entropy:.10g}"]


METRIC_COLUMNS = [f.name for f in fields(IterationMetrics)]


class MetricsCollector:
    """
    Thread-safe collector for training iterations.

    Rows are kept in memory and, when a file is given, appended to a CSV as
    they arrive.
    """

    def __init__(self, csv_file: Optional[Union[str, Path]] = None, resume: bool = False):
        """
        Initialize metrics collector.

        Args:
            csv_file: Training metrics CSV; None keeps rows in memory only
            resume: Keep existing rows of csv_file instead of truncating it
        """
        self._lock = threading.RLock()
        self.rows: List[IterationMetrics] = []
        self.csv_file = Path(csv_file) if csv_file is not None else None
        if self.csv_file is not None:
            self.csv_file.parent.mkdir(parents=True, exist_ok=True)
            if resume and self.csv_file.exists():
                self.rows = read_metrics_csv(self.csv_file)
            else:
                with open(self.csv_file, 'w', encoding='utf-8', newline='') as f:
                    csv.writer(f, lineterminator='\n').writerow(METRIC_COLUMNS)

    def record_iteration(self, metrics: IterationMetrics) -> None:
        with self._lock:
            self.rows.append(metrics)
            if self.csv_file is not None:
                with open(self.csv_file, 'a', encoding='utf-8', newline='') as f:
                    csv.writer(f, lineterminator='\n').writerow(metrics.csv_row())
            logger.debug(f"Iteration {metrics.iteration}: steps={metrics.env_steps} "
                         f"reward={metrics.mean_reward:.4f} successes={metrics.success_count}")

    def get_summary(self) -> Dict[str, Any]:
        """
        Get metrics summary over all recorded iterations.

        Returns:
            Dictionary with totals and the last iteration
        """
        with self._lock:
            if not self.rows:
                return {"iterations": 0, "env_steps": 0}
            return {
                "iterations": len(self.rows),
                "env_steps": self.rows[-1].env_steps,
                "mean_reward": statistics.mean(r.mean_reward for r in self.rows),
                "successes": sum(r.success_count for r in self.rows),
                "drops": sum(r.drop_count for r in self.rows),
                "breaks": sum(r.break_count for r in self.rows),
                "last": asdict(self.rows[-1]),
            }

    def reset_metrics(self) -> None:
        with self._lock:
            self.rows.clear()
            logger.info("Metrics reset")


def read_metrics_csv(path: Union[str, Path]) -> List[IterationMetrics]:
    rows = []
    with open(path, 'r', encoding='utf-8', newline='') as f:
        for record in csv.DictReader(f):
            rows.append(IterationMetrics(
                iteration=int(record["iteration"]), env_steps=int(record["env_steps"]),
                mean_reward=float(record["mean_reward"]),
                success_count=int(record["success_count"]),
                drop_count=int(record["drop_count"]), break_count=int(record["break_count"]),
                loss=float(record["loss"]), entropy=float(record["entropy"]),
            ))
    return rows
