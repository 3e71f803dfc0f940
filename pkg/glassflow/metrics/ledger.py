"""
Outcome ledger of unloaded, dropped and broken glasses.
"""

import math
import threading
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, Iterable, Optional

from ..world.model import Event, EventKind

SUCCESS = "success"
DROP = "drop"
BREAK = "break"
INCOMPLETE = "incomplete"


@dataclass
class OutcomeMetrics:
    """Glass outcome counts."""
    successes: int = 0
    drops: int = 0
    breaks: int = 0
    incompletes: int = 0

    @property
    def failures(self) -> int:
        return self.drops + self.breaks + self.incompletes

    @property
    def total(self) -> int:
        return self.successes + self.failures

    @property
    def success_ratio(self) -> float:
        """successes / failures; inf when nothing failed, 0 when nothing arrived."""
        if self.failures == 0:
            return math.inf if self.successes > 0 else 0.0
        return self.successes / self.failures

    @property
    def success_rate(self) -> float:
        """Calculate percentage of glasses that arrived processed."""
        if self.total == 0:
            return 0.0
        return (self.successes / self.total) * 100

    def ratio_label(self) -> str:
        """Ratio as ``successes:failures`` reduced to ``x:1`` when failures exist."""
        if self.failures == 0:
            return f"{self.successes}:0"
        return f"{self.success_ratio:g}:1"

    def add(self, outcome: str) -> None:
        if outcome == SUCCESS:
            self.successes += 1
        elif outcome == DROP:
            self.drops += 1
        elif outcome == BREAK:
            self.breaks += 1
        elif outcome == INCOMPLETE:
            self.incompletes += 1
        else:
            raise ValueError(f"Unknown outcome: {outcome}")

    def as_dict(self) -> Dict[str, float]:
        return {
            "successes": self.successes, "drops": self.drops, "breaks": self.breaks,
            "incompletes": self.incompletes, "failures": self.failures,
            "success_ratio": self.success_ratio,
        }


def outcome_of(event: Event) -> Optional[str]:
    if event.kind is EventKind.GLASS_UNLOADED:
        return SUCCESS if event.processed else INCOMPLETE
    if event.kind is EventKind.GLASS_DROPPED:
        return DROP
    if event.kind is EventKind.GLASS_BROKEN:
        return BREAK
    return None


class OutcomeLedger:
    """
    Thread-safe totals plus a trailing window over the last ``window`` glasses.
    """

    def __init__(self, window: int = 500):
        if window < 1:
            raise ValueError("window must be at least 1")
        self.window = window
        self._lock = threading.RLock()
        self.totals = OutcomeMetrics()
        self._recent: Deque[str] = deque(maxlen=window)

    def record(self, events: Iterable[Event]) -> None:
        with self._lock:
            for event in events:
                outcome = outcome_of(event)
                if outcome is not None:
                    self.totals.add(outcome)
                    self._recent.append(outcome)

    def trailing(self) -> OutcomeMetrics:
        with self._lock:
            metrics = OutcomeMetrics()
            for outcome in self._recent:
                metrics.add(outcome)
            return metrics

    @property
    def trailing_ratio(self) -> float:
        return self.trailing().success_ratio

    def reset(self) -> None:
        with self._lock:
            self.totals = OutcomeMetrics()
            self._recent.clear()
