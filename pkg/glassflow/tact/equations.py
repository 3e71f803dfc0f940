"""
Process-tact arithmetic.

Terms are given in seconds and summed in whole ticks, so the general form
and its fixed/delta split agree exactly.
"""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from ..config.manager import ticks_from_seconds

DEFAULT_TICK_S = 0.1


class TactArityError(ValueError):
    """Per-chamber term lists do not match the chamber count."""


@dataclass(frozen=True)
class TactTerms:
    """
    Timing symbols of one glass pass, in seconds.

    Attributes:
        t_L: Loading time
        t_U: Unloading time
        t_R: Robot rotation time per leg
        t_get: Time to take a glass out of a chamber
        t_put: Time to place a glass into a chamber
        t_P: Process time per process chamber
        t_w: Waiting time per process chamber
        tick_duration_s: Tick used for the internal integer arithmetic
    """
    t_L: float = 0.0
    t_U: float = 0.0
    t_R: Tuple[float, ...] = field(default_factory=tuple)
    t_get: float = 0.0
    t_put: float = 0.0
    t_P: Tuple[float, ...] = field(default_factory=tuple)
    t_w: Tuple[float, ...] = field(default_factory=tuple)
    tick_duration_s: float = DEFAULT_TICK_S

    def __post_init__(self):
        object.__setattr__(self, "t_R", tuple(self.t_R))
        object.__setattr__(self, "t_P", tuple(self.t_P))
        object.__setattr__(self, "t_w", tuple(self.t_w))
        scalars = [self.t_L, self.t_U, self.t_get, self.t_put]
        if any(v < 0 for v in scalars + list(self.t_R) + list(self.t_P) + list(self.t_w)):
            raise ValueError("Tact terms must be non-negative")
        if self.tick_duration_s <= 0:
            raise ValueError("tick_duration_s must be positive")

    @classmethod
    def from_ticks(cls, t_L: int, t_U: int, t_R: Sequence[int], t_get: int, t_put: int,
                   t_P: Sequence[int], t_w: Sequence[int],
                   tick_duration_s: float = DEFAULT_TICK_S) -> "TactTerms":
        """Build terms from tick counts."""
        def s(ticks: int) -> float:
            return to_seconds(ticks, tick_duration_s)
        return cls(t_L=s(t_L), t_U=s(t_U), t_R=tuple(s(t) for t in t_R),
                   t_get=s(t_get), t_put=s(t_put), t_P=tuple(s(t) for t in t_P),
                   t_w=tuple(s(t) for t in t_w), tick_duration_s=tick_duration_s)

    def ticks(self, seconds: float) -> int:
        return ticks_from_seconds(seconds, self.tick_duration_s)

    def tick_list(self, values: Sequence[float]) -> List[int]:
        return [self.ticks(v) for v in values]


def to_seconds(ticks: int, tick_duration_s: float = DEFAULT_TICK_S) -> float:
    return round(ticks * tick_duration_s, 9)


def _require_arity(terms: TactTerms, k: int) -> None:
    if k < 1:
        raise TactArityError(f"The general form needs at least one process chamber, got K={k}")
    for name in ("t_R", "t_P", "t_w"):
        size = len(getattr(terms, name))
        if size != k:
            raise TactArityError(f"{name} has {size} entries, expected K={k}")


def process_tact_single(terms: TactTerms) -> float:
    """
    Tact of a unit process with one process chamber, summed term by term:
    t_Ra + t_get + t_Rb + t_put + t_P + t_w + t_get + t_Rc + t_put + t_U.

    Args:
        terms: Three rotation legs, one process time and one wait

    Returns:
        Tact in seconds

    Raises:
        TactArityError: If the list lengths are not 3/1/1
    """
    if len(terms.t_R) != 3 or len(terms.t_P) != 1 or len(terms.t_w) != 1:
        raise TactArityError(
            f"Single-chamber tact needs 3 rotation legs and one process/wait term, "
            f"got {len(terms.t_R)}/{len(terms.t_P)}/{len(terms.t_w)}"
        )
    r_a, r_b, r_c = terms.tick_list(terms.t_R)
    get, put = terms.ticks(terms.t_get), terms.ticks(terms.t_put)
    total = (r_a + get + r_b + put + terms.ticks(terms.t_P[0]) + terms.ticks(terms.t_w[0])
             + get + r_c + put + terms.ticks(terms.t_U))
    return to_seconds(total, terms.tick_duration_s)


def process_tact_general_ticks(terms: TactTerms, k: int) -> int:
    """Integer-tick form of ``process_tact_general``."""
    fixed, delta = decompose_tact_ticks(terms, k)
    return fixed + delta


def decompose_tact_ticks(terms: TactTerms, k: int) -> Tuple[int, int]:
    """Integer-tick form of ``decompose_tact``."""
    _require_arity(terms, k)
    fixed = (terms.ticks(terms.t_L)
             + (k + 1) * (terms.ticks(terms.t_get) + terms.ticks(terms.t_put))
             + sum(terms.tick_list(terms.t_P))
             + terms.ticks(terms.t_U))
    delta = sum(terms.tick_list(terms.t_R)) + sum(terms.tick_list(terms.t_w))
    return fixed, delta


def process_tact_general(terms: TactTerms, k: int) -> float:
    """
    Tact with K process chambers:
    t_L + sum(t_R) + (K+1)(t_get + t_put) + sum(t_P) + sum(t_w) + t_U.

    Args:
        terms: Terms whose per-chamber lists have K entries
        k: Number of process chambers (at least 1)

    Returns:
        Tact in seconds

    Raises:
        TactArityError: On K < 1 or list length mismatch
    """
    return to_seconds(process_tact_general_ticks(terms, k), terms.tick_duration_s)


def decompose_tact(terms: TactTerms, k: int) -> Tuple[float, float]:
    """
    Split the general tact into the fixed part and the robot-transport delta.

    fixed = t_L + (K+1)(t_get + t_put) + sum(t_P) + t_U;
    delta = sum(t_R) + sum(t_w).
    """
    fixed, delta = decompose_tact_ticks(terms, k)
    return to_seconds(fixed, terms.tick_duration_s), to_seconds(delta, terms.tick_duration_s)
