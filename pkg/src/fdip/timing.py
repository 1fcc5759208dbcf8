"""Multi-rate cycle ladder and the alignment algebra between cycle groups.

All durations are integer nanosecond ticks. Group 0 is the unitary grid
(``delta0``); groups 1..M are the queue groups, each ``k_m`` times slower
than the one before it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

# Guard against runaway lcm growth from badly chosen periods.
MAX_TICKS = 2**62


class LadderError(ValueError):
    pass


@dataclass(frozen=True)
class GroupLadder:
    delta0: int
    multipliers: tuple[int, ...]
    queues_per_group: int = 4
    hypercycle_factor: int = 1
    hypercycle: int = 0
    _lengths: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "multipliers", tuple(int(k) for k in self.multipliers))
        if int(self.delta0) != self.delta0 or self.delta0 <= 0:
            raise LadderError(f"delta0 must be a positive integer tick count, got {self.delta0!r}")
        if not self.multipliers:
            raise LadderError("ladder needs at least one group")
        if any(k <= 0 for k in self.multipliers):
            raise LadderError(f"multipliers must be positive integers, got {self.multipliers}")
        if self.queues_per_group < 3:
            raise LadderError("queues_per_group must be >= 3")
        lengths = [int(self.delta0)]
        for k in self.multipliers:
            lengths.append(lengths[-1] * k)
        object.__setattr__(self, "_lengths", tuple(lengths))
        if self.hypercycle:
            for m in range(1, self.group_count + 1):
                if self.hypercycle % lengths[m]:
                    raise LadderError(f"hypercycle {self.hypercycle} not a multiple of group {m} cycle")
                if self.hypercycle // lengths[m] < self.queues_per_group:
                    raise LadderError(f"hypercycle holds fewer than {self.queues_per_group} cycles of group {m}")

    @property
    def group_count(self) -> int:
        return len(self.multipliers)

    @property
    def groups(self) -> range:
        return range(1, self.group_count + 1)

    def length(self, m: int) -> int:
        return cycle_length(self, m)

    def cycles_per_hypercycle(self, m: int) -> int:
        if not self.hypercycle:
            raise LadderError("hypercycle not built yet")
        return self.hypercycle // self.length(m)

    def with_hypercycle(self, demand_periods: Iterable[int] = ()) -> "GroupLadder":
        """Return a copy of this ladder with the hypercycle fixed for ``demand_periods``."""
        periods = tuple(demand_periods)
        hc = build_hypercycle(self, periods)
        factor = hc // _base_lcm(self, periods)
        return GroupLadder(
            self.delta0, self.multipliers, self.queues_per_group, factor, hc
        )


def cycle_length(ladder: GroupLadder, m: int) -> int:
    if not 0 <= m <= ladder.group_count:
        raise LadderError(f"group index {m} outside 0..{ladder.group_count}")
    return ladder._lengths[m]


def _base_lcm(ladder: GroupLadder, periods: Iterable[int]) -> int:
    base = ladder.length(ladder.group_count)
    for p in periods:
        if int(p) != p or p <= 0:
            raise LadderError(f"demand period must be a positive integer tick count, got {p!r}")
        base = math.lcm(base, int(p))
        if base > MAX_TICKS:
            raise LadderError("hypercycle lcm overflows the tick grid")
    return base


def build_hypercycle(ladder: GroupLadder, demand_periods: Iterable[int] = ()) -> int:
    """Smallest ``N_hc * lcm(slowest cycle, periods)`` holding ``queues_per_group``
    cycles of every group.

    On a ladder whose hypercycle is not built yet, ``hypercycle_factor`` acts
    as a configured floor for ``N_hc``; once built it only records the factor
    that was chosen.
    """
    base = _base_lcm(ladder, demand_periods)
    # The slowest group is the binding one: base/Δ_M <= base/Δ_m.
    slowest = ladder.length(ladder.group_count)
    need = -(-ladder.queues_per_group * slowest // base)
    floor = 1 if ladder.hypercycle else ladder.hypercycle_factor
    factor = max(1, need, floor)
    hc = factor * base
    if hc > MAX_TICKS:
        raise LadderError("hypercycle overflows the tick grid")
    return hc


def _check_pair(ladder: GroupLadder, m_i: int, m_j: int) -> None:
    if not (0 <= m_i < m_j <= ladder.group_count):
        raise LadderError(f"alignment needs 0 <= m_i < m_j <= M, got ({m_i}, {m_j})")


def align(ladder: GroupLadder, m_i: int, m_j: int, a: int) -> int:
    """Index of the group-``m_j`` cycle overlapping cycle ``a`` of group ``m_i``."""
    _check_pair(ladder, m_i, m_j)
    n_i = ladder.cycles_per_hypercycle(m_i)
    if not 0 <= a < n_i:
        raise LadderError(f"cycle index {a} outside 0..{n_i - 1} for group {m_i}")
    num = (a + 1) * ladder.length(m_i)
    return -(-num // ladder.length(m_j)) - 1


def align_inverse(ladder: GroupLadder, m_i: int, m_j: int, b: int) -> range:
    """All group-``m_i`` cycles sharing time with cycle ``b`` of group ``m_j``."""
    _check_pair(ladder, m_i, m_j)
    n_j = ladder.cycles_per_hypercycle(m_j)
    if not 0 <= b < n_j:
        raise LadderError(f"cycle index {b} outside 0..{n_j - 1} for group {m_j}")
    ratio = ladder.length(m_j) // ladder.length(m_i)
    return range(b * ratio, (b + 1) * ratio)
