"""Per-(link, group, cycle) bit accounting with the strict-priority cascade."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

from .forwarding import PathSchedule
from .network import Demand, Network
from .timing import GroupLadder, align

TICKS_PER_SECOND = 1_000_000_000

LinkKey = tuple[str, str]
Cell = tuple[LinkKey, int, int]  # (link, group, cycle)


class LedgerError(RuntimeError):
    pass


@dataclass(frozen=True)
class Footprint:
    demand_id: str
    key: tuple  # (demand id, path nodes, group) identifies the reservation
    entries: tuple[tuple[Cell, int], ...]

    def as_dict(self) -> dict[Cell, int]:
        out: dict[Cell, int] = defaultdict(int)
        for cell, bits in self.entries:
            out[cell] += bits
        return dict(out)


class Violation(NamedTuple):
    link: LinkKey
    group: int
    cycle: int
    excess: Fraction


def demand_footprint(ladder: GroupLadder, net: Network, schedule: PathSchedule, demand: Demand) -> Footprint:
    """One ``payload``-sized entry per hop per release, at the cycle the hop transmits in."""
    entries = []
    releases = schedule.release_cycles or (schedule.tx_cycles,)
    for cycles in releases:
        for link, c in zip(schedule.path.links, cycles):
            net.link(link)
            entries.append(((link, schedule.group, c), demand.payload))
    key = (demand.id, schedule.path.nodes, schedule.group)
    return Footprint(demand.id, key, tuple(entries))


def budget(net: Network, ladder: GroupLadder, link: LinkKey, m: int) -> Fraction:
    return Fraction(capacity(net, ladder, link, m), TICKS_PER_SECOND)


def capacity(net: Network, ladder: GroupLadder, link: LinkKey, m: int) -> int:
    """Cell budget scaled by ticks per second, so comparisons stay in integers."""
    return net.link(link).bandwidth * ladder.length(m)


def cascade(ladder: GroupLadder, footprint: Footprint) -> dict[Cell, int]:
    """Bits a footprint adds to every cascaded cell it reaches."""
    out: dict[Cell, int] = defaultdict(int)
    top = ladder.group_count
    for (link, m, c), bits in footprint.entries:
        out[(link, m, c)] += bits
        for up in range(m + 1, top + 1):
            out[(link, up, align(ladder, m, up, c))] += bits
    return dict(out)


class CapacityLedger:
    """Raw direct load plus the cascaded load each cell actually has to carry.

    Cells hold exact integer bit counts; zero cells are dropped so two ledgers
    with the same committed set compare equal.
    """

    def __init__(self, ladder: GroupLadder):
        self.ladder = ladder
        self.raw: dict[Cell, int] = {}
        self.cascaded: dict[Cell, int] = {}
        self.committed: dict[tuple, Footprint] = {}
        self._net: Network | None = None
        self._caps: dict[tuple[LinkKey, int], int] = {}

    def copy(self) -> "CapacityLedger":
        other = CapacityLedger(self.ladder)
        other.raw = dict(self.raw)
        other.cascaded = dict(self.cascaded)
        other.committed = dict(self.committed)
        return other

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CapacityLedger):
            return NotImplemented
        return (self.raw, self.cascaded, set(self.committed)) == (
            other.raw, other.cascaded, set(other.committed))

    @staticmethod
    def _add(table: dict[Cell, int], cell: Cell, bits: int) -> None:
        v = table.get(cell, 0) + bits
        if v:
            table[cell] = v
        else:
            table.pop(cell, None)

    def _apply(self, footprint: Footprint, sign: int) -> None:
        for cell, bits in footprint.entries:
            self._add(self.raw, cell, sign * bits)
        for cell, bits in cascade(self.ladder, footprint).items():
            self._add(self.cascaded, cell, sign * bits)

    def commit(self, footprint: Footprint) -> "CapacityLedger":
        if footprint.key in self.committed:
            raise LedgerError(f"footprint {footprint.key} already committed")
        self.committed[footprint.key] = footprint
        self._apply(footprint, +1)
        return self

    def rollback(self, footprint: Footprint) -> "CapacityLedger":
        if footprint.key not in self.committed:
            raise LedgerError(f"footprint {footprint.key} was never committed")
        del self.committed[footprint.key]
        self._apply(footprint, -1)
        return self

    def load(self, cell: Cell) -> int:
        return self.cascaded.get(cell, 0)

    def fits(self, net: Network, footprint: Footprint, load: dict[Cell, int] | None = None) -> bool:
        """Would committing ``footprint`` keep every cell it touches within budget?

        ``load`` may pass the footprint's precomputed cascade.
        """
        cells = cascade(self.ladder, footprint) if load is None else load
        if net is not self._net:
            self._net, self._caps = net, {}
        caps = self._caps
        for cell, bits in cells.items():
            cap = caps.get(cell[:2])
            if cap is None:
                cap = caps[cell[:2]] = capacity(net, self.ladder, cell[0], cell[1])
            if (self.cascaded.get(cell, 0) + bits) * TICKS_PER_SECOND > cap:
                return False
        return True


def check_capacity(ledger: CapacityLedger, net: Network, ladder: GroupLadder,
                   cells: Iterable[Cell] | None = None) -> list[Violation]:
    out = []
    for cell in sorted(ledger.cascaded if cells is None else cells):
        link, m, c = cell
        bits = ledger.load(cell)
        cap = budget(net, ladder, link, m)
        if bits > cap:
            out.append(Violation(link, m, c, bits - cap))
    return out


def headroom(ledger: CapacityLedger, net: Network, ladder: GroupLadder, link: LinkKey, m: int, c: int) -> float:
    fill = Fraction(ledger.load((link, m, c))) / budget(net, ladder, link, m)
    return max(0.0, float(1 - fill))


def recompute_cascade(ladder: GroupLadder, raw: dict[Cell, int]) -> dict[Cell, int]:
    """Level-by-level evaluation of the cascade from raw load alone."""
    by_link: dict[LinkKey, dict[tuple[int, int], int]] = defaultdict(dict)
    for (link, m, c), bits in raw.items():
        by_link[link][(m, c)] = bits
    out: dict[Cell, int] = {}
    for link, cells in by_link.items():
        below: dict[int, int] = {}
        for m in ladder.groups:
            level: dict[int, int] = defaultdict(int)
            for c, bits in below.items():
                level[align(ladder, m - 1, m, c)] += bits
            for (mm, c), bits in cells.items():
                if mm == m:
                    level[c] += bits
            below = {c: b for c, b in level.items() if b}
            for c, b in below.items():
                out[(link, m, c)] = b
    return out


def utilization(ledger: CapacityLedger, net: Network, ladder: GroupLadder) -> list[dict]:
    """Per (link, group): max and mean cell fill over the hypercycle."""
    rows = []
    for link in sorted(net.links):
        for m in ladder.groups:
            cap = budget(net, ladder, link, m)
            n = ladder.cycles_per_hypercycle(m)
            fills = [Fraction(ledger.load((link, m, c))) / cap for c in range(n)]
            rows.append({
                "src": link[0], "dst": link[1], "group": m,
                "max_fill": float(max(fills)), "mean_fill": float(sum(fills) / n),
            })
    return rows
