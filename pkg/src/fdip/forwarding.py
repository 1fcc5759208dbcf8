"""Cycle mapping across a hop, per-hop worst-case delay, and path schedules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .network import Demand, Link, Network, Path, hypercycle_offset
from .timing import GroupLadder, LadderError, align


@dataclass(frozen=True)
class PathSchedule:
    demand_id: str
    path: Path
    group: int
    tx_cycles: tuple[int, ...]
    acc_delays: tuple[int, ...]
    cycle_length: int
    # One tx-cycle vector per release inside a hypercycle; the first equals tx_cycles.
    release_cycles: tuple[tuple[int, ...], ...] = ()

    @property
    def e2e_bound(self) -> int:
        return self.acc_delays[-1]

    @property
    def jitter_bound(self) -> int:
        return 2 * self.cycle_length

    def as_row(self) -> dict[str, Any]:
        return {
            "demand": self.demand_id,
            "group": self.group,
            "path": list(self.path.nodes),
            "tx_cycles": list(self.tx_cycles),
            "e2e_bound_ns": self.e2e_bound,
            "jitter_bound_ns": self.jitter_bound,
        }


@dataclass(frozen=True)
class QosVerdict:
    feasible: bool
    latency_slack: int
    jitter_slack: int | None  # None when the demand's jitter is unbounded


def _hop_floor(ladder: GroupLadder, net: Network, link: tuple[str, str], m: int, a: int) -> int:
    n_m = ladder.cycles_per_hypercycle(m)
    if not 0 <= a < n_m:
        raise LadderError(f"cycle index {a} outside 0..{n_m - 1} for group {m}")
    dm = ladder.length(m)
    tau = net.link(link).delay
    tau_hc = hypercycle_offset(net, link)
    return ((a + 1) * dm + tau - tau_hc) // dm


def _key(link: tuple[str, str] | Link) -> tuple[str, str]:
    return link.key if isinstance(link, Link) else link


def cycle_map(ladder: GroupLadder, net: Network, link, m: int, a: int) -> int:
    """Downstream cycle whose successor re-sends what left in cycle ``a`` upstream."""
    return _hop_floor(ladder, net, _key(link), m, a) % ladder.cycles_per_hypercycle(m)


def hop_delay(ladder: GroupLadder, net: Network, link, m: int, a: int) -> int:
    """Time from the end of upstream cycle ``a`` to the end of the mapped downstream cycle."""
    key = _key(link)
    dm = ladder.length(m)
    return _hop_floor(ladder, net, key, m, a) * dm + hypercycle_offset(net, key) - a * dm


def first_tx_cycle(ladder: GroupLadder, m: int, arrival_cycle: int) -> int:
    n0 = ladder.cycles_per_hypercycle(0)
    return (align(ladder, 0, m, arrival_cycle % n0) + 1) % ladder.cycles_per_hypercycle(m)


def _tx_cycles(ladder: GroupLadder, net: Network, path: Path, m: int, c0: int) -> list[int]:
    n_m = ladder.cycles_per_hypercycle(m)
    cycles = [c0]
    for link in path.links[:-1]:
        cycles.append((cycle_map(ladder, net, link, m, cycles[-1]) + 1) % n_m)
    return cycles


def trace_schedule(ladder: GroupLadder, net: Network, demand: Demand, path: Path, m: int) -> PathSchedule:
    if m not in ladder.groups:
        raise LadderError(f"group {m} outside 1..{ladder.group_count}")
    if path.nodes[0] != demand.src or path.nodes[-1] != demand.dst:
        raise ValueError(f"path {path} does not connect {demand.src} to {demand.dst}")
    dm = ladder.length(m)
    releases = ladder.hypercycle // demand.period
    step = demand.period // ladder.delta0
    all_cycles = tuple(
        tuple(_tx_cycles(ladder, net, path, m, first_tx_cycle(ladder, m, demand.arrival_cycle + k * step)))
        for k in range(releases)
    )
    tx = all_cycles[0]
    acc = [dm]
    for link, c in zip(path.links, tx):
        acc.append(acc[-1] + dm + hop_delay(ladder, net, link, m, c))
    return PathSchedule(demand.id, path, m, tx, tuple(acc), dm, all_cycles)


def check_qos(schedule: PathSchedule, demand: Demand) -> QosVerdict:
    latency_slack = demand.max_latency - schedule.e2e_bound
    ok = latency_slack >= 0
    jitter_slack = None
    if demand.max_jitter is not None:
        jitter_slack = demand.max_jitter - schedule.jitter_bound
        ok = ok and jitter_slack >= 0
    return QosVerdict(ok, latency_slack, jitter_slack)
