from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..forwarding import PathSchedule, check_qos, trace_schedule
from ..ledger import CapacityLedger, Cell, Footprint, cascade, demand_footprint, headroom
from ..network import Demand, Network, Path, enumerate_paths
from ..timing import GroupLadder


@dataclass(frozen=True)
class Candidate:
    """One admissible way (path, group) to carry a demand."""

    index: int
    demand: Demand
    path: Path
    group: int
    schedule: PathSchedule
    footprint: Footprint
    load: dict[Cell, int] = field(compare=False, repr=False)  # cascaded contribution

    @property
    def demand_id(self) -> str:
        return self.demand.id

    @property
    def label(self) -> str:
        return f"{self.demand.id}@{self.path}/g{self.group}"


def build_candidates(
    ladder: GroupLadder,
    net: Network,
    demands: Sequence[Demand],
    hop_limit: int,
    paths_per_demand: int | None = 16,
) -> list[Candidate]:
    """Cross product of hop-bounded paths and groups, minus what QoS or a
    lone-demand capacity check rules out. Order: demand order, then path
    order, then group."""
    out: list[Candidate] = []
    for d in demands:
        for path in enumerate_paths(net, d.src, d.dst, hop_limit, paths_per_demand):
            for m in ladder.groups:
                sched = trace_schedule(ladder, net, d, path, m)
                if not check_qos(sched, d).feasible:
                    continue
                fp = demand_footprint(ladder, net, sched, d)
                # single-demand case of the capacity constraint, which
                # includes serialization: payload <= BW * cycle length
                if not CapacityLedger(ladder).fits(net, fp):
                    continue
                out.append(Candidate(len(out), d, path, m, sched, fp, cascade(ladder, fp)))
    return out


def priority(
    cand: Candidate,
    ledger: CapacityLedger,
    net: Network,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> float:
    x1, x2, x3 = weights
    score = x1 * cand.demand.value
    if x2:
        m = cand.group
        for link, c in zip(cand.path.links, cand.schedule.tx_cycles):
            score += x2 * headroom(ledger, net, ledger.ladder, link, m, c) ** x3
    return score
