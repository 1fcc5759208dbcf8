from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from ..forwarding import check_qos, trace_schedule
from ..ledger import CapacityLedger, Violation, check_capacity, demand_footprint, cascade
from ..network import Demand, Network, Path
from ..timing import GroupLadder
from .candidates import Candidate


class AssignmentError(ValueError):
    pass


@dataclass
class Assignment:
    accepted: dict[str, Candidate] = field(default_factory=dict)
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def objective(self) -> int:
        return len(self.accepted)

    @classmethod
    def from_candidates(cls, chosen: Iterable[Candidate], **stats: Any) -> "Assignment":
        acc: dict[str, Candidate] = {}
        for cand in sorted(chosen, key=lambda c: c.index):
            if cand.demand_id in acc:
                raise AssignmentError(f"demand {cand.demand_id} assigned twice")
            acc[cand.demand_id] = cand
        return cls(acc, dict(stats))

    def ledger(self, ladder: GroupLadder) -> CapacityLedger:
        led = CapacityLedger(ladder)
        for cand in self.accepted.values():
            led.commit(cand.footprint)
        return led

    def to_document(self, demands: Sequence[Demand]) -> dict[str, Any]:
        rows = []
        for d in demands:
            cand = self.accepted.get(d.id)
            if cand is None:
                rows.append({"id": d.id, "accepted": False})
                continue
            rows.append({
                "id": d.id,
                "accepted": True,
                "path": list(cand.path.nodes),
                "group": cand.group,
                "tx_cycles": list(cand.schedule.tx_cycles),
                "e2e_bound_ns": cand.schedule.e2e_bound,
                "jitter_bound_ns": cand.schedule.jitter_bound,
            })
        return {"objective": self.objective, "demands": rows, "stats": self.stats}


def validate(assignment: Assignment, net: Network, ladder: GroupLadder) -> list[Violation]:
    """Capacity violations of the committed set; raises if any QoS check fails."""
    for cand in assignment.accepted.values():
        verdict = check_qos(cand.schedule, cand.demand)
        if not verdict.feasible:
            raise AssignmentError(f"{cand.label} violates its QoS bounds: {verdict}")
    return check_capacity(assignment.ledger(ladder), net, ladder)


def from_document(doc: Mapping[str, Any], demands: Sequence[Demand], net: Network,
                  ladder: GroupLadder) -> Assignment:
    """Rebuild schedules and footprints for an assignment document."""
    by_id = {d.id: d for d in demands}
    chosen = []
    for row in doc.get("demands", []):
        if not row.get("accepted"):
            continue
        did = str(row["id"])
        if did not in by_id:
            raise AssignmentError(f"assignment references unknown demand {did!r}")
        d = by_id[did]
        path = Path(tuple(str(n) for n in row["path"]))
        for link in path.links:
            if link not in net.links:
                raise AssignmentError(f"demand {did}: path uses unknown link {link}")
        sched = trace_schedule(ladder, net, d, path, int(row["group"]))
        fp = demand_footprint(ladder, net, sched, d)
        chosen.append(Candidate(len(chosen), d, path, sched.group, sched, fp, cascade(ladder, fp)))
    return Assignment.from_candidates(chosen, **doc.get("stats", {}))
