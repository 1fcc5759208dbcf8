from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..planner.assignment import Assignment
from .engine import FlowStats, SimResult


@dataclass
class FlowVerdict:
    flow: str
    passed: bool
    reasons: list[str] = field(default_factory=list)
    worst_packet: list[dict[str, Any]] = field(default_factory=list)


@dataclass
class VerificationReport:
    flows: list[FlowVerdict]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.flows)

    @property
    def failures(self) -> list[FlowVerdict]:
        return [v for v in self.flows if not v.passed]

    def as_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "flows": len(self.flows),
            "failures": [
                {"flow": v.flow, "reasons": v.reasons, "worst_packet": v.worst_packet}
                for v in self.failures
            ],
        }


def _hops(st: FlowStats) -> list[dict[str, Any]]:
    return [{"node": n, "tx_start_ns": float(a), "tx_end_ns": float(b)} for n, a, b in st.worst_hops]


def verify_against_bounds(result: SimResult | dict[str, FlowStats], assignment: Assignment) -> VerificationReport:
    """Each flow passes iff every measured delay is within its analytic bound,
    its spread stays within two cycles, and nothing was dropped."""
    flows = result.flows if isinstance(result, SimResult) else result
    out = []
    for did in sorted(assignment.accepted):
        sched = assignment.accepted[did].schedule
        st = flows.get(did)
        reasons = []
        if st is None:
            reasons.append("flow missing from simulation output")
            out.append(FlowVerdict(did, False, reasons))
            continue
        if st.dropped:
            reasons.append(f"{st.dropped} packet(s) dropped {st.drop_reasons}")
        if st.delivered == 0:
            reasons.append("no measured deliveries")
        if st.max_delay is not None and st.max_delay > sched.e2e_bound:
            reasons.append(f"max delay {float(st.max_delay)} ns exceeds bound {sched.e2e_bound} ns")
        if st.jitter > sched.jitter_bound:
            reasons.append(f"jitter {float(st.jitter)} ns exceeds {sched.jitter_bound} ns")
        out.append(FlowVerdict(did, not reasons, reasons, _hops(st) if reasons else []))
    return VerificationReport(out)
