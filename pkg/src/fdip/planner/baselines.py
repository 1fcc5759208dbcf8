"""Greedy lower bound and exhaustive ground truth for small instances."""

from __future__ import annotations

from collections import defaultdict
from typing import Collection, Sequence

from ..ledger import CapacityLedger
from ..network import Network
from ..timing import GroupLadder
from .assignment import Assignment
from .candidates import Candidate, priority

DEFAULT_ORACLE_CAP = 22


class OracleCapExceeded(RuntimeError):
    pass


def greedy_baseline(
    candidates: Sequence[Candidate],
    ladder: GroupLadder,
    net: Network,
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> Assignment:
    empty = CapacityLedger(ladder)
    order = sorted(candidates, key=lambda c: (-priority(c, empty, net, weights), c.index))
    ledger = CapacityLedger(ladder)
    chosen: list[Candidate] = []
    taken: set[str] = set()
    for cand in order:
        if cand.demand_id in taken or not ledger.fits(net, cand.footprint, cand.load):
            continue
        ledger.commit(cand.footprint)
        taken.add(cand.demand_id)
        chosen.append(cand)
    return Assignment.from_candidates(chosen, mode="greedy")


def brute_force_oracle(
    candidates: Sequence[Candidate],
    ladder: GroupLadder,
    net: Network,
    cap: int = DEFAULT_ORACLE_CAP,
    fixed_zero: Collection[int] = (),
    fixed_one: Collection[int] = (),
) -> Assignment | None:
    """Maximum-cardinality feasible selection with at most one candidate per demand.

    Every subset is reached (infeasible partial selections are cut, since
    adding load never repairs a violation). Returns ``None`` if the fixings
    admit no feasible selection.
    """
    if len(candidates) > cap:
        raise OracleCapExceeded(f"{len(candidates)} candidates exceed the oracle cap of {cap}")
    zero, one = set(fixed_zero), set(fixed_one)

    options: dict[str, list[Candidate]] = defaultdict(list)
    order: list[str] = []
    for cand in candidates:
        if cand.demand_id not in order:
            order.append(cand.demand_id)
        if cand.index not in zero:
            options[cand.demand_id].append(cand)
    forced: dict[str, Candidate] = {}
    for i in sorted(one):
        cand = candidates[i]
        if cand.demand_id in forced:
            return None
        forced[cand.demand_id] = cand

    choices: list[list[Candidate | None]] = []
    for did in order:
        if did in forced:
            choices.append([forced[did]])
        else:
            choices.append([*options[did], None])

    ledger = CapacityLedger(ladder)
    best: list[Candidate] | None = None
    current: list[Candidate] = []

    def walk(k: int) -> None:
        nonlocal best
        if best is not None and len(current) + (len(choices) - k) <= len(best):
            return
        if k == len(choices):
            best = list(current)
            return
        for cand in choices[k]:
            if cand is None:
                walk(k + 1)
                continue
            if not ledger.fits(net, cand.footprint, cand.load):
                continue
            ledger.commit(cand.footprint)
            current.append(cand)
            walk(k + 1)
            current.pop()
            ledger.rollback(cand.footprint)

    walk(0)
    if best is None:
        return None
    return Assignment.from_candidates(best, mode="oracle")
