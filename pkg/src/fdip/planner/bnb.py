"""Best-first branch and bound over (demand, path, group) candidates."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..ledger import CapacityLedger
from ..network import Network
from ..timing import GroupLadder
from .assignment import Assignment, validate
from .baselines import greedy_baseline
from .candidates import Candidate, priority
from .relaxation import INFEASIBLE, solve_relaxation

log = logging.getLogger(__name__)

# Slack used when flooring an LP value; must exceed simplex round-off.
FLOOR_EPS = 1e-6
INTEGRAL_EPS = 1e-9


@dataclass
class PlannerConfig:
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    hop_limit: int = 4
    paths_per_demand: int = 16
    mode: str = "bnb"  # bnb | greedy | oracle
    max_nodes: int | None = None
    time_budget: float | None = None  # seconds; breaks byte-determinism when it triggers
    node_selection: str = "best"  # best (max bound) | worst (min bound)
    lp_backend: str = "simplex"
    tighten: bool = True
    seed_incumbent: bool = True
    lp_rounding: bool = True
    oracle_cap: int = 22


@dataclass
class SearchStats:
    nodes_explored: int = 0
    nodes_created: int = 0
    pruned_bound: int = 0
    pruned_infeasible: int = 0
    lp_solves: int = 0
    incumbent_updates: int = 0
    root_bound: float = 0.0
    upper_bound: int = 0
    gap: int = 0
    exhausted: bool = True
    incumbents: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["root_bound"] = round(self.root_bound, 9)
        return d


def _floor(bound: float) -> int:
    return math.floor(bound + FLOOR_EPS)


def branch_and_bound(
    candidates: Sequence[Candidate],
    ladder: GroupLadder,
    net: Network,
    config: PlannerConfig | None = None,
    observer: Callable[[frozenset, frozenset, float], None] | None = None,
) -> Assignment:
    """Maximise the number of accepted demands.

    ``observer(L0, L1, bound)`` sees every relaxation solved, which is how the
    bound-validity checks hook in.
    """
    cfg = config or PlannerConfig()
    stats = SearchStats()
    if not candidates:
        return Assignment(stats={"mode": "bnb", **stats.as_dict()})

    start = time.monotonic()
    seq = itertools.count()

    def relax(zero: frozenset, one: frozenset) -> tuple[float, dict[int, float]]:
        stats.lp_solves += 1
        bound, x = solve_relaxation(candidates, zero, one, net, ladder,
                                    backend=cfg.lp_backend, tighten=cfg.tighten)
        if observer is not None:
            observer(zero, one, bound)
        return bound, x

    best: list[Candidate] = []
    o_star = -math.inf
    if cfg.seed_incumbent:
        seed = greedy_baseline(candidates, ladder, net, cfg.weights)
        best = list(seed.accepted.values())
        o_star = seed.objective
        stats.incumbents.append(seed.objective)

    def offer(chosen: list[Candidate]) -> None:
        nonlocal best, o_star
        if len(chosen) > o_star:
            best, o_star = chosen, len(chosen)
            stats.incumbent_updates += 1
            stats.incumbents.append(len(chosen))

    def round_down(one: frozenset, zero: frozenset, x: dict[int, float]) -> list[Candidate]:
        # fixed ones first, then free candidates by descending LP value
        led = CapacityLedger(ladder)
        taken: set[str] = set()
        chosen = []
        for i in sorted(one):
            led.commit(candidates[i].footprint)
            taken.add(candidates[i].demand_id)
            chosen.append(candidates[i])
        for i in sorted((i for i in x if i not in one and i not in zero), key=lambda i: (-x[i], i)):
            cand = candidates[i]
            if cand.demand_id in taken or not led.fits(net, cand.footprint, cand.load):
                continue
            led.commit(cand.footprint)
            taken.add(cand.demand_id)
            chosen.append(cand)
        return chosen

    def integral_selection(x: dict[int, float]) -> list[Candidate] | None:
        chosen = []
        for i, v in x.items():
            if v > 1 - INTEGRAL_EPS:
                chosen.append(candidates[i])
            elif v > INTEGRAL_EPS:
                return None
        led = CapacityLedger(ladder)
        taken = set()
        for cand in chosen:
            if cand.demand_id in taken or not led.fits(net, cand.footprint, cand.load):
                return None
            taken.add(cand.demand_id)
            led.commit(cand.footprint)
        return chosen

    sign = -1.0 if cfg.node_selection == "best" else 1.0
    # equal bounds: deeper node first, then creation order
    heap: list[tuple[float, int, int, frozenset, frozenset]] = []

    def consider(zero: frozenset, one: frozenset) -> float:
        bound, x = relax(zero, one)
        stats.nodes_created += 1
        if bound == INFEASIBLE:
            stats.pruned_infeasible += 1
            return bound
        if _floor(bound) <= o_star:
            stats.pruned_bound += 1
            return bound
        chosen = integral_selection(x)
        if chosen is not None:
            # the relaxation optimum is itself a selection: nothing left to branch on
            offer(chosen)
            return bound
        if cfg.lp_rounding:
            offer(round_down(one, zero, x))
            if _floor(bound) <= o_star:
                stats.pruned_bound += 1
                return bound
        heapq.heappush(heap, (sign * bound, -(len(zero) + len(one)), next(seq), zero, one))
        return bound

    stats.root_bound = consider(frozenset(), frozenset())

    while heap:
        if cfg.max_nodes is not None and stats.nodes_explored >= cfg.max_nodes:
            stats.exhausted = False
            break
        if cfg.time_budget is not None and time.monotonic() - start > cfg.time_budget:
            stats.exhausted = False
            break
        key, _, _, zero, one = heapq.heappop(heap)
        bound = sign * key
        if _floor(bound) <= o_star:
            stats.pruned_bound += 1
            continue
        stats.nodes_explored += 1

        ledger = CapacityLedger(ladder)
        taken = set()
        for i in sorted(one):
            ledger.commit(candidates[i].footprint)
            taken.add(candidates[i].demand_id)
        free = [c for c in candidates
                if c.index not in zero and c.index not in one and c.demand_id not in taken
                and (not cfg.tighten or ledger.fits(net, c.footprint, c.load))]
        if not free:
            offer([candidates[i] for i in sorted(one)])
            continue
        pick = max(free, key=lambda c: (priority(c, ledger, net, cfg.weights), -c.index))
        consider(zero | {pick.index}, one)
        consider(zero, one | {pick.index})

    if heap:
        open_best = max(_floor(sign * k) for k, *_ in heap)
        stats.upper_bound = max(int(max(o_star, 0)), open_best)
    else:
        stats.upper_bound = int(max(o_star, 0))
    stats.gap = stats.upper_bound - int(max(o_star, 0))

    result = Assignment.from_candidates(best, mode="bnb", **stats.as_dict())
    violations = validate(result, net, ladder)
    assert not violations, f"branch and bound produced an infeasible plan: {violations[:3]}"
    log.debug("bnb: objective %d, %d nodes, gap %d", result.objective, stats.nodes_explored, stats.gap)
    return result
