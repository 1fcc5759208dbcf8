"""Continuous relaxation of the admission problem under fixed 0/1 sets."""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Collection, Sequence

import numpy as np

from ..ledger import TICKS_PER_SECOND, Cell, capacity
from ..network import Network
from ..timing import GroupLadder
from .candidates import Candidate
from .simplex import simplex_max

INFEASIBLE = -math.inf


class _Budgets(dict):
    """Cell capacity (bits x ticks per second) memoised per (link, group)."""

    def __init__(self, net: Network, ladder: GroupLadder):
        super().__init__()
        self.net, self.ladder = net, ladder

    def __missing__(self, key):
        v = self[key] = capacity(self.net, self.ladder, key[0], key[1])
        return v

    def bits(self, cell: Cell) -> float:
        return self[cell[:2]] / TICKS_PER_SECOND

    def over(self, cell: Cell, bits: int) -> bool:
        return bits * TICKS_PER_SECOND > self[cell[:2]]


def solve_relaxation(
    candidates: Sequence[Candidate],
    fixed_zero: Collection[int],
    fixed_one: Collection[int],
    net: Network,
    ladder: GroupLadder,
    backend: str = "simplex",
    tighten: bool = False,
) -> tuple[float, dict[int, float]]:
    """LP upper bound on the number of acceptable demands given the fixings.

    Returns ``(-inf, {})`` when the fixings themselves are infeasible. With
    ``tighten`` a free candidate that cannot fit in the residual capacity on
    its own is held at zero, which keeps the bound valid for every integral
    completion while cutting fractional slack.
    """
    caps = _Budgets(net, ladder)
    zero = set(fixed_zero)
    one = set(fixed_one)
    if zero & one:
        raise ValueError("fixed_zero and fixed_one overlap")

    fixed_load: dict[Cell, int] = defaultdict(int)
    taken: set[str] = set()
    for i in sorted(one):
        cand = candidates[i]
        if cand.demand_id in taken:
            return INFEASIBLE, {}
        taken.add(cand.demand_id)
        for cell, bits in cand.load.items():
            fixed_load[cell] += bits
    for cell, bits in fixed_load.items():
        if caps.over(cell, bits):
            return INFEASIBLE, {}

    free: list[Candidate] = []
    for cand in candidates:
        if cand.index in zero or cand.index in one or cand.demand_id in taken:
            continue
        if tighten and any(caps.over(cell, fixed_load.get(cell, 0) + bits)
                           for cell, bits in cand.load.items()):
            continue
        free.append(cand)

    solution = {c.index: 0.0 for c in candidates}
    for i in one:
        solution[i] = 1.0
    if not free:
        return float(len(one)), solution

    col = {c.index: j for j, c in enumerate(free)}
    rows: list[dict[int, float]] = []
    rhs: list[float] = []

    by_demand: dict[str, list[int]] = defaultdict(list)
    for c in free:
        by_demand[c.demand_id].append(col[c.index])
    for cols in by_demand.values():
        rows.append({j: 1.0 for j in cols})
        rhs.append(1.0)

    by_cell: dict[Cell, dict[int, int]] = defaultdict(dict)
    for c in free:
        for cell, bits in c.load.items():
            by_cell[cell][col[c.index]] = bits
    for cell in sorted(by_cell):
        coefs = by_cell[cell]
        residual_bits = caps.bits(cell) - fixed_load.get(cell, 0)
        if sum(coefs.values()) <= residual_bits:
            continue  # cannot bind while every a <= 1
        scale = caps.bits(cell)
        rows.append({j: bits / scale for j, bits in coefs.items()})
        rhs.append(max(residual_bits / scale, 0.0))

    A = np.zeros((len(rows), len(free)))
    for r, row in enumerate(rows):
        for j, v in row.items():
            A[r, j] = v
    b = np.array(rhs)
    c = np.ones(len(free))

    if backend == "simplex":
        value, x = simplex_max(c, A, b)
    elif backend == "highs":
        from scipy.optimize import linprog

        res = linprog(-c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
        if res.status != 0:
            raise RuntimeError(f"HiGHS failed: {res.message}")
        value, x = float(-res.fun), res.x
    else:
        raise ValueError(f"unknown LP backend {backend!r}")

    for cand in free:
        solution[cand.index] = float(min(1.0, max(0.0, x[col[cand.index]])))
    return len(one) + value, solution
