import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from fdip.instances import random_small, trimmed_candidates
from fdip.ledger import CapacityLedger, Footprint, check_capacity
from fdip.network import Demand, Link, Network, Node
from fdip.planner import (
    INFEASIBLE,
    Assignment,
    OracleCapExceeded,
    PlannerConfig,
    brute_force_oracle,
    branch_and_bound,
    build_candidates,
    from_document,
    greedy_baseline,
    plan,
    priority,
    simplex_max,
    solve_relaxation,
    validate,
)
from fdip.timing import GroupLadder

US = 1_000


def _pair_net(bits_per_cycle, cycle, extra=()):
    bw = bits_per_cycle * 1_000_000_000 // cycle
    names = {"a", "b", *[n for e in extra for n in e]}
    return Network([Node(n) for n in sorted(names)],
                   [Link("a", "b", 0, bw), *[Link(u, v, 0, bw) for u, v in extra]])


def _demand(i, src="a", dst="b", payload=2000, hc=None, latency=10**9, jitter=None, value=1.0):
    return Demand(f"d{i}", src, dst, hc, 0, payload, latency, jitter, value)


# ---- candidates -------------------------------------------------------------------------

def test_period_filter_keeps_fast_group_only():
    lad = GroupLadder(1 * US, [10, 6], 4).with_hypercycle({100 * US})
    net = _pair_net(10**6, 10 * US)
    d = Demand("d", "a", "b", 100 * US, 0, 1000, 10**9, 100 * US)
    assert {c.group for c in build_candidates(lad, net, [d], 3)} == {1}


def test_serialization_filter():
    lad = GroupLadder(1 * US, [2], 4).with_hypercycle({1000 * US})
    net = _pair_net(20_000, 2 * US)  # 10 Gbps
    assert net.links[("a", "b")].bandwidth == 10**10
    big = Demand("t3", "a", "b", 1000 * US, 0, 49_600, 2000 * US)
    assert build_candidates(lad, net, [big], 3) == []
    fdip = GroupLadder(1 * US, [2, 8], 4).with_hypercycle({1000 * US})
    assert {c.group for c in build_candidates(fdip, net, [big], 3)} == {2}


def test_disconnected_demand_has_no_candidates():
    lad = GroupLadder(1 * US, [2], 4).with_hypercycle()
    net = Network([Node("a"), Node("b"), Node("z")], [Link("a", "b", 0, 10**10)])
    assert build_candidates(lad, net, [Demand("d", "a", "z", lad.hypercycle, 0, 8, 10**9)], 3) == []


def test_candidate_order_is_deterministic():
    inst = random_small(4)
    a = build_candidates(inst.ladder, inst.net, inst.demands, 3, 3)
    b = build_candidates(inst.ladder, inst.net, inst.demands, 3, 3)
    assert [c.label for c in a] == [c.label for c in b]
    assert [c.index for c in a] == list(range(len(a)))


# ---- priority ---------------------------------------------------------------------------

def _two_hop():
    lad = GroupLadder(1 * US, [10], 4).with_hypercycle()
    net = Network([Node("a"), Node("b"), Node("c")],
                  [Link("a", "b", 0, 10**10), Link("b", "c", 0, 10**10)])
    return lad, net


def test_priority_examples():
    lad, net = _two_hop()
    d = Demand("d", "a", "c", lad.hypercycle, 0, 4000, 10**9, value=1.0)
    (cand,) = build_candidates(lad, net, [d], 2)
    led = CapacityLedger(lad)
    assert priority(cand, led, net) == 3.0
    first = ((("a", "b"), 1, cand.schedule.tx_cycles[0]), 100_000)
    led.commit(Footprint("x", ("x",), (first,)))
    assert priority(cand, led, net) == 2.0
    heavy = Demand("h", "a", "c", lad.hypercycle, 0, 4000, 10**9, value=7.5)
    (hc,) = build_candidates(lad, net, [heavy], 2)
    assert priority(hc, led, net, (1, 0, 1)) == 7.5
    assert priority(hc, CapacityLedger(lad), net, (1, 0, 1)) == 7.5
    assert priority(hc, CapacityLedger(lad), net, (2, 3, 2)) == 15 + 6


# ---- LP ---------------------------------------------------------------------------------

def test_simplex_against_highs_random():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m, n = rng.integers(1, 8), rng.integers(1, 8)
        A = rng.integers(0, 4, size=(m, n)).astype(float)
        A[rng.random((m, n)) < 0.3] = 0
        A = np.vstack([A, np.ones((1, n))])  # keeps it bounded
        b = rng.integers(0, 6, size=m + 1).astype(float)
        c = rng.integers(0, 5, size=n).astype(float)
        value, x = simplex_max(c, A, b)
        ref = linprog(-c, A_ub=A, b_ub=b, bounds=(0, None), method="highs")
        assert value == pytest.approx(-ref.fun, abs=1e-8)
        assert np.all(A @ x <= b + 1e-8) and np.all(x >= -1e-12)
        assert c @ x == pytest.approx(value, abs=1e-8)


def test_simplex_degenerate_cycle_example():
    # the classic Beale example cycles under the largest-coefficient rule
    c = [0.75, -150, 0.02, -6]
    A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
    value, _ = simplex_max(c, A, [0, 0, 1])
    assert value == pytest.approx(0.05)


def _shared_cell(n=2, tighten=False):
    lad = GroupLadder(1 * US, [10], 4).with_hypercycle()
    net = _pair_net(3000, 10 * US)
    ds = [_demand(i, hc=lad.hypercycle) for i in range(n)]
    return lad, net, build_candidates(lad, net, ds, 1)


def test_relaxation_fractional_bound():
    lad, net, cands = _shared_cell()
    assert len(cands) == 2
    bound, x = solve_relaxation(cands, (), (), net, lad)
    assert bound == pytest.approx(1.5)
    assert sum(x.values()) == pytest.approx(1.5)
    hb, _ = solve_relaxation(cands, (), (), net, lad, backend="highs")
    assert hb == pytest.approx(1.5)
    assert solve_relaxation(cands, (), (0,), net, lad)[0] == pytest.approx(1.5)  # 1000 of 2000 bits left
    assert solve_relaxation(cands, (), (0,), net, lad, tighten=True)[0] == 1.0


def test_relaxation_infeasible_fixing():
    lad, net, cands = _shared_cell()
    assert solve_relaxation(cands, (), (0, 1), net, lad) == (INFEASIBLE, {})
    with pytest.raises(ValueError):
        solve_relaxation(cands, (0,), (0,), net, lad)


def test_relaxation_uncontended_equals_demand_count():
    lad = GroupLadder(1 * US, [10], 4).with_hypercycle()
    extra = [("a", "c"), ("c", "b"), ("a", "d")]
    net = _pair_net(10**6, 10 * US, extra)
    ds = [_demand(i, dst=dst, hc=lad.hypercycle) for i, dst in enumerate("bcdb")]
    cands = build_candidates(lad, net, ds, 3)
    bound, _ = solve_relaxation(cands, (), (), net, lad)
    assert bound == pytest.approx(4)


# ---- search -----------------------------------------------------------------------------

def test_bnb_contended_pair():
    lad, net, cands = _shared_cell()
    res = branch_and_bound(cands, lad, net, PlannerConfig(seed_incumbent=False, tighten=False))
    assert res.objective == 1 == brute_force_oracle(cands, lad, net).objective
    again = branch_and_bound(cands, lad, net, PlannerConfig(seed_incumbent=False, tighten=False))
    assert list(again.accepted) == list(res.accepted)


def test_bnb_disjoint_demands_need_no_pruning():
    lad = GroupLadder(1 * US, [10], 4).with_hypercycle()
    net = _pair_net(3000, 10 * US, [("c", "d"), ("e", "f")])
    ds = [_demand(0, hc=lad.hypercycle), _demand(1, "c", "d", hc=lad.hypercycle),
          _demand(2, "e", "f", hc=lad.hypercycle)]
    cands = build_candidates(lad, net, ds, 2)
    res = branch_and_bound(cands, lad, net, PlannerConfig(seed_incumbent=False))
    assert res.objective == 3
    assert res.stats["pruned_bound"] == 0 and res.stats["nodes_explored"] == 0


def test_empty_candidates():
    lad = GroupLadder(1 * US, [10], 4).with_hypercycle()
    net = _pair_net(3000, 10 * US)
    assert branch_and_bound([], lad, net).objective == 0
    assert greedy_baseline([], lad, net).objective == 0
    assert brute_force_oracle([], lad, net).objective == 0


def test_oracle_rejects_overfull_subset():
    lad = GroupLadder(1 * US, [10], 4).with_hypercycle()
    net = _pair_net(100_000, 10 * US)
    ds = [_demand(i, payload=4000, hc=lad.hypercycle) for i in range(26)]
    cands = build_candidates(lad, net, ds, 1)
    assert len(cands) == 26
    res = brute_force_oracle(cands, lad, net, cap=26)
    assert res.objective == 25
    assert check_capacity(res.ledger(lad), net, lad) == []
    with pytest.raises(OracleCapExceeded):
        brute_force_oracle(cands, lad, net)


def test_greedy_tie_break_is_deterministic():
    lad, net, cands = _shared_cell()
    a = greedy_baseline(cands, lad, net)
    assert list(a.accepted) == ["d0"]
    assert greedy_baseline(cands, lad, net).accepted == a.accepted


def _arc_instance(seed):
    import random
    rng = random.Random(seed)
    n = rng.randint(4, 6)
    names = [f"v{i}" for i in range(n)]
    arcs = [(u, v) for u in names for v in names if u != v and rng.random() < 0.45]
    return names, arcs


def test_k_disjoint_paths_against_max_flow():
    # 4 unitary cycles per hypercycle and tau = 2 cycles: every hop of every path
    # transmits in the same cycle, so each arc holds exactly one payload
    lad = GroupLadder(1 * US, [1], 4).with_hypercycle()
    assert lad.cycles_per_hypercycle(1) == 4
    checked = 0
    for seed in range(60):
        names, arcs = _arc_instance(seed)
        s, t = names[0], names[-1]
        g = nx.DiGraph()
        g.add_nodes_from(names)
        g.add_edges_from(arcs, capacity=1)
        flow = nx.maximum_flow_value(g, s, t)
        k = sum(1 for a in arcs if a[0] == s)
        if flow == 0 or k == 0:
            continue
        net = Network([Node(v) for v in names], [Link(u, v, 2 * US, 10**9) for u, v in arcs])
        ds = [Demand(f"k{i}", s, t, lad.hypercycle, 0, 1000, 10**9) for i in range(k)]
        cands = build_candidates(lad, net, ds, len(names) - 1, None)
        if len(cands) > 22:
            continue
        assert len({c.schedule.tx_cycles[0] for c in cands}) == 1
        assert all(len(set(c.schedule.tx_cycles)) == 1 for c in cands)
        oracle = brute_force_oracle(cands, lad, net)
        assert oracle.objective == flow
        assert branch_and_bound(cands, lad, net).objective == flow
        checked += 1
    assert checked >= 10


@pytest.mark.parametrize("seed", range(25))
def test_bnb_matches_oracle(seed):
    inst = random_small(seed)
    cands = trimmed_candidates(inst)
    oracle = brute_force_oracle(cands, inst.ladder, inst.net)
    res = branch_and_bound(cands, inst.ladder, inst.net)
    plain = branch_and_bound(cands, inst.ladder, inst.net,
                             PlannerConfig(tighten=False, seed_incumbent=False))
    worst = branch_and_bound(cands, inst.ladder, inst.net, PlannerConfig(node_selection="worst"))
    assert res.objective == plain.objective == worst.objective == oracle.objective
    assert greedy_baseline(cands, inst.ladder, inst.net).objective <= res.objective
    inc = res.stats["incumbents"]
    assert inc == sorted(inc)
    assert validate(res, inst.net, inst.ladder) == []


@pytest.mark.parametrize("seed", range(8))
def test_bound_validity_at_every_node(seed):
    inst = random_small(100 + seed)
    cands = trimmed_candidates(inst, cap=14)
    seen = []

    def observe(zero, one, bound):
        seen.append((zero, one, bound))

    for tighten in (False, True):
        branch_and_bound(cands, inst.ladder, inst.net,
                         PlannerConfig(tighten=tighten, seed_incumbent=False), observer=observe)
    assert seen
    for zero, one, bound in seen:
        best = brute_force_oracle(cands, inst.ladder, inst.net, fixed_zero=zero, fixed_one=one)
        if best is None:
            assert bound == INFEASIBLE
        else:
            assert bound >= best.objective - 1e-9


def test_node_budget_reports_gap():
    inst = random_small(7, max_demands=5)
    cands = trimmed_candidates(inst)
    res = branch_and_bound(cands, inst.ladder, inst.net,
                           PlannerConfig(max_nodes=0, seed_incumbent=False))
    st_ = res.stats
    assert st_["upper_bound"] >= res.objective
    assert st_["gap"] == st_["upper_bound"] - res.objective
    assert validate(res, inst.net, inst.ladder) == []


def test_fdip_dominates_single_group():
    for seed in range(15):
        inst = random_small(200 + seed)
        k1 = inst.ladder.multipliers[0]
        fdip = GroupLadder(inst.ladder.delta0, [k1, 4], 4).with_hypercycle()
        dip = GroupLadder(inst.ladder.delta0, [k1], 4).with_hypercycle({fdip.hypercycle})
        assert dip.hypercycle == fdip.hypercycle
        demands = [Demand(d.id, d.src, d.dst, fdip.hypercycle, d.arrival_cycle, d.payload,
                          d.max_latency, d.max_jitter) for d in inst.demands]
        c_dip = build_candidates(dip, inst.net, demands, 3, 2)
        c_fdip = build_candidates(fdip, inst.net, demands, 3, 2)
        a = branch_and_bound(c_dip, dip, inst.net)
        b = branch_and_bound(c_fdip, fdip, inst.net)
        assert b.objective >= a.objective


def test_plan_modes_and_document_roundtrip():
    inst = random_small(3)
    cands = trimmed_candidates(inst)
    for mode in ("bnb", "greedy", "oracle"):
        res = plan(cands, inst.ladder, inst.net, PlannerConfig(mode=mode))
        doc = res.to_document(inst.demands)
        back = from_document(doc, inst.demands, inst.net, inst.ladder)
        assert {k: (v.path, v.group, v.schedule) for k, v in back.accepted.items()} == \
            {k: (v.path, v.group, v.schedule) for k, v in res.accepted.items()}
    with pytest.raises(ValueError):
        plan(cands, inst.ladder, inst.net, PlannerConfig(mode="nope"))
    assert isinstance(plan([], inst.ladder, inst.net, PlannerConfig(mode="oracle")), Assignment)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_single_threaded_search_is_reproducible(seed):
    inst = random_small(seed)
    cands = trimmed_candidates(inst, cap=12)
    a = branch_and_bound(cands, inst.ladder, inst.net)
    b = branch_and_bound(cands, inst.ladder, inst.net)
    assert a.to_document(inst.demands) == b.to_document(inst.demands)

