import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from fdip.forwarding import trace_schedule
from fdip.ledger import (
    CapacityLedger,
    Footprint,
    LedgerError,
    budget,
    check_capacity,
    demand_footprint,
    headroom,
    recompute_cascade,
    utilization,
)
from fdip.network import Demand, Link, Network, Node, Path
from fdip.timing import GroupLadder

US = 1_000
E = ("a", "b")
F = ("b", "c")


@pytest.fixture
def ladder():
    return GroupLadder(1 * US, [10, 2], 4).with_hypercycle()


@pytest.fixture
def net():
    return Network([Node("a"), Node("b"), Node("c")],
                   [Link("a", "b", 0, 10**10), Link("b", "c", 0, 10**10)])


def fp(name, *entries):
    return Footprint(name, (name,), tuple(entries))


def test_demand_footprint(ladder, net):
    d = Demand("d", "a", "c", ladder.hypercycle, 0, 4000, 10**9)
    sched = trace_schedule(ladder, net, d, Path(("a", "b", "c")), 1)
    f = demand_footprint(ladder, net, sched, d)
    assert f.as_dict() == {(E, 1, sched.tx_cycles[0]): 4000, (F, 1, sched.tx_cycles[1]): 4000}
    one = Demand("e", "a", "b", ladder.hypercycle, 0, 4000, 10**9)
    s1 = trace_schedule(ladder, net, one, Path(("a", "b")), 2)
    f1 = demand_footprint(ladder, net, s1, one)
    assert f1.as_dict() == {(E, 2, s1.tx_cycles[0]): 4000}
    assert not set(f.as_dict()) & set(f1.as_dict())


def test_multiple_releases_per_hypercycle(ladder, net):
    d = Demand("d", "a", "b", ladder.hypercycle // 2, 0, 4000, 10**9)
    sched = trace_schedule(ladder, net, d, Path(("a", "b")), 1)
    assert len(demand_footprint(ladder, net, sched, d).entries) == 2


def test_commit_rollback_inverse(ladder):
    led = CapacityLedger(ladder)
    base = fp("x", ((E, 2, 1), 500))
    led.commit(base)
    before = led.copy()
    f = fp("y", ((E, 1, 2), 4000), ((F, 1, 5), 4000))
    led.commit(f).rollback(f)
    assert led == before and led.raw == before.raw and led.cascaded == before.cascaded
    with pytest.raises(LedgerError):
        led.commit(base)
    with pytest.raises(LedgerError):
        led.rollback(f)


def test_cascade_example(ladder):
    led = CapacityLedger(ladder)
    led.commit(fp("x", ((E, 1, 2), 4000)))
    assert led.load((E, 2, 1)) == 4000
    assert led.load((E, 1, 2)) == 4000
    assert led.raw == {(E, 1, 2): 4000}
    led.commit(fp("y", ((F, 1, 0), 10)))
    assert led.load((E, 1, 0)) == 0 and led.load((F, 2, 0)) == 10


def test_check_capacity_examples(ladder, net):
    assert budget(net, ladder, E, 1) == 100_000
    led = CapacityLedger(ladder).commit(fp("x", ((E, 1, 3), 4000)))
    assert check_capacity(led, net, ladder) == []
    led = CapacityLedger(ladder)
    for i in range(26):
        led.commit(fp(f"d{i}", ((E, 1, 3), 4000)))
    v = check_capacity(led, net, ladder)
    assert [(x.link, x.group, x.cycle, x.excess) for x in v] == [(E, 1, 3, Fraction(4000))]
    assert led.load((E, 2, 1)) == 104_000  # under the 200000-bit group-2 budget


def test_group_two_violation_only(ladder, net):
    led = CapacityLedger(ladder)
    led.commit(fp("slow", ((E, 2, 1), 150_000)))
    led.commit(fp("fast", ((E, 1, 2), 90_000)))
    v = check_capacity(led, net, ladder)
    assert [(x.group, x.cycle, x.excess) for x in v] == [(2, 1, Fraction(40_000))]


def test_headroom(ladder, net):
    led = CapacityLedger(ladder)
    assert headroom(led, net, ladder, E, 1, 0) == 1.0
    led.commit(fp("x", ((E, 1, 0), 4000)))
    assert headroom(led, net, ladder, E, 1, 0) == pytest.approx(0.96)
    led.commit(fp("y", ((E, 1, 1), 100_000)))
    assert headroom(led, net, ladder, E, 1, 1) == 0.0
    led.commit(fp("z", ((E, 1, 1), 1)))
    assert headroom(led, net, ladder, E, 1, 1) == 0.0


def test_fits_agrees_with_check(ladder, net):
    led = CapacityLedger(ladder).commit(fp("slow", ((E, 2, 1), 150_000)))
    ok = fp("a", ((E, 1, 2), 50_000))
    bad = fp("b", ((E, 1, 3), 50_001))
    assert led.fits(net, ok) and not led.fits(net, bad)
    assert check_capacity(led.copy().commit(ok), net, ladder) == []
    assert check_capacity(led.copy().commit(bad), net, ladder) != []


def test_utilization(ladder, net):
    led = CapacityLedger(ladder).commit(fp("x", ((E, 1, 0), 50_000)))
    rows = {(r["src"], r["dst"], r["group"]): r for r in utilization(led, net, ladder)}
    assert rows[("a", "b", 1)]["max_fill"] == 0.5
    assert rows[("a", "b", 1)]["mean_fill"] == pytest.approx(0.5 / 8)
    assert rows[("a", "b", 2)]["max_fill"] == 0.25
    assert rows[("b", "c", 2)]["max_fill"] == 0.0


ladders = st.builds(
    lambda ks: GroupLadder(1 * US, ks, 4).with_hypercycle(),
    st.lists(st.integers(1, 4), min_size=1, max_size=3),
)


@settings(max_examples=150, deadline=None)
@given(ladders, st.randoms(use_true_random=False), st.integers(1, 25))
def test_incremental_cascade_matches_recompute(lad, rng, n):
    links = [E, F]
    fps = []
    for i in range(n):
        entries = []
        for _ in range(rng.randint(1, 3)):
            m = rng.randint(1, lad.group_count)
            entries.append(((rng.choice(links), m, rng.randrange(lad.cycles_per_hypercycle(m))),
                            rng.randint(1, 5000)))
        fps.append(fp(f"f{i}", *entries))
    led = CapacityLedger(lad)
    live = []
    for _ in range(3 * n):
        if live and rng.random() < 0.4:
            f = live.pop(rng.randrange(len(live)))
            led.rollback(f)
        else:
            pending = [f for f in fps if f not in live]
            if not pending:
                continue
            f = rng.choice(pending)
            led.commit(f)
            live.append(f)
        assert led.cascaded == recompute_cascade(lad, led.raw)
        top = lad.group_count
        for link in links:
            total_raw = sum(b for (l, _, _), b in led.raw.items() if l == link)
            total_top = sum(b for (l, m, _), b in led.cascaded.items() if l == link and m == top)
            assert total_raw == total_top
            for c in range(lad.cycles_per_hypercycle(1)):
                assert led.load((link, 1, c)) == led.raw.get((link, 1, c), 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_commit_order_independence_and_monotonicity(seed):
    lad = GroupLadder(1 * US, [10, 2], 4).with_hypercycle()
    net = Network([Node("a"), Node("b"), Node("c")],
                  [Link("a", "b", 0, 10**10), Link("b", "c", 0, 10**10)])
    rng = random.Random(seed)
    fps = [fp(f"f{i}", ((rng.choice([E, F]), m, rng.randrange(lad.cycles_per_hypercycle(m))),
                        rng.randint(1, 80_000)))
           for i in range(8) for m in [rng.randint(1, 2)]]
    a = CapacityLedger(lad)
    for f in fps:
        a.commit(f)
    b = CapacityLedger(lad)
    for f in rng.sample(fps, len(fps)):
        b.commit(f)
    assert a == b
    assert check_capacity(a, net, lad) == check_capacity(b, net, lad)
    # dropping footprints never creates a violation
    before = {(v.link, v.group, v.cycle) for v in check_capacity(a, net, lad)}
    for f in rng.sample(fps, 3):
        a.rollback(f)
        after = {(v.link, v.group, v.cycle) for v in check_capacity(a, net, lad)}
        assert after <= before
        before = after
