"""Synthetic instances: an Atlanta-style backbone, the three industrial traffic
profiles, small random instances for exhaustive cross-checks, and a fixed
line path for cycle-length sweeps."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .network import Demand, Link, Network, Node
from .timing import GroupLadder

US = 1_000
MS = 1_000_000
GBPS = 1_000_000_000

# 15 nodes / 22 bidirectional trunks, modelled on the SNDlib "atlanta" instance.
ATLANTA_TRUNKS = [
    ("N1", "N2"), ("N1", "N3"), ("N1", "N4"),
    ("N2", "N3"), ("N2", "N5"),
    ("N3", "N6"), ("N4", "N6"), ("N4", "N7"),
    ("N5", "N8"), ("N6", "N9"), ("N7", "N9"), ("N7", "N10"),
    ("N8", "N9"), ("N8", "N11"),
    ("N9", "N12"), ("N10", "N12"), ("N10", "N13"),
    ("N11", "N12"), ("N11", "N14"),
    ("N12", "N15"), ("N13", "N15"), ("N14", "N15"),
]
ATLANTA_SOURCES = ("N2", "N10", "N14", "N15")
ATLANTA_SINK = "N1"


@dataclass(frozen=True)
class TrafficProfile:
    name: str
    period: int
    payload_bytes: int
    max_latency: int
    max_jitter: int | None


PROFILES = (
    TrafficProfile("type1", 100 * US, 750, 500 * US, 100 * US),
    TrafficProfile("type2", 500 * US, 1500, 900 * US, None),
    TrafficProfile("type3", 1 * MS, 6200, 2 * MS, None),
)


def atlanta(seed: int = 0, bandwidth: int = 10 * GBPS, delay_range=(60 * US, 70 * US),
            max_offset: int = 0) -> Network:
    """Each trunk becomes two independent directed links sharing one delay."""
    rng = random.Random(seed)
    nodes = [Node(f"N{i}", rng.randrange(max_offset) if max_offset else 0) for i in range(1, 16)]
    links = []
    for u, v in ATLANTA_TRUNKS:
        delay = rng.randint(*delay_range)
        links.append(Link(u, v, delay, bandwidth))
        links.append(Link(v, u, delay, bandwidth))
    return Network(nodes, links)


def profile_rows(per_type: int, seed: int = 0, sources=ATLANTA_SOURCES, sink=ATLANTA_SINK,
                delta0: int = 1 * US) -> list[dict]:
    """Demand-document rows: ``per_type`` flows of each profile, sources round-robin."""
    rng = random.Random(seed)
    rows = []
    for prof in PROFILES:
        for i in range(per_type):
            row = {
                "id": f"{prof.name}-{i:03d}",
                "src": sources[i % len(sources)],
                "dst": sink,
                "period_ns": prof.period,
                "arrival_cycle": rng.randrange(prof.period // delta0),
                "payload_bytes": prof.payload_bytes,
                "max_latency_ns": prof.max_latency,
            }
            if prof.max_jitter is not None:
                row["max_jitter_ns"] = prof.max_jitter
            rows.append(row)
    return rows


def line(delays=(65 * US, 66 * US, 70 * US), bandwidth: int = 10 * GBPS) -> Network:
    names = [chr(ord("A") + i) for i in range(len(delays) + 1)]
    nodes = [Node(n) for n in names]
    links = [Link(names[i], names[i + 1], d, bandwidth) for i, d in enumerate(delays)]
    return Network(nodes, links)


@dataclass
class SmallInstance:
    ladder: GroupLadder
    net: Network
    demands: list[Demand]
    hop_limit: int
    paths_per_demand: int


def random_small(seed: int, max_nodes: int = 6, max_demands: int = 5) -> SmallInstance:
    """Tiny contended instance; callers trim ``paths_per_demand`` to cap candidates."""
    rng = random.Random(seed)
    n = rng.randint(4, max_nodes)
    names = [f"v{i}" for i in range(n)]
    delta0 = 1 * US
    mults = [rng.choice([1, 2, 4])] + ([rng.choice([2, 4])] if rng.random() < 0.6 else [])
    ladder = GroupLadder(delta0, mults, queues_per_group=4)
    fastest = delta0 * mults[0]
    nodes = [Node(v, rng.randrange(fastest)) for v in names]
    # budget of the fastest group is 4 kbit; payloads of 1-3 kbit contend
    bandwidth = 4_000 * 1_000_000_000 // fastest
    edges = set()
    order = names[:]
    rng.shuffle(order)
    for a, b in zip(order, order[1:]):  # spanning chain keeps it connected
        edges.add((a, b))
        edges.add((b, a))
    for a in names:
        for b in names:
            if a != b and rng.random() < 0.15:
                edges.add((a, b))
    links = [Link(a, b, rng.randrange(0, 3 * fastest), bandwidth) for a, b in sorted(edges)]
    net = Network(nodes, links)
    ladder = ladder.with_hypercycle()
    demands = []
    for i in range(max_demands):
        s, t = rng.sample(names, 2)
        demands.append(Demand(
            id=f"d{i}", src=s, dst=t, period=ladder.hypercycle,
            arrival_cycle=rng.randrange(mults[0]),
            payload=rng.choice([1_500, 2_500, 3_000]),
            max_latency=rng.choice([40 * fastest, 200 * fastest]),
            max_jitter=rng.choice([None, 2 * fastest]),
        ))
    return SmallInstance(ladder, net, demands, hop_limit=3, paths_per_demand=3)


def trimmed_candidates(inst: SmallInstance, cap: int = 20):
    """Candidates for ``inst``, narrowing paths per demand until at most ``cap`` remain."""
    from .planner.candidates import build_candidates

    k = inst.paths_per_demand
    while True:
        cands = build_candidates(inst.ladder, inst.net, inst.demands, inst.hop_limit, k)
        if len(cands) <= cap or k == 1:
            break
        k -= 1
    if len(cands) > cap:
        # one path each can still exceed the cap with many groups; drop trailing demands
        keep: list[Demand] = []
        for d in inst.demands:
            trial = build_candidates(inst.ladder, inst.net, [*keep, d], inst.hop_limit, k)
            if len(trial) <= cap:
                keep.append(d)
        inst.demands = keep
        cands = build_candidates(inst.ladder, inst.net, keep, inst.hop_limit, k)
    inst.paths_per_demand = k
    return cands
