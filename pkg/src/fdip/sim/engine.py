"""Discrete-event simulation of gated multi-group output ports.

Each output port holds, per group, a ring of ``queues_per_group`` gated
queues rotating with the group's cycle length, plus one best-effort queue.
Selection is strict priority (group 1 first, best effort last) and a
higher-priority packet preempts a lower-priority one in transit without
overhead. Time runs on an integer grid fine enough that every per-bit
transmission time is whole.
"""

from __future__ import annotations

import hashlib
import heapq
import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

from ..forwarding import PathSchedule
from ..ledger import TICKS_PER_SECOND
from ..network import Demand, Network
from ..planner.assignment import Assignment, validate
from ..timing import GroupLadder
from .background import TrafficConfig, inject_background

# same-timestamp order: gates, then arrivals, then transmission completions
GATE, ARRIVAL, TX_DONE = 0, 1, 2


class SimulationError(ValueError):
    pass


class Packet:
    __slots__ = ("flow", "bits", "created", "group", "path", "hop", "remaining",
                 "sent_cycle", "hops", "release", "measured", "seq")

    def __init__(self, flow, bits, created, group, path, remaining, release=0, measured=True, seq=0):
        self.flow = flow
        self.bits = bits
        self.created = created
        self.group = group  # 0 for best effort
        self.path = path
        self.hop = 0
        self.remaining = remaining
        self.sent_cycle = -1
        self.hops: list[tuple[str, int, int]] = []  # (node, tx start, tx end)
        self.release = release
        self.measured = measured
        self.seq = seq


@dataclass
class FlowStats:
    flow: str
    group: int
    delivered: int = 0
    dropped: int = 0
    min_delay: Fraction | None = None
    max_delay: Fraction | None = None
    total_delay: Fraction = Fraction(0)
    violations: int = 0
    schedule_mismatches: int = 0
    samples: list[Fraction] = field(default_factory=list)
    worst_hops: list[tuple[str, Fraction, Fraction]] = field(default_factory=list)
    drop_reasons: dict[str, int] = field(default_factory=dict)

    @property
    def mean_delay(self) -> Fraction | None:
        return self.total_delay / self.delivered if self.delivered else None

    @property
    def jitter(self) -> Fraction:
        if self.min_delay is None:
            return Fraction(0)
        return self.max_delay - self.min_delay


@dataclass
class SimResult:
    flows: dict[str, FlowStats]
    trace_hash: str
    events: int
    be_delivered_bits: int
    be_max_delay: Fraction | None
    trace: list[tuple] | None = None


def _time_scale(net: Network) -> int:
    scale = 1
    for link in net.links.values():
        scale = math.lcm(scale, Fraction(TICKS_PER_SECOND, link.bandwidth).denominator)
    return scale


class _Port:
    def __init__(self, sim: "Simulator", link):
        self.sim = sim
        self.link = link
        self.key = link.key
        self.bit_time = sim.scale * TICKS_PER_SECOND // link.bandwidth
        self.offset = sim.net.nodes[link.src].clock_offset * sim.scale
        self.ts: dict[tuple[int, int], deque[Packet]] = {}
        self.be: deque[Packet] = deque()
        self.current: Packet | None = None
        self.cur_start = 0
        self.cur_level = 0
        self.cur_queue: tuple[int, int] | None = None
        self.token = 0

    def window(self, m: int, k: int) -> tuple[int, int]:
        dm = self.sim.lengths[m]
        start = self.offset + k * dm
        return start, start + dm

    def open_cycle(self, m: int, now: int) -> int:
        return (now - self.offset) // self.sim.lengths[m]

    def enqueue_ts(self, pkt: Packet, m: int, k: int, now: int) -> None:
        start, end = self.window(m, k)
        if now > start:
            self.sim.drop(pkt, now, "late", self.key[0])
            return
        if k - self.open_cycle(m, now) >= self.sim.ladder.queues_per_group:
            self.sim.drop(pkt, now, "queue-ring-overrun", self.key[0])
            return
        q = self.ts.get((m, k))
        if q is None:
            q = self.ts[(m, k)] = deque()
            self.sim.schedule(start, GATE, "", self._gate_open, m, k)
            self.sim.schedule(end, GATE, "", self._gate_close, m, k)
        q.append(pkt)

    def enqueue_be(self, now: int, pkt: Packet) -> None:
        self.be.append(pkt)
        self.dispatch(now)

    def _gate_open(self, now: int, m: int, k: int) -> None:
        self.sim.record(now, self.key[0], "gate-open", f"g{m}c{k}", 0)
        self.dispatch(now)

    def _gate_close(self, now: int, m: int, k: int) -> None:
        q = self.ts.pop((m, k), None)
        if self.cur_queue == (m, k) and now < self.cur_start + self.current.remaining:
            pkt = self.current
            self.current, self.cur_queue = None, None
            self.token += 1
            self.sim.drop(pkt, now, "window-overrun", self.key[0])
        if q:
            for pkt in q:
                self.sim.drop(pkt, now, "window-closed", self.key[0])
        self.dispatch(now)

    def _best(self, now: int):
        for m in range(1, self.sim.ladder.group_count + 1):
            k = self.open_cycle(m, now)
            q = self.ts.get((m, k))
            if q:
                _, end = self.window(m, k)
                # only start what can still finish inside the window
                if now + q[0].remaining <= end:
                    return m, (m, k), q
        if self.be:
            return None, None, self.be
        return None

    def dispatch(self, now: int) -> None:
        if self.current is not None and now >= self.cur_start + self.current.remaining:
            # finishing exactly now; its completion event has not been popped yet
            self._done(now, self.token)
            return
        best = self._best(now)
        if best is None:
            return
        m, qkey, q = best
        level = m if m is not None else math.inf
        if self.current is not None:
            if not self._preempts(level):
                return
            self._preempt(now)
        self._start(now, q.popleft(), level, qkey)

    def _preempts(self, level: float) -> bool:
        cur = self.cur_level
        if cur == math.inf:
            return level != math.inf
        return self.sim.config.preempt_express and level < cur

    def _preempt(self, now: int) -> None:
        pkt = self.current
        pkt.remaining -= now - self.cur_start
        self.sim.record(now, self.key[0], "preempt", pkt.flow, pkt.bits)
        if self.cur_queue is None:
            self.be.appendleft(pkt)
        else:
            self.ts[self.cur_queue].appendleft(pkt)
        self.current = None
        self.token += 1

    def _start(self, now: int, pkt: Packet, level, qkey) -> None:
        if qkey is not None:
            start, end = self.window(*qkey)
            # gate discipline: a timed packet only ever occupies its own window
            assert start <= now and now + pkt.remaining <= end, "gate discipline violated"
        self.current, self.cur_start, self.cur_level, self.cur_queue = pkt, now, level, qkey
        self.token += 1
        if len(pkt.hops) == pkt.hop:
            pkt.hops.append((self.key[0], now, -1))
        self.sim.record(now, self.key[0], "tx-start", pkt.flow, pkt.bits)
        self.sim.schedule(now + pkt.remaining, TX_DONE, pkt.flow, self._done, self.token)

    def _done(self, now: int, token: int) -> None:
        if token != self.token or self.current is None:
            return
        pkt, qkey = self.current, self.cur_queue
        self.current, self.cur_queue = None, None
        self.token += 1
        node, t0, _ = pkt.hops[pkt.hop]
        pkt.hops[pkt.hop] = (node, t0, now)
        self.sim.record(now, self.key[0], "tx-end", pkt.flow, pkt.bits)
        arrive = now + self.link.delay * self.sim.scale
        if qkey is None:
            self.sim.be_done(pkt, arrive)
        else:
            pkt.sent_cycle = qkey[1]
            pkt.hop += 1
            self.sim.schedule(arrive, ARRIVAL, pkt.flow, self.sim.arrive, pkt)
        self.dispatch(now)


class Simulator:
    def __init__(self, ladder: GroupLadder, net: Network, schedules: dict[str, tuple[Demand, PathSchedule]],
                 config: TrafficConfig):
        self.ladder = ladder
        self.net = net
        self.config = config
        self.schedules = schedules
        self.scale = _time_scale(net)
        self.lengths = [ladder.length(m) * self.scale for m in range(ladder.group_count + 1)]
        self.ports = {key: _Port(self, link) for key, link in sorted(net.links.items())}
        self.queue: list = []
        self.seq = itertools.count()
        self.hash = hashlib.sha256()
        self.events = 0
        self.trace: list[tuple] | None = [] if config.trace else None
        self.stats = {did: FlowStats(did, s.group) for did, (_, s) in schedules.items()}
        self.be_bits = 0
        self.be_max: int | None = None

    # -- plumbing ---------------------------------------------------------
    def schedule(self, t: int, kind: int, flow: str, fn, *args) -> None:
        heapq.heappush(self.queue, (t, kind, flow, next(self.seq), fn, args))

    def record(self, t: int, node: str, event: str, flow: str, bits: int) -> None:
        line = f"{t},{node},{event},{flow},{bits}\n"
        self.hash.update(line.encode())
        if self.trace is not None:
            self.trace.append((Fraction(t, self.scale), node, event, flow, bits))

    def drop(self, pkt: Packet, now: int, reason: str, node: str) -> None:
        self.record(now, node, f"drop-{reason}", pkt.flow, pkt.bits)
        if pkt.group == 0:
            return
        st = self.stats[pkt.flow]
        st.dropped += 1
        st.drop_reasons[reason] = st.drop_reasons.get(reason, 0) + 1

    def be_done(self, pkt: Packet, arrive: int) -> None:
        self.be_bits += pkt.bits
        d = arrive - pkt.created
        self.be_max = d if self.be_max is None else max(self.be_max, d)

    # -- time-sensitive packet life cycle ----------------------------------
    def release(self, now: int, pkt: Packet, target: int) -> None:
        self.record(now, pkt.path.nodes[0], "release", pkt.flow, pkt.bits)
        self.ports[pkt.path.links[0]].enqueue_ts(pkt, pkt.group, target, now)

    def arrive(self, now: int, pkt: Packet) -> None:
        node = pkt.path.nodes[pkt.hop]
        self.record(now, node, "arrive", pkt.flow, pkt.bits)
        if pkt.hop == pkt.path.hops:
            self._deliver(now, pkt)
            return
        upstream = self.net.links[pkt.path.links[pkt.hop - 1]]
        m = pkt.group
        dm = self.lengths[m]
        tau = upstream.delay * self.scale
        tau_hc = (self.net.nodes[upstream.dst].clock_offset - self.net.nodes[upstream.src].clock_offset) * self.scale
        mapped = ((pkt.sent_cycle + 1) * dm + tau - tau_hc) // dm
        target = mapped + 1
        _, sched = self.schedules[pkt.flow]
        releases = sched.release_cycles or (sched.tx_cycles,)
        n_m = self.ladder.cycles_per_hypercycle(m)
        if target % n_m != releases[pkt.release][pkt.hop]:
            self.stats[pkt.flow].schedule_mismatches += 1
        pkt.remaining = pkt.bits * self.ports[pkt.path.links[pkt.hop]].bit_time
        self.ports[pkt.path.links[pkt.hop]].enqueue_ts(pkt, m, target, now)

    def _deliver(self, now: int, pkt: Packet) -> None:
        if not pkt.measured:
            return
        st = self.stats[pkt.flow]
        delay = Fraction(now - pkt.created, self.scale)
        st.delivered += 1
        st.total_delay += delay
        st.samples.append(delay)
        if st.min_delay is None or delay < st.min_delay:
            st.min_delay = delay
        if st.max_delay is None or delay > st.max_delay:
            st.max_delay = delay
            st.worst_hops = [(n, Fraction(a, self.scale), Fraction(b, self.scale)) for n, a, b in pkt.hops]
        _, sched = self.schedules[pkt.flow]
        if delay > sched.e2e_bound:
            st.violations += 1

    # -- driver ------------------------------------------------------------
    def _seed_releases(self, horizon: int) -> None:
        hc = self.ladder.hypercycle
        d0 = self.ladder.delta0
        for did in sorted(self.schedules):
            demand, sched = self.schedules[did]
            m = sched.group
            dm = self.ladder.length(m)
            src = self.net.nodes[demand.src]
            first_link = self.net.links[sched.path.links[0]]
            bit_time = self.ports[first_link.key].bit_time
            per_hc = hc // demand.period
            for h in range(horizon):
                for k in range(per_hc):
                    unit = demand.arrival_cycle * d0 + k * demand.period + h * hc
                    t = (src.clock_offset + unit) * self.scale
                    target = unit // dm + 1  # next full group cycle at the source
                    pkt = Packet(did, demand.payload, t, m, sched.path, demand.payload * bit_time,
                                 release=k, measured=h >= 1, seq=h * per_hc + k)
                    self.schedule(t, ARRIVAL, did, self.release, pkt, target)

    def _seed_background(self, horizon: int) -> None:
        window = horizon * self.ladder.hypercycle
        size = self.config.packet_bits
        for burst in inject_background(self.net, self.config, window):
            port = self.ports[burst.link]
            t = burst.time * self.scale
            left = burst.bits
            while left > 0:
                bits = min(size, left)
                left -= bits
                pkt = Packet("be", bits, t, 0, None, bits * port.bit_time)
                self.schedule(t, ARRIVAL, "~be", port.enqueue_be, pkt)

    def run(self, horizon: int) -> SimResult:
        self._seed_releases(horizon)
        self._seed_background(horizon)
        while self.queue:
            t, _, _, _, fn, args = heapq.heappop(self.queue)
            self.events += 1
            fn(t, *args)
        if self.trace is not None:
            # simultaneous records on different ports have no causal order; make it canonical
            self.trace.sort(key=lambda r: r[:4])
        return SimResult(
            self.stats, self.hash.hexdigest(), self.events, self.be_bits,
            Fraction(self.be_max, self.scale) if self.be_max is not None else None, self.trace,
        )


def run(ladder: GroupLadder, net: Network, assignment: Assignment, config: TrafficConfig | None = None,
        horizon: int | None = None, seed: int | None = None, check: bool = True) -> SimResult:
    """Replay an assignment for ``horizon`` hypercycles (the first is warm-up).

    ``check=False`` skips the capacity pre-check so over-committed plans can
    be replayed on purpose.
    """
    cfg = config or TrafficConfig()
    if seed is not None:
        cfg = TrafficConfig(**{**cfg.__dict__, "seed": seed})
    horizon = cfg.horizon if horizon is None else horizon
    if horizon < 2:
        raise SimulationError("horizon must cover at least two hypercycles (warm-up + measurement)")
    schedules = {}
    for did, cand in assignment.accepted.items():
        for link in cand.path.links:
            if link not in net.links:
                raise SimulationError(f"flow {did}: unknown link {link}")
        schedules[did] = (cand.demand, cand.schedule)
    if check:
        violations = validate(assignment, net, ladder)
        if violations:
            raise SimulationError(f"assignment over-commits capacity: {violations[:3]}")
    return Simulator(ladder, net, schedules, cfg).run(horizon)


def ts_samples(result: SimResult) -> dict[str, list[Fraction]]:
    return {fid: list(st.samples) for fid, st in sorted(result.flows.items())}
