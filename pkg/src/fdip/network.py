"""Topology and demand ingestion, plus hop-bounded path enumeration."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path as FsPath
from typing import Any, Iterable, Mapping

import networkx as nx
import yaml

from .timing import GroupLadder


class NetworkError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: str
    clock_offset: int = 0


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    delay: int
    bandwidth: int

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class Demand:
    id: str
    src: str
    dst: str
    period: int
    arrival_cycle: int
    payload: int  # bits
    max_latency: int
    max_jitter: int | None = None  # None: unbounded
    value: float = 1.0


@dataclass(frozen=True)
class Path:
    nodes: tuple[str, ...]

    @property
    def hops(self) -> int:
        return len(self.nodes) - 1

    @property
    def links(self) -> tuple[tuple[str, str], ...]:
        return tuple(zip(self.nodes[:-1], self.nodes[1:]))

    def __str__(self) -> str:
        return "-".join(self.nodes)


class Network:
    """Directed graph of nodes with clock phases and links with delay/bandwidth."""

    def __init__(self, nodes: Iterable[Node], links: Iterable[Link]):
        self.nodes: dict[str, Node] = {}
        for node in nodes:
            if node.id in self.nodes:
                raise NetworkError(f"duplicate node id {node.id!r}")
            if node.clock_offset < 0:
                raise NetworkError(f"node {node.id!r}: clock offset must be >= 0")
            self.nodes[node.id] = node
        self.links: dict[tuple[str, str], Link] = {}
        for link in links:
            for end in (link.src, link.dst):
                if end not in self.nodes:
                    raise NetworkError(f"link {link.src}->{link.dst} references unknown node {end!r}")
            if link.src == link.dst:
                raise NetworkError(f"self-loop on {link.src!r}")
            if link.key in self.links:
                raise NetworkError(f"duplicate link {link.src}->{link.dst}")
            if link.delay < 0:
                raise NetworkError(f"link {link.src}->{link.dst}: negative delay")
            if link.bandwidth <= 0:
                raise NetworkError(f"link {link.src}->{link.dst}: bandwidth must be positive")
            self.links[link.key] = link

    def __repr__(self) -> str:
        return f"Network(|V|={len(self.nodes)}, |E|={len(self.links)})"

    @cached_property
    def graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(sorted(self.nodes))
        for (u, v), link in sorted(self.links.items()):
            g.add_edge(u, v, delay=link.delay)
        return g

    def link(self, key: tuple[str, str]) -> Link:
        try:
            return self.links[key]
        except KeyError:
            raise NetworkError(f"unknown link {key[0]}->{key[1]}") from None

    def check_offsets(self, ladder: GroupLadder) -> None:
        fastest = ladder.length(1)
        for node in self.nodes.values():
            if not 0 <= node.clock_offset < fastest:
                raise NetworkError(
                    f"node {node.id!r}: clock offset {node.clock_offset} outside [0, {fastest})"
                )

    def path_delay(self, path: Path) -> int:
        return sum(self.link(e).delay for e in path.links)


def hypercycle_offset(net: Network, link: tuple[str, str] | Link, m: int | None = None) -> int:
    """Phase of the downstream node's hypercycle relative to the upstream one.

    Built from per-node clock phases, so it is the same for every group ``m``.
    """
    key = link.key if isinstance(link, Link) else link
    net.link(key)
    return net.nodes[key[1]].clock_offset - net.nodes[key[0]].clock_offset


def enumerate_paths(net: Network, s: str, t: str, hop_limit: int, limit: int | None = 16) -> list[Path]:
    """Simple paths of at most ``hop_limit`` hops, ordered by (hops, delay, node ids)."""
    for n in (s, t):
        if n not in net.nodes:
            raise NetworkError(f"unknown node {n!r}")
    if s == t or hop_limit < 1:
        return []
    found = [Path(tuple(p)) for p in nx.all_simple_paths(net.graph, s, t, cutoff=hop_limit)]
    found.sort(key=lambda p: (p.hops, net.path_delay(p), p.nodes))
    return found[:limit] if limit is not None else found


# -- documents ---------------------------------------------------------------

def _read_doc(source: str | FsPath | Mapping[str, Any]) -> Mapping[str, Any]:
    if isinstance(source, Mapping):
        return source
    with open(source) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, Mapping):
        raise NetworkError(f"{source}: expected a mapping at top level")
    return doc


def load_topology(source: str | FsPath | Mapping[str, Any], ladder: GroupLadder | None = None) -> Network:
    doc = _read_doc(source)
    try:
        nodes = [Node(str(n["id"]), int(n.get("clock_offset_ns", 0))) for n in doc["nodes"]]
        links = [
            Link(str(e["src"]), str(e["dst"]), int(e["delay_ns"]), int(e["bandwidth_bps"]))
            for e in doc["links"]
        ]
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed topology document: {exc}") from exc
    net = Network(nodes, links)
    if ladder is not None:
        net.check_offsets(ladder)
    return net


def dump_topology(net: Network) -> dict[str, Any]:
    return {
        "nodes": [{"id": n.id, "clock_offset_ns": n.clock_offset} for n in net.nodes.values()],
        "links": [
            {"src": e.src, "dst": e.dst, "delay_ns": e.delay, "bandwidth_bps": e.bandwidth}
            for e in net.links.values()
        ],
    }


def _rows(doc: Mapping[str, Any] | list) -> list[Mapping[str, Any]]:
    if isinstance(doc, Mapping):
        return list(doc.get("demands", []))
    return list(doc)


def demand_periods(source: str | FsPath | Mapping[str, Any] | list) -> set[int]:
    """Explicit periods in a demand document (needed before the hypercycle exists)."""
    doc = source if isinstance(source, list) else _read_doc(source)
    return {int(r["period_ns"]) for r in _rows(doc) if r.get("period_ns") is not None}


def load_demands(
    source: str | FsPath | Mapping[str, Any] | list,
    ladder: GroupLadder,
    net: Network | None = None,
) -> list[Demand]:
    doc = source if isinstance(source, list) else _read_doc(source)
    hc = ladder.hypercycle
    if not hc:
        raise NetworkError("ladder hypercycle must be built before loading demands")
    out: list[Demand] = []
    seen: set[str] = set()
    for row in _rows(doc):
        try:
            did = str(row["id"])
            if "payload_bits" in row:
                payload = int(row["payload_bits"])
            else:
                payload = int(row["payload_bytes"]) * 8
            period = int(row["period_ns"]) if row.get("period_ns") is not None else hc
            jitter = row.get("max_jitter_ns")
            d = Demand(
                id=did,
                src=str(row["src"]),
                dst=str(row["dst"]),
                period=period,
                arrival_cycle=int(row.get("arrival_cycle", 0)),
                payload=payload,
                max_latency=int(row["max_latency_ns"]),
                max_jitter=int(jitter) if jitter is not None else None,
                value=float(row.get("value", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise NetworkError(f"malformed demand row {row!r}: {exc}") from exc
        if did in seen:
            raise NetworkError(f"duplicate demand id {did!r}")
        if did == "be":
            raise NetworkError("demand id 'be' is reserved for background traffic")
        seen.add(did)
        if d.src == d.dst:
            raise NetworkError(f"demand {did}: source equals sink")
        if d.payload <= 0:
            raise NetworkError(f"demand {did}: payload must be positive")
        if d.max_latency <= 0:
            raise NetworkError(f"demand {did}: max latency must be positive")
        if d.period <= 0 or hc % d.period:
            raise NetworkError(f"demand {did}: period {d.period} does not divide hypercycle {hc}")
        if d.period % ladder.delta0:
            raise NetworkError(f"demand {did}: period is not a whole number of unitary cycles")
        if not 0 <= d.arrival_cycle < d.period // ladder.delta0:
            raise NetworkError(f"demand {did}: arrival cycle outside its first period")
        if net is not None and (d.src not in net.nodes or d.dst not in net.nodes):
            raise NetworkError(f"demand {did}: unknown endpoint")
        out.append(d)
    return out


def dump_demands(demands: Iterable[Demand]) -> list[dict[str, Any]]:
    rows = []
    for d in demands:
        row: dict[str, Any] = {"id": d.id, "src": d.src, "dst": d.dst, "period_ns": d.period,
                               "arrival_cycle": d.arrival_cycle}
        if d.payload % 8 == 0:
            row["payload_bytes"] = d.payload // 8
        else:
            row["payload_bits"] = d.payload
        row["max_latency_ns"] = d.max_latency
        if d.max_jitter is not None:
            row["max_jitter_ns"] = d.max_jitter
        if d.value != 1.0:
            row["value"] = d.value
        rows.append(row)
    return rows
