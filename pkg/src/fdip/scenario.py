"""Scenario documents: one YAML file naming the ladder, topology, demands,
planner settings, background traffic and output directory.

Topology and demands are either file paths (relative to the scenario file)
or inline generator specs, e.g. ``{generator: atlanta, seed: 3}``.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path as FsPath
from typing import Any, Mapping

import yaml

from . import instances
from .network import Demand, Network, NetworkError, demand_periods, dump_demands, dump_topology, load_demands, load_topology
from .planner import PlannerConfig
from .sim import TrafficConfig
from .timing import GroupLadder, LadderError


class ScenarioError(ValueError):
    pass


PLANNER_KEYS = {
    "mode", "hop_limit", "paths_per_demand", "weights", "max_nodes", "time_budget",
    "node_selection", "lp_backend", "tighten", "seed_incumbent", "lp_rounding", "oracle_cap",
}
TRAFFIC_KEYS = {"be_load", "burst_bits", "packet_bits", "horizon", "preempt_express", "trace", "links"}


@dataclass
class Scenario:
    ladder: GroupLadder
    net: Network
    demands: list[Demand]
    planner: PlannerConfig
    traffic: TrafficConfig
    out: FsPath
    seed: int
    doc: dict[str, Any] = field(default_factory=dict, repr=False)  # resolved document

    @property
    def plan_hash(self) -> str:
        """Digest of everything the plan depends on (traffic settings excluded)."""
        payload = {k: self.doc[k] for k in ("ladder", "topology", "demands", "planner", "seed")}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


def _read(path: FsPath) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path} is not valid YAML: {exc}") from exc


def _topology_doc(spec: Any, base: FsPath, seed: int) -> dict[str, Any]:
    if isinstance(spec, Mapping) and "generator" in spec:
        gen = spec["generator"]
        if gen == "atlanta":
            net = instances.atlanta(
                seed=int(spec.get("seed", seed)),
                bandwidth=int(spec.get("bandwidth_bps", instances.GBPS * 10)),
                delay_range=tuple(spec.get("delay_range_ns", (60 * instances.US, 70 * instances.US))),
                max_offset=int(spec.get("max_offset_ns", 0)),
            )
        elif gen == "line":
            net = instances.line(
                delays=tuple(spec.get("delays_ns", (65 * instances.US, 66 * instances.US, 70 * instances.US))),
                bandwidth=int(spec.get("bandwidth_bps", instances.GBPS * 10)),
            )
        else:
            raise ScenarioError(f"unknown topology generator {gen!r}")
        return dump_topology(net)
    if isinstance(spec, Mapping):
        return dict(spec)
    if isinstance(spec, str):
        doc = _read(base / spec)
        if not isinstance(doc, Mapping):
            raise ScenarioError(f"topology file {spec} must hold a mapping")
        return dict(doc)
    raise ScenarioError("scenario needs a 'topology' path or generator spec")


def _demand_rows(spec: Any, base: FsPath, seed: int, delta0: int) -> list[dict[str, Any]]:
    if isinstance(spec, Mapping) and "generator" in spec:
        gen = spec["generator"]
        if gen != "profiles":
            raise ScenarioError(f"unknown demand generator {gen!r}")
        rows = instances.profile_rows(
            int(spec.get("per_type", 60)), seed=int(spec.get("seed", seed)),
            sources=tuple(spec.get("sources", instances.ATLANTA_SOURCES)),
            sink=spec.get("sink", instances.ATLANTA_SINK), delta0=delta0,
        )
        types = spec.get("types")
        if types is not None:
            rows = [r for r in rows if r["id"].split("-")[0] in set(types)]
        return rows
    if isinstance(spec, list):
        return [dict(r) for r in spec]
    if isinstance(spec, str):
        doc = _read(base / spec)
        if isinstance(doc, Mapping):
            doc = doc.get("demands", [])
        if not isinstance(doc, list):
            raise ScenarioError(f"demand file {spec} must hold a list of demands")
        return [dict(r) for r in doc]
    raise ScenarioError("scenario needs a 'demands' path or generator spec")


def _planner(doc: Mapping[str, Any]) -> PlannerConfig:
    unknown = set(doc) - PLANNER_KEYS
    if unknown:
        raise ScenarioError(f"unknown planner keys: {sorted(unknown)}")
    cfg = dict(doc)
    if "weights" in cfg:
        cfg["weights"] = tuple(float(w) for w in cfg["weights"])
    if cfg.get("mode", "bnb") not in ("bnb", "greedy", "oracle"):
        raise ScenarioError(f"planner mode must be bnb, greedy or oracle, got {cfg['mode']!r}")
    return PlannerConfig(**cfg)


def _traffic(doc: Mapping[str, Any], seed: int) -> TrafficConfig:
    unknown = set(doc) - TRAFFIC_KEYS
    if unknown:
        raise ScenarioError(f"unknown traffic keys: {sorted(unknown)}")
    cfg = dict(doc)
    if isinstance(cfg.get("be_load"), Mapping):
        cfg["be_load"] = {tuple(k.split("->")): float(v) for k, v in cfg["be_load"].items()}
    if "links" in cfg and cfg["links"] is not None:
        cfg["links"] = tuple(tuple(e) for e in cfg["links"])
    return TrafficConfig(seed=seed, **cfg)


def resolve(doc: Mapping[str, Any], base: FsPath = FsPath("."), overrides: Mapping[str, Any] | None = None) -> Scenario:
    """Build a scenario from an already-parsed document.

    ``overrides`` may carry ``seed``, ``out`` and dotted keys such as
    ``planner.mode`` or ``traffic.be_load``.
    """
    doc = copy.deepcopy(dict(doc))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        head, _, tail = key.partition(".")
        if tail:
            doc.setdefault(head, {})[tail] = value
        else:
            doc[head] = value

    seed = int(doc.get("seed", 0))
    lad = doc.get("ladder") or {}
    try:
        ladder = GroupLadder(
            int(lad.get("delta0_ns", 1000)),
            [int(k) for k in lad.get("multipliers", [2])],
            int(lad.get("queues_per_group", 4)),
            int(lad.get("hypercycle_factor", 1)),
        )
        topo = _topology_doc(doc.get("topology"), base, seed)
        rows = _demand_rows(doc.get("demands"), base, seed, ladder.delta0)
        ladder = ladder.with_hypercycle(demand_periods(rows))
        net = load_topology(topo, ladder)
        demands = load_demands(rows, ladder, net)
    except (LadderError, NetworkError) as exc:
        raise ScenarioError(str(exc)) from exc
    except (TypeError, ValueError, KeyError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario: {exc}") from exc

    planner = _planner(doc.get("planner") or {})
    traffic = _traffic(doc.get("traffic") or {}, seed)
    out = FsPath(doc.get("output", "out"))
    if not out.is_absolute():
        out = base / out

    resolved = {
        "ladder": {"delta0_ns": ladder.delta0, "multipliers": list(ladder.multipliers),
                   "queues_per_group": ladder.queues_per_group, "hypercycle_ns": ladder.hypercycle},
        "topology": topo,
        "demands": dump_demands(demands),
        "planner": {k: (list(v) if isinstance(v, tuple) else v) for k, v in planner.__dict__.items()},
        "seed": seed,
    }
    return Scenario(ladder, net, demands, planner, traffic, out, seed, resolved)


def load_scenario(path: str | FsPath, overrides: Mapping[str, Any] | None = None) -> Scenario:
    path = FsPath(path)
    doc = _read(path)
    if not isinstance(doc, Mapping):
        raise ScenarioError(f"{path} must hold a mapping")
    return resolve(doc, path.parent, overrides)
