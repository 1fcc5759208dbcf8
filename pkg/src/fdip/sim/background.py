"""Best-effort microburst generator."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from ..network import Network


class Burst(NamedTuple):
    time: int  # ns
    link: tuple[str, str]
    bits: int


@dataclass
class TrafficConfig:
    be_load: float | Mapping[tuple[str, str], float] = 0.0
    burst_bits: int = 120_000
    packet_bits: int = 12_000
    seed: int = 0
    horizon: int = 2  # hypercycles
    preempt_express: bool = True
    trace: bool = False
    links: tuple[tuple[str, str], ...] | None = None  # restrict BE to these links

    def load_on(self, link: tuple[str, str]) -> float:
        if isinstance(self.be_load, Mapping):
            return float(self.be_load.get(link, 0.0))
        if self.links is not None and link not in self.links:
            return 0.0
        return float(self.be_load)


def inject_background(net: Network, config: TrafficConfig, window: int) -> list[Burst]:
    """Jittered periodic bursts per link over ``[0, window)`` ns.

    Burst ``j`` lands uniformly inside slot ``[jP, (j+1)P)`` where
    ``P = burst_bits / (load * bandwidth)``, so the offered load over any
    window is within one burst of the target while burst phases stay random.
    """
    out: list[Burst] = []
    for idx, key in enumerate(sorted(net.links)):
        load = config.load_on(key)
        if not 0.0 <= load < 1.0:
            raise ValueError(f"best-effort utilisation must be in [0, 1), got {load} on {key}")
        if load == 0.0:
            continue
        bw = net.links[key].bandwidth
        slot = config.burst_bits * 1e9 / (load * bw)
        rng = np.random.default_rng([config.seed, idx])
        j = 0
        while j * slot < window:
            t = int(j * slot + rng.random() * slot)
            if t < window:
                out.append(Burst(t, key, config.burst_bits))
            j += 1
    out.sort()
    return out
