"""Flow-level synthetic scenarios.

Each flow is routed on its minimum-hop path and gets the static fair-share
throughput ``min(alpha, min_l capacity(l) / n(l))``, where ``n(l)`` counts
all generated flows crossing link ``l``. Every errored link on the path then
scales delivered throughput by ``1 - error_rate``. Multiplicative jitter
``1 + u``, ``u ~ U[-jitter, jitter]``, models measurement spread.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from nlof.flows import FlowRecord
from nlof.topology import (
    Link,
    NoPathError,
    Topology,
    TopologyError,
    link_key,
    shortest_node_path,
    topology_from_dict,
)

DURATION = 10.0
MAX_PAIR_RETRIES = 100


class ScenarioError(ValueError):
    pass


@dataclass
class ScenarioSpec:
    topology: Topology
    flow_count: int
    throughput_classes: list[float]
    class_weights: list[float] | None = None
    host_nodes: list[str] | None = None
    jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.class_weights is None:
            self.class_weights = [1.0 / len(self.throughput_classes)] * len(self.throughput_classes)
        if self.host_nodes is None:
            self.host_nodes = list(self.topology.nodes)

    def violations(self) -> list[str]:
        bad = []
        if not isinstance(self.flow_count, int) or self.flow_count < 1:
            bad.append("flow_count must be a positive integer")
        if not self.throughput_classes:
            bad.append("throughput_classes must not be empty")
        elif any(not (a > 0) for a in self.throughput_classes):
            bad.append("throughput_classes must be positive")
        if len(self.class_weights) != len(self.throughput_classes):
            bad.append("class_weights must match throughput_classes in length")
        elif any(w < 0 for w in self.class_weights) or not math.isclose(sum(self.class_weights), 1.0, abs_tol=1e-9):
            bad.append("class_weights must be non-negative and sum to 1")
        if len(set(self.host_nodes)) < 2:
            bad.append("at least two distinct host_nodes are required")
        unknown = sorted(set(self.host_nodes) - set(self.topology.nodes))
        if unknown:
            bad.append(f"unknown host_nodes: {', '.join(unknown)}")
        if not 0 <= self.jitter <= 0.5:
            bad.append("jitter must be in [0, 0.5]")
        return bad

    def validate(self):
        bad = self.violations()
        if bad:
            raise ScenarioError("; ".join(bad))

    @classmethod
    def from_dict(cls, obj: Mapping, base_dir: str | Path | None = None) -> ScenarioSpec:
        topo = obj.get("topology")
        if isinstance(topo, str):
            path = Path(topo)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            topo = json.loads(path.read_text(encoding="utf-8"))
        if topo is None:
            raise ScenarioError("scenario needs a topology")
        try:
            return cls(
                topology=topology_from_dict(topo),
                flow_count=obj["flow_count"],
                throughput_classes=[float(a) for a in obj["throughput_classes"]],
                class_weights=obj.get("class_weights"),
                host_nodes=obj.get("host_nodes"),
                jitter=float(obj.get("jitter", 0.0)),
                seed=int(obj.get("seed", 0)),
            )
        except KeyError as exc:
            raise ScenarioError(f"scenario lacks field {exc.args[0]!r}") from None

    def to_dict(self) -> dict:
        return {
            "topology": self.topology.to_dict(),
            "flow_count": self.flow_count,
            "throughput_classes": list(self.throughput_classes),
            "class_weights": list(self.class_weights),
            "host_nodes": list(self.host_nodes),
            "jitter": self.jitter,
            "seed": self.seed,
        }


def read_scenario(path: str | Path) -> ScenarioSpec:
    path = Path(path)
    return ScenarioSpec.from_dict(json.loads(path.read_text(encoding="utf-8")), base_dir=path.parent)


@dataclass
class Scenario:
    topology: Topology
    flows: list[FlowRecord]
    ground_truth: list[Link]
    paths: dict = field(default_factory=dict)


def model_throughput(
    alpha: float,
    path: Sequence[Link],
    share_counts: Mapping[Link, int],
    capacities: Mapping[Link, float],
    error_rates: Mapping[Link, float] | None = None,
) -> float:
    """Equal-share throughput of one flow on ``path``, degraded by link losses."""
    if not path:
        raise ValueError("path must contain at least one link")
    error_rates = error_rates or {}
    rate = alpha
    keep = 1.0
    for link in path:
        key = link_key(*link)
        n = share_counts[key]
        if n < 1:
            raise ValueError(f"share count for {key} must be >= 1")
        rate = min(rate, capacities[key] / n)
        keep *= 1.0 - error_rates.get(key, 0.0)
    return rate * keep


def _draw_class(rng: np.random.Generator, cumulative: np.ndarray) -> int:
    idx = int(np.searchsorted(cumulative, rng.random(), side="right"))
    return min(idx, cumulative.size - 1)


def generate_scenario(spec: ScenarioSpec) -> Scenario:
    """Deterministic (given ``spec.seed``) flow set over ``spec.topology``.

    Draws per flow, in order: endpoint pair (redrawn if disconnected), class,
    jitter. Records have a fixed 10 s duration and byte counts rounded so the
    derived throughput matches the modelled one.
    """
    spec.validate()
    topo = spec.topology
    hosts = list(dict.fromkeys(spec.host_nodes))
    rng = np.random.default_rng(spec.seed)
    cumulative = np.cumsum(np.asarray(spec.class_weights, dtype=float))
    width = len(str(spec.flow_count - 1))
    cache: dict = {}

    drawn = []
    for i in range(spec.flow_count):
        for _ in range(MAX_PAIR_RETRIES):
            a = int(rng.integers(len(hosts)))
            b = int(rng.integers(len(hosts) - 1))
            if b >= a:
                b += 1
            src, dst = hosts[a], hosts[b]
            try:
                seq = shortest_node_path(topo, src, dst, _cache=cache)
                break
            except NoPathError:
                continue
        else:
            raise ScenarioError(f"could not find a connected host pair for flow {i}")
        alpha = spec.throughput_classes[_draw_class(rng, cumulative)]
        u = float(rng.uniform(-spec.jitter, spec.jitter)) if spec.jitter > 0 else 0.0
        path = tuple(link_key(x, y) for x, y in zip(seq, seq[1:]))
        drawn.append((f"f{i:0{width}d}", src, dst, alpha, u, path))

    shares: dict[Link, int] = {}
    for *_, path in drawn:
        for link in path:
            shares[link] = shares.get(link, 0) + 1

    flows = []
    paths = {}
    for fid, src, dst, alpha, u, path in drawn:
        tp = model_throughput(alpha, path, shares, topo.capacity, topo.error_rate) * (1.0 + u)
        nbytes = int(round(tp * DURATION / 8))
        flows.append(FlowRecord.from_counts(fid, src, dst, nbytes, DURATION))
        paths[fid] = path
    truth = sorted(link for link, p in topo.error_rate.items() if p > 0)
    return Scenario(topo, flows, truth, paths)


def desk_topology(capacity: float = 10e9, error_rates: Mapping[tuple[str, str], float] | None = None) -> Topology:
    """Ten-node two-tier tree: core router R, switches S1 (hosts h1-h4) and S2 (hosts h5-h7).

    The default capacity is high enough that, with a few thousand concurrent
    flows of at most a few Mbps, the generation rate is always the binding term.
    """
    links = [("R", "S1", capacity), ("R", "S2", capacity)]
    links += [(f"h{i}", "S1", capacity) for i in range(1, 5)]
    links += [(f"h{i}", "S2", capacity) for i in range(5, 8)]
    topo = Topology.build(["R", "S1", "S2"] + [f"h{i}" for i in range(1, 8)], links)
    if error_rates:
        topo = topo.with_error_rates(dict(error_rates))
    return topo


DESK_HOSTS = [f"h{i}" for i in range(1, 8)]

__all__ = [
    "DESK_HOSTS",
    "Scenario",
    "ScenarioError",
    "ScenarioSpec",
    "TopologyError",
    "desk_topology",
    "generate_scenario",
    "model_throughput",
    "read_scenario",
]
