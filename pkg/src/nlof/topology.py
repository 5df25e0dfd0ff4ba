"""Undirected network topology, shortest-path flow tracing, link/flow association."""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Hashable, Iterable, Sequence

Link = tuple[str, str]


class TopologyError(ValueError):
    pass


class NoPathError(TopologyError):
    def __init__(self, src: str, dst: str, flow_id: Hashable | None = None):
        self.src, self.dst, self.flow_id = src, dst, flow_id
        ctx = f" for flow {flow_id}" if flow_id is not None else ""
        super().__init__(f"no path from {src} to {dst}{ctx}")


def link_key(a: str, b: str) -> Link:
    """Canonical unordered form of a link: endpoints in sorted order."""
    return (a, b) if a <= b else (b, a)


def link_name(link: Link) -> str:
    return f"{link[0]}–{link[1]}"


@dataclass(frozen=True)
class Topology:
    nodes: tuple[str, ...]
    capacity: dict[Link, float]
    error_rate: dict[Link, float]
    _adj: dict[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        names = set(self.nodes)
        if len(names) != len(self.nodes):
            raise TopologyError("duplicate node name")
        for link in self.capacity:
            a, b = link
            if a == b:
                raise TopologyError(f"self-loop {a}–{b}")
            for end in link:
                if end not in names:
                    raise TopologyError(f"link {link_name(link)} has unknown endpoint {end!r}")
            if link != link_key(a, b):
                raise TopologyError(f"link {link_name(link)} is not in canonical order")
            cap = self.capacity[link]
            if not (cap > 0):
                raise TopologyError(f"link {link_name(link)} has non-positive capacity {cap!r}")
            p = self.error_rate.get(link, 0.0)
            if not (0.0 <= p <= 1.0):
                raise TopologyError(f"link {link_name(link)} has error_rate {p!r} outside [0, 1]")
        if set(self.error_rate) - set(self.capacity):
            raise TopologyError("error_rate given for a link that does not exist")
        adj: dict[str, list[str]] = {n: [] for n in self.nodes}
        for a, b in self.capacity:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", {n: tuple(sorted(v)) for n, v in adj.items()})

    @classmethod
    def build(cls, nodes: Iterable[str], links: Iterable[tuple]) -> Topology:
        """Build from ``(a, b, capacity[, error_rate])`` tuples, validating as load_topology does."""
        nodes = tuple(nodes)
        capacity: dict[Link, float] = {}
        errors: dict[Link, float] = {}
        for spec in links:
            a, b, cap = spec[0], spec[1], spec[2]
            p = spec[3] if len(spec) > 3 else 0.0
            if a == b:
                raise TopologyError(f"self-loop {a}–{b}")
            key = link_key(a, b)
            if key in capacity:
                raise TopologyError(f"duplicate link {link_name(key)}")
            capacity[key] = float(cap)
            errors[key] = float(p)
        return cls(nodes, capacity, errors)

    @property
    def links(self) -> list[Link]:
        return sorted(self.capacity)

    def neighbors(self, node: str) -> tuple[str, ...]:
        return self._adj[node]

    def with_error_rates(self, rates: dict[Link, float]) -> Topology:
        merged = dict(self.error_rate)
        for link, p in rates.items():
            key = link_key(*link)
            if key not in self.capacity:
                raise TopologyError(f"unknown link {link_name(key)}")
            merged[key] = float(p)
        return Topology(self.nodes, dict(self.capacity), merged)

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "links": [
                {"a": a, "b": b, "capacity_bps": self.capacity[(a, b)], "error_rate": self.error_rate.get((a, b), 0.0)}
                for a, b in self.links
            ],
        }


def topology_from_dict(obj) -> Topology:
    if not isinstance(obj, dict) or "nodes" not in obj or "links" not in obj:
        raise TopologyError("topology JSON needs 'nodes' and 'links'")
    nodes = obj["nodes"]
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise TopologyError("'nodes' must be a list of names")
    specs = []
    for i, item in enumerate(obj["links"]):
        try:
            a, b, cap = item["a"], item["b"], item["capacity_bps"]
        except (KeyError, TypeError):
            raise TopologyError(f"link #{i} needs 'a', 'b' and 'capacity_bps'") from None
        p = item.get("error_rate", 0.0)
        for name, value in (("capacity_bps", cap), ("error_rate", p)):
            if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value):
                raise TopologyError(f"link #{i} ({a}–{b}) has non-numeric {name}")
        specs.append((a, b, cap, p))
    return Topology.build(nodes, specs)


def load_topology(source: bytes | BinaryIO) -> Topology:
    """Parse and validate topology JSON (``{"nodes": [...], "links": [...]}``)."""
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        obj = json.loads(bytes(data).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TopologyError(f"invalid topology JSON: {exc}") from None
    return topology_from_dict(obj)


def read_topology(path: str | Path) -> Topology:
    with open(path, "rb") as fh:
        return load_topology(fh)


@dataclass(frozen=True)
class TracedFlow:
    flow_id: Hashable
    path: tuple[Link, ...]


def hop_distances(topology: Topology, root: str) -> dict[str, int]:
    dist = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in topology.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _walk(topology: Topology, src: str, dst: str, to_dst: dict[str, int]) -> list[str]:
    # greedy smallest-name step towards dst gives the lexicographically
    # smallest node sequence among minimum-hop paths
    seq = [src]
    node = src
    while node != dst:
        d = to_dst[node]
        node = next(v for v in topology.neighbors(node) if to_dst.get(v) == d - 1)
        seq.append(node)
    return seq


def shortest_node_path(topology: Topology, src: str, dst: str, flow_id=None, _cache=None) -> list[str]:
    for end in (src, dst):
        if end not in topology._adj:
            raise TopologyError(f"unknown node {end!r}")
    if src == dst:
        return [src]
    if _cache is not None and dst in _cache:
        to_dst = _cache[dst]
    else:
        to_dst = hop_distances(topology, dst)
        if _cache is not None:
            _cache[dst] = to_dst
    if src not in to_dst:
        raise NoPathError(src, dst, flow_id)
    return _walk(topology, src, dst, to_dst)


def trace_flow(topology: Topology, src: str, dst: str, flow_id: Hashable = None) -> TracedFlow:
    """Minimum-hop path from src to dst; equal-hop ties take the
    lexicographically smallest node sequence."""
    seq = shortest_node_path(topology, src, dst, flow_id)
    return TracedFlow(flow_id, tuple(link_key(a, b) for a, b in zip(seq, seq[1:])))


def trace_flows(topology: Topology, flows: Iterable) -> list[TracedFlow]:
    """Trace many flows (anything with flow_id/src/dst), sharing BFS work per destination."""
    cache: dict[str, dict[str, int]] = {}
    out = []
    for f in flows:
        seq = shortest_node_path(topology, f.src, f.dst, f.flow_id, _cache=cache)
        out.append(TracedFlow(f.flow_id, tuple(link_key(a, b) for a, b in zip(seq, seq[1:]))))
    return out


def associate_flows(topology: Topology, traced: Sequence[TracedFlow]) -> dict[Link, list]:
    """Map every topology link to the ids of the traced flows crossing it."""
    link_flows: dict[Link, list] = {link: [] for link in topology.links}
    for tf in traced:
        for link in tf.path:
            key = link_key(*link)
            if key not in link_flows:
                raise TopologyError(f"flow {tf.flow_id} uses unknown link {link_name(key)}")
            link_flows[key].append(tf.flow_id)
    return link_flows
