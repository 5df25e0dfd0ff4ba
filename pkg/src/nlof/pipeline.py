"""End-to-end analysis: cluster, score flows, trace, score links."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from nlof.clustering import DensityCluster, TPCluster, compute_fof, dbscan_1d, form_tpclusters
from nlof.flows import FlowRecord
from nlof.scoring import LinkScore, compute_nlof, rank_links
from nlof.topology import Link, Topology, TracedFlow, associate_flows, trace_flows

# eps deliberately has no default: it is unit-sensitive
DEFAULTS = {
    "min_samples": 50,
    "tpr": 0.3,
    "tpdev": 0.1,
    "k": 2,
    "fof_threshold": 0.1,
    "format": "csv",
}


class PipelineError(RuntimeError):
    """A stage failed; ``stage`` names it and ``__cause__`` holds the reason."""

    def __init__(self, stage: str, cause: BaseException | str):
        self.stage = stage
        super().__init__(f"{stage}: {cause}")


@dataclass
class PipelineConfig:
    eps: float | None = None
    min_samples: int = DEFAULTS["min_samples"]
    tpr: float = DEFAULTS["tpr"]
    tpdev: float = DEFAULTS["tpdev"]
    k: int = DEFAULTS["k"]
    fof_threshold: float = DEFAULTS["fof_threshold"]
    flows: str | None = None
    topology: str | None = None
    scenario: str | None = None
    out: str | None = None
    format: str = DEFAULTS["format"]
    emit_intermediates: bool = False
    seed: int | None = None


def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def validate_config(config: PipelineConfig, require_source: bool = True) -> list[str]:
    """Every range or consistency problem with ``config``; empty means valid."""
    bad = []
    if config.eps is None:
        bad.append("eps is required (bits/second, no default)")
    elif not _is_real(config.eps) or config.eps <= 0:
        bad.append("eps must be > 0")
    if not _is_int(config.min_samples) or config.min_samples < 1:
        bad.append("min_samples must be a positive integer")
    if not _is_real(config.tpr) or config.tpr < 0:
        bad.append("tpr must be >= 0")
    elif config.tpr >= 1:
        bad.append("tpr must be < 1")
    if not _is_real(config.tpdev) or config.tpdev < 0:
        bad.append("tpdev must be >= 0")
    if not _is_int(config.k) or config.k < 1:
        bad.append("k must be a positive integer")
    if not _is_real(config.fof_threshold):
        bad.append("fof_threshold must be a finite real")
    if config.format not in ("csv", "json"):
        bad.append("format must be csv or json")
    if config.seed is not None and not _is_int(config.seed):
        bad.append("seed must be an integer")

    has_inputs = config.flows is not None or config.topology is not None
    if has_inputs and config.scenario is not None:
        bad.append("exactly one input source: flows+topology or scenario")
    elif require_source:
        if not has_inputs and config.scenario is None:
            bad.append("exactly one input source: flows+topology or scenario")
        elif has_inputs and (config.flows is None or config.topology is None):
            bad.append("flows and topology must be given together")
    if config.emit_intermediates and config.out is None:
        bad.append("emit_intermediates needs an output path")
    return bad


@dataclass
class Analysis:
    density_clusters: list[DensityCluster]
    noise: list
    tpclusters: list[TPCluster]
    traced: list[TracedFlow]
    link_flows: dict[Link, list]
    scores: list[LinkScore] = field(default_factory=list)

    @property
    def fof(self) -> dict:
        merged = {}
        for tpc in self.tpclusters:
            merged.update(tpc.fof)
        return merged


def analyze(
    flows: Sequence[FlowRecord],
    topology: Topology,
    eps: float,
    min_samples: int = 50,
    tpr: float = 0.3,
    tpdev: float = 0.1,
    k: int = 2,
    fof_threshold: float = 0.1,
) -> Analysis:
    """Run clustering, FOF, tracing and NLOF in order; ``scores`` come back ranked."""
    tp = {f.flow_id: f.throughput for f in flows}
    try:
        clusters, noise = dbscan_1d([(f.flow_id, f.throughput) for f in flows], eps, min_samples)
    except ValueError as exc:
        raise PipelineError("dbscan", exc) from exc
    try:
        tpcs = form_tpclusters(clusters, [(f, tp[f]) for f in noise], tpr, tpdev)
    except ValueError as exc:
        raise PipelineError("tpcluster", exc) from exc
    try:
        tpcs = compute_fof(tpcs, tp, k)
    except ValueError as exc:
        raise PipelineError("fof", exc) from exc
    try:
        traced = trace_flows(topology, flows)
        link_flows = associate_flows(topology, traced)
    except ValueError as exc:
        raise PipelineError("trace", exc) from exc
    result = Analysis(clusters, noise, tpcs, traced, link_flows)
    try:
        result.scores = rank_links(compute_nlof(link_flows, result.fof, fof_threshold))
    except KeyError as exc:
        raise PipelineError("nlof", exc) from exc
    return result


def intermediates(flows: Sequence[FlowRecord], analysis: Analysis) -> list[dict]:
    """Per-flow cluster assignments and FOF, ready for plotting."""
    density = {}
    for c in analysis.density_clusters:
        for f in c.members:
            density[f] = c.cluster_id
    tpc_of = {}
    for tpc in analysis.tpclusters:
        for f in tpc.members:
            tpc_of[f] = tpc
    rows = []
    for f in flows:
        tpc = tpc_of[f.flow_id]
        rows.append(
            {
                "flow_id": f.flow_id,
                "throughput": f.throughput,
                "density_cluster_id": density.get(f.flow_id, "noise"),
                "tpcluster_id": tpc.tpcluster_id,
                "normal_point": tpc.normal_point,
                "fof": tpc.fof[f.flow_id],
            }
        )
    return rows
