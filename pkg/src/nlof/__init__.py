"""Soft-failure localization from passively collected flow records.

Flows are clustered by average throughput in two stages, each flow gets an
outlier factor relative to its throughput class, flows are traced onto the
topology, and every link is scored by the share of outlier flows it carries.
"""

from nlof.clustering import (
    DensityCluster,
    TPCluster,
    compute_fof,
    dbscan_1d,
    form_tpclusters,
    kmeans_1d,
)
from nlof.flows import FlowRecord, compute_throughput, parse_flow_records
from nlof.scoring import LinkScore, compute_nlof, rank_links
from nlof.topology import Topology, TracedFlow, associate_flows, load_topology, trace_flow

__all__ = [
    "DensityCluster",
    "FlowRecord",
    "LinkScore",
    "TPCluster",
    "Topology",
    "TracedFlow",
    "associate_flows",
    "compute_fof",
    "compute_nlof",
    "compute_throughput",
    "dbscan_1d",
    "form_tpclusters",
    "kmeans_1d",
    "load_topology",
    "parse_flow_records",
    "rank_links",
    "trace_flow",
]

__version__ = "0.1.0"
