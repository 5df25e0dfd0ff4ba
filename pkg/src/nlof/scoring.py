"""Per-link outlier factor (NLOF) and the ranked report."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from nlof.topology import Link, link_key


class MissingFOFError(KeyError):
    def __str__(self):
        return f"no FOF for flow {self.args[0]!r}"


@dataclass(frozen=True)
class LinkScore:
    link: Link
    total_flows: int
    outlier_flows: int
    nlof: float
    no_data: bool = False

    def as_dict(self) -> dict:
        return {
            "link_a": self.link[0],
            "link_b": self.link[1],
            "nlof": self.nlof,
            "outlier_flows": self.outlier_flows,
            "total_flows": self.total_flows,
            "no_data": self.no_data,
        }


def compute_nlof(
    link_flows: Mapping[Link, Sequence[Hashable]],
    fof: Mapping[Hashable, float],
    threshold: float = 0.1,
) -> list[LinkScore]:
    """Share of each link's flows whose FOF is strictly above ``threshold``.

    Links without flows score 0 and carry ``no_data=True``.
    """
    scores = []
    for link, flows in link_flows.items():
        outliers = 0
        for f in flows:
            try:
                value = fof[f]
            except KeyError:
                raise MissingFOFError(f) from None
            if value > threshold:
                outliers += 1
        total = len(flows)
        key = link_key(*link)
        if total == 0:
            scores.append(LinkScore(key, 0, 0, 0.0, no_data=True))
        else:
            scores.append(LinkScore(key, total, outliers, outliers / total))
    return scores


def rank_links(scores: Iterable[LinkScore]) -> list[LinkScore]:
    # descending nlof, then descending flow count, then link name; no-data last
    return sorted(scores, key=lambda s: (s.no_data, -s.nlof, -s.total_flows, s.link))


def report_csv(ranked: Sequence[LinkScore]) -> str:
    out = io.StringIO(newline="")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["link_a", "link_b", "nlof", "outlier_flows", "total_flows", "no_data"])
    for s in ranked:
        writer.writerow([s.link[0], s.link[1], repr(s.nlof), s.outlier_flows, s.total_flows, str(s.no_data).lower()])
    return out.getvalue()


def report_json(ranked: Sequence[LinkScore]) -> str:
    return json.dumps([s.as_dict() for s in ranked], indent=2) + "\n"


def render_report(ranked: Sequence[LinkScore], format: str = "csv") -> str:
    if format == "csv":
        return report_csv(ranked)
    if format == "json":
        return report_json(ranked)
    raise ValueError(f"unknown report format {format!r}")


def parse_report(text: str, format: str = "csv") -> list[LinkScore]:
    if format == "json":
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        no_data = row["no_data"]
        if isinstance(no_data, str):
            no_data = no_data.strip().lower() == "true"
        out.append(
            LinkScore(
                link_key(row["link_a"], row["link_b"]),
                int(row["total_flows"]),
                int(row["outlier_flows"]),
                float(row["nlof"]),
                bool(no_data),
            )
        )
    return out
