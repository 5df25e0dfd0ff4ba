"""Two-stage throughput clustering and flow outlier factors.

Stage one is DBSCAN over scalar throughputs. Stage two merges DBSCAN
clusters whose maxima sit within a relative window of a larger cluster's
maximum (a TPCluster), then folds the DBSCAN noise into the TPClusters.
Each TPCluster gets a "normal" throughput, the top mean of an optimal 1-D
k-means split, and every member flow is scored relative to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Hashable, Mapping, Sequence

import numpy as np

FlowId = Hashable


class NoClustersError(ValueError):
    """Noise flows exist but DBSCAN produced no cluster to fold them into."""


@dataclass(frozen=True)
class DensityCluster:
    cluster_id: int
    members: tuple
    max_throughput: float


@dataclass
class TPCluster:
    tpcluster_id: int
    seed_max: float
    members: list = field(default_factory=list)
    density_cluster_ids: list[int] = field(default_factory=list)
    noise_members: list = field(default_factory=list)
    normal_point: float | None = None
    fof: dict = field(default_factory=dict)
    degenerate_zero: bool = False


# -- stage 1 ---------------------------------------------------------------


def dbscan_1d(
    throughputs: Sequence[tuple[FlowId, float]], eps: float, min_samples: int
) -> tuple[list[DensityCluster], list[FlowId]]:
    """DBSCAN on scalar values with absolute-difference distance.

    A point is core when at least ``min_samples`` points (itself included)
    lie within ``eps``. Clusters are maximal density-connected sets. A border
    point within reach of two clusters joins the one with the nearer core
    point; an exact tie goes to the higher-throughput cluster.

    Returns clusters sorted by descending maximum (ids follow that order) and
    the noise flow ids. Members and noise keep input order.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    n = len(throughputs)
    if n == 0:
        return [], []

    values = np.array([float(v) for _, v in throughputs])
    order = np.argsort(values, kind="stable")
    xs = values[order].tolist()

    # neighbour window [lo, hi) per sorted position; the sweep uses the same
    # |a - b| <= eps test as the definition so boundaries are exact
    counts = [0] * n
    lo = hi = 0
    for i, x in enumerate(xs):
        while x - xs[lo] > eps:
            lo += 1
        if hi < i + 1:
            hi = i + 1
        while hi < n and xs[hi] - x <= eps:
            hi += 1
        counts[i] = hi - lo
    core = [c >= min_samples for c in counts]

    label = [-1] * n
    core_pos = [i for i in range(n) if core[i]]
    n_groups = 0
    prev = None
    for i in core_pos:
        if prev is None or xs[i] - xs[prev] > eps:
            n_groups += 1
        label[i] = n_groups - 1
        prev = i

    # border points: nearest core below and above in sorted order
    next_core = [None] * n
    nxt = None
    for i in range(n - 1, -1, -1):
        if core[i]:
            nxt = i
        next_core[i] = nxt
    last_core = None
    for i in range(n):
        if core[i]:
            last_core = i
            continue
        below = last_core if last_core is not None and xs[i] - xs[last_core] <= eps else None
        above = next_core[i] if next_core[i] is not None and xs[next_core[i]] - xs[i] <= eps else None
        if below is None and above is None:
            continue
        if above is None:
            label[i] = label[below]
        elif below is None:
            label[i] = label[above]
        else:
            label[i] = label[below] if xs[i] - xs[below] < xs[above] - xs[i] else label[above]

    # map back to input positions
    group_of = [-1] * n
    for pos, idx in enumerate(order.tolist()):
        group_of[idx] = label[pos]

    members: list[list] = [[] for _ in range(n_groups)]
    maxima = [-math.inf] * n_groups
    noise = []
    for idx, (fid, _) in enumerate(throughputs):
        g = group_of[idx]
        if g < 0:
            noise.append(fid)
        else:
            members[g].append(fid)
            maxima[g] = max(maxima[g], values[idx])

    # groups were numbered in ascending value order
    clusters = [
        DensityCluster(cid, tuple(members[g]), float(maxima[g]))
        for cid, g in enumerate(range(n_groups - 1, -1, -1))
    ]
    return clusters, noise


# -- optimal 1-D k-means ---------------------------------------------------


def kmeans_1d_segments(values: Sequence[float], k: int) -> list[np.ndarray]:
    """Globally optimal 1-D k-means as contiguous segments of the sorted values.

    Minimises the within-segment sum of squared deviations by dynamic
    programming over split points. ``k`` is reduced to the number of distinct
    values. Segments are returned in ascending order.
    """
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("kmeans_1d needs at least one value")
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, int(np.unique(x).size))
    if k == 1:
        return [x]

    c = x - x.mean()
    s1 = np.concatenate(([0.0], np.cumsum(c)))
    s2 = np.concatenate(([0.0], np.cumsum(c * c)))

    def cost(i, j):
        # SSE of sorted slice [i, j); i may be an array
        return (s2[j] - s2[i]) - (s1[j] - s1[i]) ** 2 / (j - i)

    best = np.full((k + 1, n + 1), np.inf)
    back = np.zeros((k + 1, n + 1), dtype=np.int64)
    js = np.arange(1, n + 1)
    best[1, 1:] = cost(0, js)
    for m in range(2, k + 1):
        targets = range(n, n + 1) if m == k else range(m, n + 1)
        for j in targets:
            i = np.arange(m - 1, j)
            total = best[m - 1, i] + cost(i, j)
            t = int(np.argmin(total))
            best[m, j] = total[t]
            back[m, j] = i[t]

    bounds = [n]
    j = n
    for m in range(k, 1, -1):
        j = int(back[m, j])
        bounds.append(j)
    bounds.append(0)
    bounds.reverse()
    return [x[a:b] for a, b in zip(bounds[:-1], bounds[1:])]


def kmeans_1d(values: Sequence[float], k: int) -> list[float]:
    """Cluster means of the optimal 1-D k-means split, highest first."""
    return sorted((float(seg.mean()) for seg in kmeans_1d_segments(values, k)), reverse=True)


# -- stage 2 ---------------------------------------------------------------


def form_tpclusters(
    clusters: Sequence[DensityCluster],
    noise: Sequence[tuple[FlowId, float]],
    tpr: float,
    tpdev: float,
) -> list[TPCluster]:
    """Merge DBSCAN clusters into throughput classes and place the noise.

    Walking clusters by descending maximum, each one not yet absorbed founds
    a TPCluster and absorbs every later cluster whose maximum lies in
    ``((1 - tpr) * seed_max, seed_max]``.

    A noise flow goes to the TPCluster minimising ``seed_max - throughput``
    among those where that difference is at least ``-tpdev * seed_max``
    (ties to the larger seed_max). With no such TPCluster it goes to the one
    with the largest seed_max.
    """
    if not 0 <= tpr < 1:
        raise ValueError("tpr must be in [0, 1)")
    if tpdev < 0:
        raise ValueError("tpdev must be non-negative")
    if not clusters:
        if noise:
            raise NoClustersError(
                "no clusters formed: every flow is DBSCAN noise; "
                "increase eps or decrease min_samples"
            )
        return []

    ordered = sorted(clusters, key=lambda c: -c.max_throughput)
    combined = [False] * len(ordered)
    out: list[TPCluster] = []
    for i, seed in enumerate(ordered):
        if combined[i]:
            continue
        combined[i] = True
        tpc = TPCluster(len(out), seed.max_throughput, list(seed.members), [seed.cluster_id])
        lower = (1 - tpr) * seed.max_throughput
        for j in range(i + 1, len(ordered)):
            other = ordered[j]
            if not combined[j] and lower < other.max_throughput <= seed.max_throughput:
                combined[j] = True
                tpc.members.extend(other.members)
                tpc.density_cluster_ids.append(other.cluster_id)
        out.append(tpc)

    for fid, tp in noise:
        best = None
        for tpc in out:
            dist = tpc.seed_max - tp
            if dist >= -tpdev * tpc.seed_max:
                # out is ordered by descending seed_max, so strict < keeps
                # the larger seed on ties
                if best is None or dist < best[0]:
                    best = (dist, tpc)
        home = best[1] if best is not None else out[0]
        home.members.append(fid)
        home.noise_members.append(fid)
    return out


def compute_fof(
    tpclusters: Sequence[TPCluster], throughputs: Mapping[FlowId, float], k: int = 2
) -> list[TPCluster]:
    """Fill in the normal point and per-flow outlier factor of each TPCluster.

    The normal point is the highest mean of a k-means split of the members'
    throughputs and ``fof = (normal - tp) / normal``, unclamped. A cluster
    whose normal point is zero is marked ``degenerate_zero`` and all of its
    members score 1.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    out = []
    for tpc in tpclusters:
        if not tpc.members:
            raise ValueError(f"TPCluster {tpc.tpcluster_id} has no members")
        tps = [float(throughputs[f]) for f in tpc.members]
        normal = kmeans_1d(tps, k)[0]
        if normal == 0:
            fof = {f: 1.0 for f in tpc.members}
            out.append(replace(tpc, members=list(tpc.members), normal_point=0.0, fof=fof, degenerate_zero=True))
            continue
        fof = {f: (normal - tp) / normal for f, tp in zip(tpc.members, tps)}
        out.append(replace(tpc, members=list(tpc.members), normal_point=normal, fof=fof, degenerate_zero=False))
    return out
