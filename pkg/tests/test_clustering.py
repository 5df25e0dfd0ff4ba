import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlof.clustering import (
    DensityCluster,
    NoClustersError,
    TPCluster,
    compute_fof,
    dbscan_1d,
    form_tpclusters,
    kmeans_1d,
    kmeans_1d_segments,
)
from oracles import brute_dbscan, brute_kmeans_sse, exact_sse


def partition(clusters, noise):
    return {frozenset(c.members) for c in clusters}, frozenset(noise)


# -- dbscan_1d --------------------------------------------------------------


def test_dbscan_identical_points():
    pts = [(i, 1_000_000.0) for i in range(100)]
    clusters, noise = dbscan_1d(pts, eps=100, min_samples=50)
    assert len(clusters) == 1 and len(clusters[0].members) == 100
    assert noise == []


def test_dbscan_two_bands_matches_oracle():
    rng = random.Random(11)
    pts = [(f"lo{i}", rng.uniform(0, 100)) for i in range(60)]
    pts += [(f"hi{i}", rng.uniform(1_000_000, 1_000_100)) for i in range(60)]
    expected_clusters, expected_noise = brute_dbscan(pts, 100, 50)
    assert len(expected_clusters) == 2 and not expected_noise
    clusters, noise = dbscan_1d(pts, eps=100, min_samples=50)
    assert partition(clusters, noise) == (expected_clusters, expected_noise)
    # highest cluster first
    assert clusters[0].cluster_id == 0 and all(m.startswith("hi") for m in clusters[0].members)


def test_dbscan_below_min_samples_is_all_noise():
    clusters, noise = dbscan_1d([(i, 500.0) for i in range(49)], eps=100, min_samples=50)
    assert clusters == [] and len(noise) == 49


def test_dbscan_empty():
    assert dbscan_1d([], eps=1, min_samples=1) == ([], [])


def test_dbscan_border_point_goes_to_nearer_core():
    # cores at 0 (x3) and 10 (x3); border at 4 reaches both with eps=6
    pts = [(f"a{i}", 0.0) for i in range(3)] + [("b", 4.0)] + [(f"c{i}", 10.0) for i in range(3)]
    clusters, noise = dbscan_1d(pts, eps=6, min_samples=4)
    assert partition(clusters, noise) == brute_dbscan(pts, 6, 4)
    low = next(c for c in clusters if "a0" in c.members)
    assert "b" in low.members


def test_dbscan_border_tie_goes_up():
    pts = [(f"a{i}", 0.0) for i in range(3)] + [("b", 5.0)] + [(f"c{i}", 10.0) for i in range(3)]
    clusters, noise = dbscan_1d(pts, eps=5, min_samples=4)
    assert "b" in clusters[0].members and clusters[0].max_throughput == 10.0


def test_dbscan_cluster_maxima_and_order():
    pts = [(i, float(v)) for i, v in enumerate([1, 2, 3, 50, 51, 52, 100, 101, 102, 500])]
    clusters, noise = dbscan_1d(pts, eps=1.5, min_samples=2)
    assert [c.max_throughput for c in clusters] == [102, 52, 3]
    assert [c.cluster_id for c in clusters] == [0, 1, 2]
    assert noise == [9]


point_sets = st.lists(st.integers(min_value=0, max_value=400), max_size=200)


@settings(max_examples=150, deadline=None)
@given(point_sets, st.integers(min_value=1, max_value=60), st.integers(min_value=1, max_value=8))
def test_dbscan_matches_brute_force(vals, eps, min_samples):
    pts = [(i, float(v)) for i, v in enumerate(vals)]
    clusters, noise = dbscan_1d(pts, eps, min_samples)
    assert partition(clusters, noise) == brute_dbscan(pts, eps, min_samples)
    seen = [m for c in clusters for m in c.members] + list(noise)
    assert sorted(seen) == list(range(len(vals)))
    for c in clusters:
        assert c.max_throughput == max(vals[m] for m in c.members)


# -- kmeans_1d --------------------------------------------------------------


def test_kmeans_examples():
    assert kmeans_1d([5, 5, 5], 2) == [5]
    assert kmeans_1d([0, 10], 2) == [10, 0]
    assert kmeans_1d([900, 1000, 1100, 400], 2) == [1000, 400]
    # the last one is the exhaustive optimum
    assert brute_kmeans_sse([900, 1000, 1100, 400], 2) == exact_sse([[400], [900, 1000, 1100]])


def test_kmeans_empty():
    with pytest.raises(ValueError):
        kmeans_1d([], 2)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.integers(min_value=-50, max_value=50), min_size=1, max_size=12),
    st.integers(min_value=1, max_value=5),
)
def test_kmeans_is_globally_optimal(vals, k):
    segments = kmeans_1d_segments([float(v) for v in vals], k)
    assert exact_sse([[int(x) for x in s] for s in segments]) == brute_kmeans_sse(vals, k)
    assert len(segments) == min(k, len(set(vals)))


def test_kmeans_large_input_k2_fast_and_sane():
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.uniform(0.98, 1.02, 4000), rng.uniform(0.88, 0.92, 1000)]) * 1e6
    means = kmeans_1d(x, 2)
    assert means[0] == pytest.approx(1e6, rel=2e-3)
    assert means[1] == pytest.approx(0.9e6, rel=2e-3)


# -- form_tpclusters --------------------------------------------------------


def dcs(maxima):
    return [DensityCluster(i, (f"c{i}",), float(m)) for i, m in enumerate(maxima)]


def test_tpcluster_absorption_window():
    out = form_tpclusters(dcs([1_000_000, 750_000, 500_000, 120_000, 95_000]), [], tpr=0.3, tpdev=0.1)
    assert [t.seed_max for t in out] == [1_000_000, 500_000, 120_000]
    assert [t.members for t in out] == [["c0", "c1"], ["c2"], ["c3", "c4"]]


def test_tpcluster_window_is_open_below():
    out = form_tpclusters(dcs([1000, 700]), [], tpr=0.3, tpdev=0.1)
    assert [t.seed_max for t in out] == [1000, 700]


def test_noise_goes_to_min_signed_distance():
    out = form_tpclusters(dcs([1_000_000, 500_000]), [("n", 460_000)], tpr=0.3, tpdev=0.1)
    assert out[1].members == ["c1", "n"] and out[1].noise_members == ["n"]


def test_noise_without_candidate_goes_to_largest():
    out = form_tpclusters(dcs([1_000_000, 500_000]), [("n", 1_200_000)], tpr=0.3, tpdev=0.1)
    assert out[0].members == ["c0", "n"]


def test_noise_slightly_above_a_seed_prefers_it():
    # 520k is within tpdev above 500k (dist -20k >= -50k), which beats +480k
    out = form_tpclusters(dcs([1_000_000, 500_000]), [("n", 520_000)], tpr=0.3, tpdev=0.1)
    assert "n" in out[1].members


def test_noise_exactly_at_lower_seed():
    out = form_tpclusters(dcs([1000, 500]), [("n", 500)], tpr=0.0, tpdev=10.0)
    # dists 500 and 0
    assert "n" in out[1].members


def test_noise_distance_tie_keeps_first_seed():
    # tpr=0 leaves equal maxima unmerged, the only way to tie signed distances
    out = form_tpclusters(
        [DensityCluster(0, ("a",), 1000.0), DensityCluster(1, ("b",), 1000.0)], [("n", 900)], tpr=0.0, tpdev=0.1
    )
    assert len(out) == 2
    assert out[0].members == ["a", "n"] and out[1].members == ["b"]


def test_no_clusters_with_noise_raises():
    with pytest.raises(NoClustersError, match="no clusters formed"):
        form_tpclusters([], [("n", 1.0)], tpr=0.3, tpdev=0.1)
    assert form_tpclusters([], [], 0.3, 0.1) == []


@pytest.mark.parametrize("tpr, tpdev", [(1.0, 0.1), (-0.1, 0.1), (0.3, -1)])
def test_tpcluster_parameter_ranges(tpr, tpdev):
    with pytest.raises(ValueError):
        form_tpclusters(dcs([1]), [], tpr, tpdev)


# -- compute_fof ------------------------------------------------------------


def test_fof_example():
    tps = {"a": 900_000, "b": 1_000_000, "c": 1_100_000, "d": 400_000}
    (tpc,) = compute_fof([TPCluster(0, 1_100_000, list(tps))], tps, k=2)
    assert tpc.normal_point == 1_000_000
    assert tpc.fof["d"] == pytest.approx(0.6, abs=1e-15)
    assert tpc.fof["c"] == pytest.approx(-0.1, abs=1e-15)
    assert tpc.fof["b"] == 0


def test_fof_single_member():
    (tpc,) = compute_fof([TPCluster(0, 750_000, ["x"])], {"x": 750_000}, k=2)
    assert tpc.normal_point == 750_000 and tpc.fof == {"x": 0}


def test_fof_degenerate_zero_cluster():
    (tpc,) = compute_fof([TPCluster(0, 0.0, ["x", "y"])], {"x": 0, "y": 0}, k=2)
    assert tpc.degenerate_zero and tpc.fof == {"x": 1.0, "y": 1.0}


def test_fof_does_not_mutate_input():
    src = TPCluster(0, 10.0, ["x"])
    compute_fof([src], {"x": 10.0})
    assert src.normal_point is None and src.fof == {}


# -- pipeline-level properties ---------------------------------------------


def run_stages(values, eps, min_samples=3, tpr=0.3, tpdev=0.1, k=2):
    pts = [(i, v) for i, v in enumerate(values)]
    clusters, noise = dbscan_1d(pts, eps, min_samples)
    if not clusters:
        return clusters, noise, []
    tpcs = form_tpclusters(clusters, [(f, values[f]) for f in noise], tpr, tpdev)
    return clusters, noise, compute_fof(tpcs, dict(pts), k)


levels = st.sampled_from([10_000.0, 100_000.0, 250_000.0, 1_000_000.0, 2_000_000.0])
samples = st.lists(
    st.tuples(levels, st.floats(min_value=0.7, max_value=1.05)), min_size=5, max_size=120
).map(lambda xs: [a * b for a, b in xs])


@settings(max_examples=100, deadline=None)
@given(samples, st.floats(min_value=0.05, max_value=0.6), st.floats(min_value=0, max_value=0.3))
def test_partition_seed_separation_and_fof_bounds(values, tpr, tpdev):
    clusters, noise, tpcs = run_stages(values, eps=5_000, tpr=tpr, tpdev=tpdev)
    if not clusters:
        return
    members = [m for t in tpcs for m in t.members]
    assert sorted(members) == list(range(len(values)))
    seeds = [t.seed_max for t in tpcs]
    for hi, lo in zip(seeds, seeds[1:]):
        assert lo <= (1 - tpr) * hi
    for t in tpcs:
        assert t.normal_point > 0
        assert all(f <= 1 for f in t.fof.values())
        top = max(t.members, key=lambda m: values[m])
        assert t.fof[top] <= 0
        for m in t.members:
            assert t.fof[m] == (t.normal_point - values[m]) / t.normal_point


@settings(max_examples=60, deadline=None)
@given(samples, st.sampled_from([1e-3, 7.0, 1e3]))
def test_scale_equivariance(values, c):
    base = run_stages(values, eps=5_000)
    if not base[0]:
        return
    scaled = run_stages([v * c for v in values], eps=5_000 * c)
    assert partition(*base[:2]) == partition(*scaled[:2])
    assert [t.members for t in base[2]] == [t.members for t in scaled[2]]
    for a, b in zip(base[2], scaled[2]):
        for m in a.members:
            assert math.isclose(a.fof[m], b.fof[m], rel_tol=1e-9, abs_tol=1e-12)


def test_fof_per_cluster_in_threads_matches_batch():
    from concurrent.futures import ThreadPoolExecutor

    rng = random.Random(3)
    values = [rng.choice([1e4, 1e5, 1e6]) * rng.uniform(0.8, 1.02) for _ in range(600)]
    clusters, noise, batch = run_stages(values, eps=2_000, min_samples=5)
    tps = dict(enumerate(values))
    bare = form_tpclusters(clusters, [(f, values[f]) for f in noise], 0.3, 0.1)
    with ThreadPoolExecutor(4) as pool:
        parallel = [r[0] for r in pool.map(lambda t: compute_fof([t], tps, 2), bare)]
    assert parallel == batch
