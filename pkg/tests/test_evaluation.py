import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.distance import pdist, squareform

from embedor.core import PointCloud, RunConfig
from embedor.evaluation import (
    geodesic_oracle,
    geodesic_score,
    pairwise_upper,
    pearson,
    permutation_test,
    spearman,
    zscored_converse_stats,
    zscored_edge_stats,
)
from embedor.graph import build_knn_graph
from embedor.metric import MetricMatrix, quantile_count
from embedor.pipeline import edge_stats, run_embed
from embedor.synth import generate
from helpers import from_pairs
from oracles import exact_permutation_p


def _dense_metric(d):
    return MetricMatrix("exact", float(d.max()) * 10, d)


def test_oracle_straight_segment():
    t = np.sort(np.random.default_rng(0).uniform(0, 5, 300))
    cloud = PointCloud(np.c_[t, np.zeros_like(t)], np.zeros(300, dtype=int))
    o = geodesic_oracle(cloud)
    assert o.distances[np.argmin(t), np.argmax(t)] == pytest.approx(t.max() - t.min(), rel=1e-12)


def test_oracle_circle_antipode():
    th = np.random.default_rng(1).uniform(0, 2 * np.pi, 2000)
    cloud = PointCloud(np.c_[np.cos(th), np.sin(th)], np.zeros(2000, dtype=int))
    o = geodesic_oracle(cloud)
    assert o.distances.max() == pytest.approx(np.pi, rel=0.05)
    np.testing.assert_array_equal(o.distances, o.distances.T)


def test_oracle_cross_components_constant():
    c = generate("circles", 400, seed=2)
    o = geodesic_oracle(c)
    cross = o.distances[np.ix_(c.labels == 0, c.labels == 1)]
    assert np.all(cross == o.cross_value)
    assert o.cross_value == pytest.approx(10 * o.distances[c.labels[:, None] == c.labels[None, :]].max())


def test_oracle_disconnected_component():
    pts = np.r_[np.zeros((20, 2)) + np.arange(20)[:, None] * [0.01, 0], np.zeros((20, 2)) + [50, 0] + np.arange(20)[:, None] * [0.01, 0]]
    with pytest.raises(ValueError, match="disconnected"):
        geodesic_oracle(PointCloud(pts, np.zeros(40, dtype=int)), k=3)


def test_oracle_needs_labels():
    with pytest.raises(ValueError):
        geodesic_oracle(PointCloud(np.zeros((5, 2))))


def test_correlation_hand_cases():
    assert spearman([1, 2, 3], [1, 2, 3]) == 1.0
    assert spearman([1, 2, 3], [3, 2, 1]) == -1.0
    assert spearman([1, 2, 3], [1, 3, 2]) == 0.5
    assert pearson([0, 1, 2], [0, 2, 4]) == 1.0
    with pytest.raises(ValueError):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2, 3])


@given(st.lists(st.integers(-100, 100), min_size=3, max_size=30, unique=True), st.integers(0, 1000))
def test_spearman_monotone_invariance(x, seed):
    y = np.random.default_rng(seed).normal(size=len(x))
    x = np.asarray(x, dtype=float)
    assert spearman(x**3 + 5 * x, y) == pytest.approx(spearman(x, y), abs=1e-12)
    assert -1 <= spearman(x, y) <= 1


def test_pairwise_upper_matches_pdist(rng):
    pts = rng.normal(size=(700, 3))
    np.testing.assert_allclose(pairwise_upper(pts, chunk=64), pdist(pts), rtol=1e-12)


def test_geodesic_score_isometry_and_random(rng):
    pts = rng.normal(size=(200, 2))
    d = squareform(pdist(pts))
    from embedor.evaluation import GeodesicOracle

    o = GeodesicOracle(d, 10 * d.max(), np.zeros(200, dtype=int))
    rot = np.array([[0.6, -0.8], [0.8, 0.6]])
    assert geodesic_score(pts @ rot + 3.0, o) == pytest.approx(1.0, abs=1e-12)
    assert abs(geodesic_score(rng.normal(size=(200, 2)), o)) < 0.2
    with pytest.raises(ValueError):
        geodesic_score(pts[:10], o)


def _ring(n=40):
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return PointCloud(np.c_[np.cos(th), np.sin(th)])


def test_zscore_moments(rng):
    cloud = _ring()
    g = build_knn_graph(cloud, 4)
    y = rng.normal(size=(cloud.n, 2))
    rep = zscored_edge_stats(y, g, _dense_metric(squareform(pdist(cloud.points))), 0.33)
    assert rep.z.mean() == pytest.approx(0, abs=1e-12)
    assert rep.z.var(ddof=1) == pytest.approx(1, abs=1e-12)
    assert rep.selected.size == quantile_count(g.n_edges, 0.33)
    full = zscored_edge_stats(y, g, _dense_metric(squareform(pdist(cloud.points))), 1.0)
    assert full.mean == pytest.approx(0, abs=1e-12)


def test_zscore_constant_lengths_error():
    g = from_pairs(3, [(0, 1), (1, 2), (0, 2)])
    y = np.array([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])
    d = squareform(pdist(y))
    with pytest.raises(ValueError, match="equal"):
        zscored_edge_stats(y, g, _dense_metric(d), 0.5)


def test_rank_aligned_edges_are_shortest(rng):
    # embedding edge lengths increasing in the metric: the selected edges carry the lowest z-scores
    n = 30
    g = from_pairs(n, [(i, i + 1) for i in range(n - 1)])
    gaps = np.sort(rng.uniform(0.1, 2.0, n - 1))
    y = np.c_[np.r_[0, np.cumsum(gaps)], np.zeros(n)]
    d = squareform(pdist(y)) * 2.0
    rep = zscored_edge_stats(y, g, _dense_metric(d), 0.33)
    z_sorted = np.sort(rep.z)
    assert np.allclose(np.sort(rep.z[rep.selected]), z_sorted[: rep.selected.size])
    conv = zscored_converse_stats(y, g, _dense_metric(d), 0.33)
    assert conv.mean < 0


def test_converse_random_embedding_is_centered():
    means = []
    cloud = generate("swiss_roll", 600, seed=0)
    g = build_knn_graph(cloud, 10)
    m = _dense_metric(squareform(pdist(cloud.points)))
    for s in range(10):
        y = np.random.default_rng(s).normal(size=(cloud.n, 2))
        means.append(zscored_converse_stats(y, g, m, 0.33).mean)
    assert abs(np.mean(means)) < 0.1


def test_permutation_small_case_vs_exact():
    a, b = [10, 11, 12], [0, 1, 2]
    exact = float(exact_permutation_p(a, b))
    assert exact == pytest.approx(0.05)
    p, reject = permutation_test(a, b, resamples=10_000, seed=0)
    assert p == pytest.approx(exact, abs=0.01) and not reject


def test_permutation_identical_samples():
    x = np.arange(8.0)
    p, reject = permutation_test(x, x, resamples=4000, seed=1)
    assert p == pytest.approx(float(exact_permutation_p(x, x)), abs=0.03) and not reject


def test_permutation_single_resample():
    p, _ = permutation_test([1, 2], [3, 4], resamples=1, seed=0)
    assert p in (0.5, 1.0)


def test_permutation_block_independence():
    a, b = np.random.default_rng(4).normal(size=(2, 25))
    p1, _ = permutation_test(a, b, resamples=2500, seed=9)
    p2, _ = permutation_test(a, b, resamples=2000, seed=9)
    # the first 2000 draws are shared, the extra 500 can move p by at most 500/2501
    assert abs(p1 - p2) <= 500 / 2001
    assert permutation_test(a, b, resamples=2500, seed=9) == (p1, _)


def test_permutation_detects_shift():
    rng = np.random.default_rng(5)
    p, reject = permutation_test(rng.normal(1, 1, 100), rng.normal(0, 1, 100), resamples=2000)
    assert reject and p < 0.01
    with pytest.raises(ValueError):
        permutation_test([], [1.0])


def test_embedding_shrinks_short_metric_edges():
    cloud = generate("moons", 300, seed=0)
    run = run_embed(cloud, RunConfig(k=10, perplexity=30, seed=0))
    assert edge_stats(run.state.Y, run.metric, 0.33).mean < 0
