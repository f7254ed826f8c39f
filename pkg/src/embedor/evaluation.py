"""Ground-truth geodesics, correlation scores, edge statistics and permutation tests."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import dijkstra
from scipy.stats import rankdata

from embedor.core import PointCloud
from embedor.graph import build_epsilon_graph, build_knn_graph, connected_components
from embedor.metric import MetricMatrix, quantile_count

ORACLE_CAP_FACTOR = 10.0
PERM_BLOCK = 1000


@dataclass
class GeodesicOracle:
    distances: np.ndarray
    cross_value: float
    labels: np.ndarray

    @property
    def n(self) -> int:
        return self.distances.shape[0]


def geodesic_oracle(cloud: PointCloud, k: Optional[int] = 15, epsilon: Optional[float] = None) -> GeodesicOracle:
    """Graph-geodesic estimates within each labeled component of a noiseless cloud.

    Pairs in different components all receive 10x the largest intra-component value.
    """
    if cloud.labels is None:
        raise ValueError("geodesic oracle needs component labels")
    labels = np.asarray(cloud.labels)
    n = cloud.n
    dist = np.full((n, n), np.inf)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size == 1:
            dist[idx[0], idx[0]] = 0.0
            continue
        sub = PointCloud(cloud.points[idx])
        if epsilon is not None:
            g = build_epsilon_graph(sub, epsilon)
        else:
            g = build_knn_graph(sub, min(k, idx.size - 1))
        ncomp = int(connected_components(g).max()) + 1
        if ncomp > 1:
            raise ValueError(f"component {c!r} is disconnected in its neighbor graph ({ncomp} pieces)")
        d = dijkstra(g.to_csr(g.euclid), directed=False)
        dist[np.ix_(idx, idx)] = np.minimum(d, d.T)
    finite = np.isfinite(dist)
    cross = ORACLE_CAP_FACTOR * float(dist[finite].max()) if finite.any() else 1.0
    if cross == 0.0:
        cross = 1.0
    dist[~finite] = cross
    np.fill_diagonal(dist, 0.0)
    return GeodesicOracle(dist, cross, labels)


def _check_pair(x, y):
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("need at least two values")
    return x, y


def pearson(x, y) -> float:
    x, y = _check_pair(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = xc @ xc
    syy = yc @ yc
    if sxx == 0 or syy == 0:
        raise ValueError("correlation undefined for constant input")
    return float(np.clip((xc @ yc) / np.sqrt(sxx * syy), -1.0, 1.0))


def spearman(x, y) -> float:
    """Rank correlation; ties get average ranks."""
    x, y = _check_pair(x, y)
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("correlation undefined for constant input")
    return pearson(rankdata(x), rankdata(y))


def pairwise_upper(points: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Euclidean distances over the strict upper triangle, row-major."""
    y = np.asarray(points, dtype=np.float64)
    n = y.shape[0]
    out = np.empty(n * (n - 1) // 2)
    pos = 0
    for start in range(0, n - 1, chunk):
        for i in range(start, min(start + chunk, n - 1)):
            seg = np.sqrt(np.sum((y[i + 1 :] - y[i]) ** 2, axis=1))
            out[pos : pos + seg.size] = seg
            pos += seg.size
    return out


def geodesic_score(embedding: np.ndarray, oracle: GeodesicOracle) -> float:
    emb = np.asarray(embedding, dtype=np.float64)
    if emb.shape[0] != oracle.n:
        raise ValueError(f"embedding has {emb.shape[0]} rows, oracle {oracle.n}")
    iu = np.triu_indices(oracle.n, 1)
    return spearman(pairwise_upper(emb), oracle.distances[iu])


@dataclass
class EdgeStatReport:
    z: np.ndarray
    mean: float
    std: float
    selected: np.ndarray
    beta: float
    p_value: Optional[float] = None
    reject: Optional[bool] = None

    def flagged(self, threshold: float = 3.0) -> np.ndarray:
        """Selected edges whose z-score exceeds ``threshold``."""
        return self.selected[self.z[self.selected] > threshold]


def _zscore(values: np.ndarray) -> np.ndarray:
    if values.size < 2:
        raise ValueError("need at least two edges")
    sd = values.std(ddof=1)
    # rounding spread on equal values is not a real spread
    if not sd > 1e-12 * np.abs(values).max():
        raise ValueError("z-score undefined: all values are equal")
    return (values - values.mean()) / sd


def _summary(z, selected, beta) -> EdgeStatReport:
    vals = z[selected]
    sd = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
    return EdgeStatReport(z, float(vals.mean()), sd, selected, beta)


def edge_lengths(embedding: np.ndarray, graph) -> np.ndarray:
    y = np.asarray(embedding, dtype=np.float64)
    return np.sqrt(np.sum((y[graph.ei] - y[graph.ej]) ** 2, axis=1))


def _shortest(values, graph, beta) -> np.ndarray:
    count = quantile_count(graph.n_edges, beta)
    return np.lexsort((graph.ej, graph.ei, values))[:count]


def zscored_edge_stats(embedding, graph, metric: MetricMatrix, beta: float) -> EdgeStatReport:
    """Embedded edge lengths, z-scored over all edges, summarized on the metric-shortest edges."""
    if graph.n_edges < 2:
        raise ValueError("need at least two edges")
    z = _zscore(edge_lengths(embedding, graph))
    delta = metric.pairs(graph.ei, graph.ej)
    return _summary(z, _shortest(delta, graph, beta), beta)


def zscored_converse_stats(embedding, graph, metric: MetricMatrix, beta: float) -> EdgeStatReport:
    """Metric values, z-scored over all edges, summarized on the embedding-shortest edges."""
    if graph.n_edges < 2:
        raise ValueError("need at least two edges")
    z = _zscore(metric.pairs(graph.ei, graph.ej))
    lengths = edge_lengths(embedding, graph)
    return _summary(z, _shortest(lengths, graph, beta), beta)


def permutation_test(sample_a, sample_b, resamples: int = 10_000, alpha: float = 0.01, seed: int = 0):
    """One-sided test of mean(a) > mean(b) by label shuffling.

    Resamples are drawn in fixed-size blocks, each seeded from its block index,
    so the result does not depend on how blocks are scheduled.
    """
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    pooled = np.concatenate([a, b])
    na = a.size
    observed = a.mean() - b.mean()
    total = pooled.sum()
    # small slack so equal differences are not lost to summation order
    tol = 1e-12 * max(1.0, np.abs(pooled).max())
    hits = 0
    tag = zlib.crc32(b"permutation")
    for blk, start in enumerate(range(0, resamples, PERM_BLOCK)):
        size = min(PERM_BLOCK, resamples - start)
        rng = np.random.default_rng(np.random.SeedSequence([seed, tag, blk]))
        perm = rng.permuted(np.broadcast_to(pooled, (size, pooled.size)), axis=1)
        sa = perm[:, :na].sum(axis=1)
        diff = sa / na - (total - sa) / b.size
        hits += int(np.count_nonzero(diff >= observed - tol))
    p = (1 + hits) / (1 + resamples)
    return p, bool(p <= alpha)
