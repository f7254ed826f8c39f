"""Curvature energies, edge weights and the shortest-path metric built from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import networkx as nx
import numba
import numpy as np
from scipy.sparse.csgraph import dijkstra

from embedor.core import EdgeRecord, stage_rng
from embedor.curvature import CurvatureMap
from embedor.graph import NeighborGraph, connected_components

KAPPA_FLOOR = -2.0 + 1e-9
CAP_FACTOR = 10.0
_LOG_3_2 = np.log(1.5)
_EPS = np.finfo(np.float64).eps


def edge_energy(kappa, p: float):
    """Energy ``(1 - log((kappa + 2) / 2) / log(3/2)) ** p + 1``.

    Decreasing in kappa with E(1) = 1, E(0) = 2 and a pole at kappa = -2.
    ``0 ** 0`` is taken as 1, so p = 0 gives the constant 2.
    """
    if p < 0:
        raise ValueError("p must be >= 0")
    k = np.asarray(kappa, dtype=np.float64)
    if np.any(~np.isfinite(k)) or np.any(k < -2.0) or np.any(k > 1.0):
        raise ValueError("curvature must lie in [-2, 1]")
    with np.errstate(divide="ignore"):
        base = 1.0 - np.log1p(0.5 * k) / _LOG_3_2
    # pin the kappa = 1 endpoint so that small p still gives exactly 1
    base = np.where(k >= 1.0, 0.0, np.maximum(base, 0.0))
    out = np.power(base, p) + 1.0
    return float(out) if np.ndim(out) == 0 else out


def edge_weights(graph: NeighborGraph, curvature: CurvatureMap, p: float) -> np.ndarray:
    """Edge weight ``euclid * E(kappa; p) / 7`` with kappa clamped just above -2."""
    kappa = np.asarray(curvature.kappa, dtype=np.float64)
    if kappa.shape != (graph.n_edges,):
        raise ValueError(f"curvature has {kappa.shape} values for {graph.n_edges} edges")
    kappa = np.maximum(kappa, KAPPA_FLOOR)
    return graph.euclid * edge_energy(kappa, p) / 7.0


@numba.njit(cache=True)
def _landmark_rows(factor, rows, cols, comp, lcomp, cap):
    l = factor.shape[0]
    out = np.empty(rows.size)
    for t in range(rows.size):
        x = rows[t]
        y = cols[t]
        if x == y:
            out[t] = 0.0
            continue
        if comp[x] != comp[y]:
            out[t] = cap
            continue
        best = 0.0
        for u in range(l):
            if lcomp[u] != comp[x]:
                continue
            a = factor[u, x]
            b = factor[u, y]
            diff = abs(a - b)
            # slack covers float rounding accumulated along Dijkstra paths
            diff -= (4.0 * factor.shape[1] + 4.0) * 2.220446049250313e-16 * (a + b)
            if diff > best:
                best = diff
        out[t] = best
    return out


@numba.njit(cache=True)
def _landmark_dense(factor, comp, lcomp, cap):
    n = factor.shape[1]
    l = factor.shape[0]
    out = np.zeros((n, n))
    slack = (4.0 * n + 4.0) * 2.220446049250313e-16
    for x in range(n):
        for y in range(x + 1, n):
            if comp[x] != comp[y]:
                v = cap
            else:
                v = 0.0
                for u in range(l):
                    if lcomp[u] != comp[x]:
                        continue
                    a = factor[u, x]
                    b = factor[u, y]
                    diff = abs(a - b) - slack * (a + b)
                    if diff > v:
                        v = diff
            out[x, y] = v
            out[y, x] = v
    return out


@dataclass
class MetricMatrix:
    """Pairwise metric, either dense (exact) or landmark-factored."""

    mode: str
    finite_cap: float
    dense_matrix: Optional[np.ndarray] = None
    factor: Optional[np.ndarray] = None  # l x N distances to landmarks
    landmarks: Optional[np.ndarray] = None
    components: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        if self.mode == "exact":
            return self.dense_matrix.shape[0]
        return self.factor.shape[1]

    def dense(self) -> np.ndarray:
        if self.mode == "exact":
            return self.dense_matrix
        return _landmark_dense(self.factor, self.components, self.components[self.landmarks], self.finite_cap)

    def pairs(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if self.mode == "exact":
            return self.dense_matrix[rows, cols]
        return _landmark_rows(
            self.factor, rows, cols, self.components, self.components[self.landmarks], self.finite_cap
        )


def _finite_cap(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    top = float(finite.max()) if finite.size else 0.0
    return CAP_FACTOR * top if top > 0 else 1.0


def apsp_exact(graph: NeighborGraph, weights) -> MetricMatrix:
    """All-pairs weighted shortest paths; disconnected pairs get ``10 * max finite``."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (graph.n_edges,):
        raise ValueError("weights misaligned with edges")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    d = dijkstra(graph.to_csr(w), directed=False)
    np.minimum(d, d.T, out=d)
    cap = _finite_cap(d)
    d[~np.isfinite(d)] = cap
    np.fill_diagonal(d, 0.0)
    return MetricMatrix("exact", cap, dense_matrix=d)


def select_landmarks(graph: NeighborGraph, weights, l: int, strategy: str = "random", seed: int = 0) -> np.ndarray:
    """Pick ``l`` landmark nodes uniformly at random or by estimated betweenness."""
    n = graph.n
    if not 1 <= l <= n:
        raise ValueError(f"need 1 <= l <= N={n}, got {l}")
    if l == n:
        return np.arange(n)
    rng = stage_rng(seed, "landmarks")
    if strategy == "random":
        return np.sort(rng.choice(n, size=l, replace=False))
    if strategy != "betweenness":
        raise ValueError(f"unknown landmark strategy {strategy!r}")
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_weighted_edges_from(zip(graph.ei.tolist(), graph.ej.tolist(), np.asarray(weights).tolist()))
    k = min(64, n)
    bc = nx.betweenness_centrality(g, k=k if k < n else None, weight="weight", seed=int(rng.integers(2**31)))
    score = np.array([bc[v] for v in range(n)])
    # highest score first, lower index on ties
    order = np.lexsort((np.arange(n), -score))
    return np.sort(order[:l])


def apsp_landmark(graph: NeighborGraph, weights, landmarks) -> MetricMatrix:
    """Landmark lower bound ``max_u |d(x, u) - d(y, u)|`` from single-source runs."""
    landmarks = np.asarray(landmarks, dtype=np.int64)
    if landmarks.size == 0:
        raise ValueError("landmark set is empty")
    w = np.asarray(weights, dtype=np.float64)
    factor = dijkstra(graph.to_csr(w), directed=False, indices=landmarks)
    comp = connected_components(graph)
    cap = _finite_cap(factor)
    factor = np.where(np.isfinite(factor), factor, 0.0)
    return MetricMatrix("landmark", cap, factor=factor, landmarks=landmarks, components=comp)


def build_metric(graph: NeighborGraph, weights, landmarks: int = 0, strategy: str = "random", seed: int = 0) -> MetricMatrix:
    if landmarks == 0:
        return apsp_exact(graph, weights)
    marks = select_landmarks(graph, weights, landmarks, strategy, seed)
    return apsp_landmark(graph, weights, marks)


def quantile_count(n_edges: int, beta: float) -> int:
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    # guard against 0.33 * 100 = 32.999999...
    return int(np.floor(beta * n_edges + 1e-9))


def shortest_quantile_edges(
    graph: NeighborGraph,
    metric: MetricMatrix,
    beta: float,
    curvature: Optional[CurvatureMap] = None,
    weights=None,
    energies=None,
) -> list[EdgeRecord]:
    """The floor(beta * |E|) edges whose endpoints are closest under the metric."""
    count = quantile_count(graph.n_edges, beta)
    delta = metric.pairs(graph.ei, graph.ej)
    order = np.lexsort((graph.ej, graph.ei, delta))[:count]
    return [_record(graph, e, delta, curvature, weights, energies) for e in order]


def edge_records(graph, metric=None, curvature=None, weights=None, energies=None) -> list[EdgeRecord]:
    delta = metric.pairs(graph.ei, graph.ej) if metric is not None else None
    return [_record(graph, e, delta, curvature, weights, energies) for e in range(graph.n_edges)]


def _record(graph, e, delta, curvature, weights, energies) -> EdgeRecord:
    return EdgeRecord(
        int(graph.ei[e]),
        int(graph.ej[e]),
        float(graph.euclid[e]),
        kappa=None if curvature is None else float(curvature.kappa[e]),
        energy=None if energies is None else float(energies[e]),
        weight=None if weights is None else float(weights[e]),
        delta=None if delta is None else float(delta[e]),
    )
