"""Neighbor graph construction (k-NN union rule and epsilon-radius)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc
from scipy.spatial.distance import cdist

from embedor.core import PointCloud

_CHUNK = 1024


@dataclass(frozen=True)
class NeighborGraph:
    """Undirected simple graph over point indices.

    ``ei < ej`` for every edge and edges are sorted lexicographically.
    ``indptr``/``indices`` hold the CSR adjacency with sorted neighbor lists.
    """

    n: int
    ei: np.ndarray
    ej: np.ndarray
    euclid: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n, ei, ej, euclid) -> "NeighborGraph":
        ei = np.asarray(ei, dtype=np.int64)
        ej = np.asarray(ej, dtype=np.int64)
        euclid = np.asarray(euclid, dtype=np.float64)
        if np.any(ei == ej):
            raise ValueError("self-loops are not allowed")
        lo, hi = np.minimum(ei, ej), np.maximum(ei, ej)
        if lo.size and (lo.min() < 0 or hi.max() >= n):
            raise ValueError("edge endpoint out of range")
        order = np.lexsort((hi, lo))
        lo, hi, euclid = lo[order], hi[order], euclid[order]
        if lo.size > 1:
            dup = (lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])
            if np.any(dup):
                raise ValueError("duplicate edges")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(n, lo, hi, euclid, indptr, dst[order].astype(np.int64))

    @classmethod
    def from_points(cls, points: np.ndarray, ei, ej) -> "NeighborGraph":
        ei = np.asarray(ei, dtype=np.int64)
        ej = np.asarray(ej, dtype=np.int64)
        euclid = np.linalg.norm(points[ei] - points[ej], axis=1) if ei.size else np.zeros(0)
        return cls.from_edges(points.shape[0], ei, ej, euclid)

    @property
    def n_edges(self) -> int:
        return int(self.ei.size)

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def edge_index(self, i: int, j: int) -> int:
        """Position of edge {i, j} in the edge list; KeyError if absent."""
        lo, hi = min(i, j), max(i, j)
        start = np.searchsorted(self.ei, lo, side="left")
        stop = np.searchsorted(self.ei, lo, side="right")
        pos = start + np.searchsorted(self.ej[start:stop], hi)
        if pos < stop and self.ej[pos] == hi:
            return int(pos)
        raise KeyError((i, j))

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        pos = np.searchsorted(nb, j)
        return bool(pos < nb.size and nb[pos] == j)

    def to_csr(self, weights=None) -> sp.csr_matrix:
        w = self.euclid if weights is None else np.asarray(weights, dtype=np.float64)
        data = np.concatenate([w, w])
        rows = np.concatenate([self.ei, self.ej])
        cols = np.concatenate([self.ej, self.ei])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def with_edges(self, points: np.ndarray, new_i, new_j) -> "NeighborGraph":
        """Return a graph with extra edges; existing edges and repeats are skipped."""
        new_i = np.asarray(new_i, dtype=np.int64)
        new_j = np.asarray(new_j, dtype=np.int64)
        lo = np.concatenate([self.ei, np.minimum(new_i, new_j)])
        hi = np.concatenate([self.ej, np.maximum(new_i, new_j)])
        keep = lo != hi
        keys = np.unique(lo[keep] * self.n + hi[keep])
        return NeighborGraph.from_points(points, keys // self.n, keys % self.n)


def knn_proposals(points: np.ndarray, k: int) -> np.ndarray:
    """Each row lists the k nearest other points, ties broken by lower index."""
    n = points.shape[0]
    out = np.empty((n, k), dtype=np.int64)
    for start in range(0, n, _CHUNK):
        stop = min(n, start + _CHUNK)
        d = cdist(points[start:stop], points)
        d[np.arange(stop - start), np.arange(start, stop)] = -1.0
        # stable sort keeps index order among equal distances
        order = np.argsort(d, axis=1, kind="stable")
        out[start:stop] = order[:, 1 : k + 1]
    return out


def build_knn_graph(cloud: PointCloud, k: int) -> NeighborGraph:
    """k-NN graph: (a, b) is an edge if b is among a's k nearest or vice versa."""
    n = cloud.n
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < N={n}, got {k}")
    prop = knn_proposals(cloud.points, k)
    src = np.repeat(np.arange(n, dtype=np.int64), k)
    dst = prop.ravel()
    keys = np.unique(np.minimum(src, dst) * n + np.maximum(src, dst))
    return NeighborGraph.from_points(cloud.points, keys // n, keys % n)


def build_epsilon_graph(cloud: PointCloud, epsilon: float) -> NeighborGraph:
    """Connect every pair at Euclidean distance <= epsilon."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    pts = cloud.points
    n = cloud.n
    ei, ej = [], []
    for start in range(0, n, _CHUNK):
        stop = min(n, start + _CHUNK)
        d = cdist(pts[start:stop], pts)
        r, c = np.nonzero(d <= epsilon)
        r = r + start
        keep = c > r
        ei.append(r[keep])
        ej.append(c[keep])
    return NeighborGraph.from_points(pts, np.concatenate(ei), np.concatenate(ej))


def connected_components(graph: NeighborGraph) -> np.ndarray:
    """Component id per node, numbered in order of first appearance."""
    _, raw = _cc(graph.to_csr(np.ones(graph.n_edges)), directed=False)
    _, first = np.unique(raw, return_index=True)
    remap = np.empty(first.size, dtype=np.int64)
    remap[np.argsort(first)] = np.arange(first.size)
    return remap[raw]
