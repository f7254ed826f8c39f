"""Per-edge Ollivier-Ricci curvature (exact) and augmented Forman-Ricci curvature.

The Ollivier-Ricci value of edge (i, j) is ``1 - W1(mu_i, mu_j)`` where ``mu_i`` is
uniform on the neighbors of i other than i and j, and ground distances are hop
counts in the whole graph.  Every such hop distance is at most 3 (a-i-j-b), so the
ground metric only needs neighborhoods up to depth two.  The transport problem is
solved as an integer min-cost flow after scaling both measures to the common
denominator ``lcm(|supp mu_i|, |supp mu_j|)``, which makes the optimum exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numba
import numpy as np

from embedor.graph import NeighborGraph

_BIG = np.int64(1) << 40


@dataclass(frozen=True)
class CurvatureMap:
    kappa: np.ndarray
    backend: str  # "orc" or "frc-normalized"
    raw: np.ndarray | None = None  # unnormalized Forman values for "frc-normalized"


@numba.njit(cache=True)
def _lcm(a, b):
    x, y = a, b
    while y:
        x, y = y, x % y
    return a // x * b


@numba.njit(cache=True)
def _transport_cost(cost, na, nb, total):
    """Min-cost flow for uniform supplies total/na and demands total/nb.

    Successive shortest paths with node potentials; costs are small nonnegative
    integers so every quantity stays integral.
    """
    sa = total // na
    sb = total // nb
    supply = np.full(na, sa, dtype=np.int64)
    demand = np.full(nb, sb, dtype=np.int64)
    flow = np.zeros((na, nb), dtype=np.int64)
    # potentials: index 0..na-1 for A, na..na+nb-1 for B, sink last
    nv = na + nb + 1
    pot = np.zeros(nv, dtype=np.int64)
    dist = np.empty(nv, dtype=np.int64)
    prev = np.empty(nv, dtype=np.int64)
    done = np.empty(nv, dtype=np.bool_)
    remaining = total
    result = np.int64(0)
    sink = na + nb
    while remaining > 0:
        for v in range(nv):
            dist[v] = _BIG
            prev[v] = -1
            done[v] = False
        # super-source arcs have cost 0; the source potential is fixed at 0
        for a in range(na):
            if supply[a] > 0:
                dist[a] = -pot[a]
                prev[a] = -2
        while True:
            u = -1
            best = _BIG
            for v in range(nv):
                if not done[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u == -1 or u == sink:
                if u == sink:
                    done[u] = True
                break
            done[u] = True
            if u < na:
                for b in range(nb):
                    v = na + b
                    if not done[v]:
                        nd = dist[u] + cost[u, b] + pot[u] - pot[v]
                        if nd < dist[v]:
                            dist[v] = nd
                            prev[v] = u
            else:
                b = u - na
                for a in range(na):
                    if flow[a, b] > 0 and not done[a]:
                        nd = dist[u] - cost[a, b] + pot[u] - pot[a]
                        if nd < dist[a]:
                            dist[a] = nd
                            prev[a] = u
                if demand[b] > 0 and not done[sink]:
                    nd = dist[u] + pot[u] - pot[sink]
                    if nd < dist[sink]:
                        dist[sink] = nd
                        prev[sink] = u
        dt = dist[sink]
        for v in range(nv):
            if dist[v] < dt:
                pot[v] += dist[v]
            else:
                pot[v] += dt
        # bottleneck along the path sink <- b <- a <- ... <- a0
        push = remaining
        v = prev[sink]
        push = min(push, demand[v - na])
        while True:
            a = prev[v]
            if prev[a] == -2:
                push = min(push, supply[a])
                break
            push = min(push, flow[a, prev[a] - na])
            v = prev[a]
        v = prev[sink]
        demand[v - na] -= push
        while True:
            a = prev[v]
            b = v - na
            flow[a, b] += push
            result += push * cost[a, b]
            if prev[a] == -2:
                supply[a] -= push
                break
            bb = prev[a] - na
            flow[a, bb] -= push
            result -= push * cost[a, bb]
            v = prev[a]
        remaining -= push
    return result


@numba.njit(cache=True)
def _orc_kernel(indptr, indices, ei, ej, n):
    m = ei.size
    num = np.zeros(m, dtype=np.int64)  # total transport cost
    den = np.zeros(m, dtype=np.int64)  # common denominator; 0 marks a degenerate support
    stamp = np.full(n, -1, dtype=np.int64)
    tick = 0
    for e in range(m):
        i = ei[e]
        j = ej[e]
        na = 0
        for t in range(indptr[i], indptr[i + 1]):
            if indices[t] != j:
                na += 1
        nb = 0
        for t in range(indptr[j], indptr[j + 1]):
            if indices[t] != i:
                nb += 1
        if na == 0 or nb == 0:
            continue
        A = np.empty(na, dtype=np.int64)
        B = np.empty(nb, dtype=np.int64)
        c = 0
        for t in range(indptr[i], indptr[i + 1]):
            if indices[t] != j:
                A[c] = indices[t]
                c += 1
        c = 0
        for t in range(indptr[j], indptr[j + 1]):
            if indices[t] != i:
                B[c] = indices[t]
                c += 1
        cost = np.empty((na, nb), dtype=np.int64)
        for x in range(na):
            a = A[x]
            tick += 1
            for t in range(indptr[a], indptr[a + 1]):
                stamp[indices[t]] = tick
            for y in range(nb):
                b = B[y]
                if b == a:
                    cost[x, y] = 0
                elif stamp[b] == tick:
                    cost[x, y] = 1
                else:
                    d = 3
                    for t in range(indptr[b], indptr[b + 1]):
                        if stamp[indices[t]] == tick:
                            d = 2
                            break
                    cost[x, y] = d
        total = _lcm(na, nb)
        num[e] = _transport_cost(cost, na, nb, total)
        den[e] = total
    return num, den


def _orc_fractions(graph: NeighborGraph, ei: np.ndarray, ej: np.ndarray):
    return _orc_kernel(graph.indptr, graph.indices, ei.astype(np.int64), ej.astype(np.int64), graph.n)


def orc_edge_exact(graph: NeighborGraph, edge) -> Fraction:
    """Exact Ollivier-Ricci curvature of one edge as a rational number."""
    i, j = int(edge[0]), int(edge[1])
    if not graph.has_edge(i, j):
        raise ValueError(f"({i}, {j}) is not an edge")
    num, den = _orc_fractions(graph, np.array([i]), np.array([j]))
    if den[0] == 0:
        return Fraction(0)
    return 1 - Fraction(int(num[0]), int(den[0]))


def orc_edge(graph: NeighborGraph, edge) -> float:
    """Ollivier-Ricci curvature of edge (i, j), in [-2, 1].

    If either endpoint has no neighbor besides the other endpoint, the measure
    has empty support and the curvature is defined as 0.
    """
    return float(orc_edge_exact(graph, edge))


def orc_all(graph: NeighborGraph) -> CurvatureMap:
    num, den = _orc_fractions(graph, graph.ei, graph.ej)
    kappa = np.zeros(graph.n_edges)
    ok = den > 0
    kappa[ok] = 1.0 - num[ok] / den[ok]
    return CurvatureMap(kappa, "orc")


@numba.njit(cache=True)
def _triangles(indptr, indices, ei, ej):
    out = np.zeros(ei.size, dtype=np.int64)
    for e in range(ei.size):
        p, q = indptr[ei[e]], indptr[ej[e]]
        pe, qe = indptr[ei[e] + 1], indptr[ej[e] + 1]
        c = 0
        while p < pe and q < qe:
            if indices[p] == indices[q]:
                c += 1
                p += 1
                q += 1
            elif indices[p] < indices[q]:
                p += 1
            else:
                q += 1
        out[e] = c
    return out


def forman_raw(graph: NeighborGraph) -> np.ndarray:
    """Augmented Forman-Ricci curvature 4 - deg(i) - deg(j) + 3 * triangles(e)."""
    deg = graph.degree
    tri = _triangles(graph.indptr, graph.indices, graph.ei, graph.ej)
    return (4 - deg[graph.ei] - deg[graph.ej] + 3 * tri).astype(np.float64)


def frc_all(graph: NeighborGraph) -> CurvatureMap:
    """Forman-Ricci curvature min-max rescaled onto [-2, 1] (all zero if constant)."""
    raw = forman_raw(graph)
    if raw.size == 0:
        return CurvatureMap(raw.copy(), "frc-normalized", raw)
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        kappa = np.zeros_like(raw)
    else:
        kappa = np.clip(-2.0 + 3.0 * (raw - lo) / (hi - lo), -2.0, 1.0)
    return CurvatureMap(kappa, "frc-normalized", raw)


def curvature(graph: NeighborGraph, backend: str = "orc") -> CurvatureMap:
    if backend == "orc":
        return orc_all(graph)
    if backend == "frc":
        return frc_all(graph)
    raise ValueError(f"unknown curvature backend {backend!r}")
