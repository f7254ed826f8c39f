"""Synthetic manifolds with component labels, and the two noise models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from embedor.core import PointCloud, stage_rng
from embedor.graph import NeighborGraph

DATASETS = ("circles", "moons", "swiss_roll", "tori", "tree", "gaussian_mixture")

# Geometry defaults; every key can be overridden through ``params``.
DEFAULTS = {
    "circles": {"radii": (1.0, 2.0)},
    "moons": {"radius": 1.0},
    "swiss_roll": {"height": 21.0, "turns": (1.5, 4.5)},
    "tori": {"major": 1.0, "minor": 0.25},
    "tree": {"depth": 3, "length": 1.0, "shrink": 0.8, "angle": math.pi / 4},
    "gaussian_mixture": {"dim": 2, "stds": (0.1, 0.2, 0.5), "centers": (0.0, 2.0 / 3.0, 2.0)},
}


def _circles(n, rng, radii):
    radii = np.asarray(radii, dtype=float)
    counts = _split(n, radii / radii.sum())
    pts, labels = [], []
    for c, (r, m) in enumerate(zip(radii, counts)):
        t = rng.uniform(0, 2 * np.pi, m)
        pts.append(np.column_stack([r * np.cos(t), r * np.sin(t)]))
        labels.append(np.full(m, c))
    return np.vstack(pts), np.concatenate(labels)


def _moons(n, rng, radius):
    m0, m1 = _split(n, [0.5, 0.5])
    t0 = rng.uniform(0, np.pi, m0)
    t1 = rng.uniform(0, np.pi, m1)
    upper = np.column_stack([radius * np.cos(t0), radius * np.sin(t0)])
    lower = np.column_stack([radius * (1 - np.cos(t1)), radius * (0.5 - np.sin(t1))])
    return np.vstack([upper, lower]), np.repeat([0, 1], [m0, m1])


def _swiss_roll(n, rng, height, turns):
    t = np.pi * rng.uniform(turns[0], turns[1], n)
    h = height * rng.uniform(0, 1, n)
    return np.column_stack([t * np.cos(t), h, t * np.sin(t)]), np.zeros(n, dtype=int)


def _torus_surface(m, rng, major, minor):
    # area element is proportional to major + minor * cos(phi)
    phi = np.empty(m)
    filled = 0
    while filled < m:
        cand = rng.uniform(0, 2 * np.pi, 2 * (m - filled) + 16)
        keep = cand[rng.uniform(0, major + minor, cand.size) < major + minor * np.cos(cand)]
        take = min(keep.size, m - filled)
        phi[filled : filled + take] = keep[:take]
        filled += take
    theta = rng.uniform(0, 2 * np.pi, m)
    ring = major + minor * np.cos(phi)
    return np.column_stack([ring * np.cos(theta), ring * np.sin(theta), minor * np.sin(phi)])


def _tori(n, rng, major, minor):
    m0, m1 = _split(n, [0.5, 0.5])
    a = _torus_surface(m0, rng, major, minor)
    b = _torus_surface(m1, rng, major, minor)
    # second torus lies in the xz-plane, threaded through the first
    b = np.column_stack([b[:, 0] + major, b[:, 2], b[:, 1]])
    return np.vstack([a, b]), np.repeat([0, 1], [m0, m1])


def tree_segments(depth, length, shrink, angle):
    """Endpoints of a binary tree of segments; children alternate their bending plane."""
    segs = []
    frontier = [(np.zeros(3), np.array([0.0, 0.0, 1.0]), length, 0)]
    for level in range(depth):
        nxt = []
        for start, direction, ln, _ in frontier:
            end = start + ln * direction
            segs.append((start, end))
            if level + 1 < depth:
                axis = np.array([1.0, 0.0, 0.0]) if level % 2 == 0 else np.array([0.0, 1.0, 0.0])
                for sign in (1.0, -1.0):
                    nxt.append((end, _rotate(direction, axis, sign * angle), ln * shrink, level + 1))
        frontier = nxt
    return segs


def _rotate(v, axis, ang):
    axis = axis / np.linalg.norm(axis)
    return v * np.cos(ang) + np.cross(axis, v) * np.sin(ang) + axis * (axis @ v) * (1 - np.cos(ang))


def _tree(n, rng, depth, length, shrink, angle):
    segs = tree_segments(depth, length, shrink, angle)
    lens = np.array([np.linalg.norm(b - a) for a, b in segs])
    which = rng.choice(len(segs), size=n, p=lens / lens.sum())
    u = rng.uniform(0, 1, n)
    starts = np.array([s[0] for s in segs])[which]
    ends = np.array([s[1] for s in segs])[which]
    return starts + u[:, None] * (ends - starts), np.zeros(n, dtype=int)


def _gaussian_mixture(n, rng, dim, stds, centers):
    counts = _split(n, np.full(len(stds), 1.0 / len(stds)))
    pts, labels = [], []
    for c, (sd, mu, m) in enumerate(zip(stds, centers, counts)):
        x = rng.normal(0.0, sd, size=(m, dim))
        x[:, 0] += mu
        pts.append(x)
        labels.append(np.full(m, c))
    return np.vstack(pts), np.concatenate(labels)


def _split(n, weights):
    w = np.asarray(weights, dtype=float)
    counts = np.floor(n * w / w.sum()).astype(int)
    counts[: n - counts.sum()] += 1
    return counts


_GENERATORS = {
    "circles": _circles,
    "moons": _moons,
    "swiss_roll": _swiss_roll,
    "tori": _tori,
    "tree": _tree,
    "gaussian_mixture": _gaussian_mixture,
}


def generate(dataset: str, n: int, params: Optional[dict] = None, seed: int = 0) -> PointCloud:
    """Sample ``n`` points from a named synthetic manifold with component labels."""
    if dataset not in _GENERATORS:
        raise ValueError(f"unknown dataset {dataset!r}; choose from {', '.join(DATASETS)}")
    if n < 10:
        raise ValueError("need n >= 10")
    kw = dict(DEFAULTS[dataset])
    if params:
        unknown = set(params) - set(kw)
        if unknown:
            raise ValueError(f"unknown parameters for {dataset}: {sorted(unknown)}")
        kw.update(params)
    rng = stage_rng(seed, "synth")
    pts, labels = _GENERATORS[dataset](n, rng, **kw)
    return PointCloud(pts, labels, name=dataset)


def perturb_ambient(cloud: PointCloud, std: float, seed: int = 0) -> PointCloud:
    """Add i.i.d. N(0, std^2) noise to every coordinate; labels are kept."""
    if std < 0:
        raise ValueError("noise std must be >= 0")
    if std == 0:
        return PointCloud(cloud.points.copy(), cloud.labels, cloud.name)
    rng = stage_rng(seed, "ambient_noise")
    return PointCloud(cloud.points + rng.normal(0.0, std, cloud.points.shape), cloud.labels, cloud.name)


@dataclass
class NoiseParams:
    model: str = "adjacency"
    std: float = 0.0
    p_max: float = 0.1
    sigma: float = 0.7
    alpha: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        if self.model not in ("ambient", "adjacency"):
            raise ValueError(f"unknown noise model {self.model!r}")
        if self.std < 0:
            raise ValueError("std must be >= 0")
        if not 0 <= self.p_max <= 1:
            raise ValueError("p_max must lie in [0, 1]")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")


@dataclass
class AdjacencyNoise:
    graph: NeighborGraph
    s: np.ndarray
    nu: np.ndarray
    added_edges: int
    s_max: float = field(init=False)

    def __post_init__(self):
        self.s_max = float(self.s.max()) if self.s.size else 0.0


def opposite_component_distance(points: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Distance from each point to the nearest sample with a different label."""
    out = np.empty(points.shape[0])
    uniq = np.unique(labels)
    if uniq.size < 2:
        raise ValueError("adjacency noise needs at least two labeled components")
    for c in uniq:
        inside = labels == c
        tree = cKDTree(points[~inside])
        out[inside], _ = tree.query(points[inside], k=1)
    return out


def perturb_adjacency(graph: NeighborGraph, cloud: PointCloud, params: NoiseParams, seed: int = 0) -> AdjacencyNoise:
    """Add noisy edges between points flagged by distance to other components."""
    if cloud.labels is None:
        raise ValueError("adjacency noise needs component labels")
    pts = cloud.points
    n = cloud.n
    dist = opposite_component_distance(pts, cloud.labels)
    s = params.p_max * np.exp(-(dist**2) / params.sigma**2)
    rng = stage_rng(seed, "graph_noise")
    nu = rng.random(n) < s
    flagged = np.flatnonzero(nu)
    draws = int(math.ceil(params.alpha * n**params.beta))
    new_i, new_j = [], []
    if flagged.size > 1 and params.p_max > 0:
        fp = pts[flagged]
        for pos, i in enumerate(flagged):
            logits = -np.sum((fp - pts[i]) ** 2, axis=1) / params.sigma**2
            logits[pos] = -np.inf
            w = np.exp(logits - logits.max())
            partners = rng.choice(flagged, size=draws, replace=True, p=w / w.sum())
            new_i.append(np.full(draws, i))
            new_j.append(partners)
    if not new_i:
        return AdjacencyNoise(graph, s, nu, 0)
    noisy = graph.with_edges(pts, np.concatenate(new_i), np.concatenate(new_j))
    return AdjacencyNoise(noisy, s, nu, noisy.n_edges - graph.n_edges)


def count_bridging_edges(graph_or_pairs, labels) -> int:
    """Number of edges whose endpoints carry different labels."""
    labels = np.asarray(labels)
    if isinstance(graph_or_pairs, NeighborGraph):
        ei, ej = graph_or_pairs.ei, graph_or_pairs.ej
    else:
        pairs = list(graph_or_pairs)
        if not pairs:
            return 0
        ei = np.array([getattr(e, "i", None) if hasattr(e, "i") else e[0] for e in pairs])
        ej = np.array([getattr(e, "j", None) if hasattr(e, "j") else e[1] for e in pairs])
    return int(np.count_nonzero(labels[ei] != labels[ej]))
