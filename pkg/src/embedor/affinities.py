"""High-dimensional affinities and the attraction/repulsion pair samplers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from embedor.core import stage_rng
from embedor.metric import MetricMatrix

MAX_ITER = 200


class PerplexityError(RuntimeError):
    pass


@numba.njit(cache=True)
def _row_perplexity(d2, log_sigma):
    # d2 is shifted so its minimum is 0; entropy is computed in nats
    beta = math.exp(-2.0 * log_sigma)
    s = 0.0
    acc = 0.0
    for v in d2:
        w = math.exp(-beta * v)
        s += w
        acc += w * v
    return math.exp(math.log(s) + beta * acc / s)


@numba.njit(cache=True)
def _calibrate(dist, tau, tol, max_iter):
    n = dist.shape[0]
    log_sigma = np.zeros(n)
    resid = np.zeros(n)
    iters = np.zeros(n, dtype=np.int64)
    d2 = np.empty(n - 1)
    for i in range(n):
        c = 0
        dmin = np.inf
        total = 0.0
        for j in range(n):
            if j != i:
                v = dist[i, j] * dist[i, j]
                d2[c] = v
                c += 1
                total += dist[i, j]
                if v < dmin:
                    dmin = v
        for t in range(n - 1):
            d2[t] -= dmin
        scale = total / (n - 1)
        mid = math.log(scale) if scale > 0 else 0.0
        perp = _row_perplexity(d2, mid)
        it = 1
        if abs(perp - tau) <= tol:
            log_sigma[i] = mid
            resid[i] = abs(perp - tau)
            iters[i] = it
            continue
        # expand a bracket [lo, hi] with perp(lo) < tau < perp(hi)
        lo = mid
        hi = mid
        plo = perp
        phi = perp
        while plo > tau and it < max_iter:
            lo -= 1.0
            plo = _row_perplexity(d2, lo)
            it += 1
        while phi < tau and it < max_iter:
            hi += 1.0
            phi = _row_perplexity(d2, hi)
            it += 1
        best = mid
        bres = abs(perp - tau)
        if abs(plo - tau) < bres:
            best, bres = lo, abs(plo - tau)
        if abs(phi - tau) < bres:
            best, bres = hi, abs(phi - tau)
        while bres > tol and it < max_iter:
            m = 0.5 * (lo + hi)
            pm = _row_perplexity(d2, m)
            it += 1
            if abs(pm - tau) < bres:
                best, bres = m, abs(pm - tau)
            if pm < tau:
                lo = m
            else:
                hi = m
        log_sigma[i] = best
        resid[i] = bres
        iters[i] = it
    return np.exp(log_sigma), resid, iters


def perplexity_of(dist_row: np.ndarray, sigma: float) -> float:
    """Perplexity 2**H of q_j proportional to exp(-(d_j / sigma)**2)."""
    d2 = np.asarray(dist_row, dtype=np.float64) ** 2
    d2 = d2 - d2.min()
    return float(_row_perplexity(d2, math.log(sigma)))


def match_perplexity(metric, tau: float, tol: Optional[float] = None, max_iter: int = MAX_ITER) -> np.ndarray:
    """Per-point bandwidths whose conditional neighbor distribution has perplexity tau.

    Accepts a MetricMatrix or a dense distance matrix.  Bisection runs on
    log(sigma) after expanding a bracket by factors of e.
    """
    dist = metric.dense() if isinstance(metric, MetricMatrix) else np.asarray(metric, dtype=np.float64)
    n = dist.shape[0]
    if not 1 < tau < n:
        raise ValueError(f"perplexity must satisfy 1 < tau < N={n}, got {tau}")
    if tol is None:
        tol = 1e-3 * tau
    sigma, resid, _ = _calibrate(np.ascontiguousarray(dist), float(tau), float(tol), int(max_iter))
    bad = resid > tol
    if np.any(bad):
        worst = int(np.argmax(resid))
        raise PerplexityError(
            f"perplexity search failed for {int(bad.sum())} points; worst residual "
            f"{resid[worst]:.3g} at point {worst}"
        )
    return sigma


@numba.njit(cache=True)
def _sym_kernel(dist, sigma):
    n = dist.shape[0]
    p = np.zeros((n, n))
    for i in range(n):
        si = sigma[i]
        for j in range(i + 1, n):
            d = dist[i, j]
            a = d / si
            b = d / sigma[j]
            v = 0.5 * math.exp(-a * a) + 0.5 * math.exp(-b * b)
            p[i, j] = v
            p[j, i] = v
    return p


def symmetric_affinities(metric, sigma) -> np.ndarray:
    """``p_ij = (exp(-(d/sigma_i)^2) + exp(-(d/sigma_j)^2)) / 2`` with zero diagonal."""
    dist = metric.dense() if isinstance(metric, MetricMatrix) else np.asarray(metric, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise ValueError("bandwidths must be positive")
    return _sym_kernel(np.ascontiguousarray(dist), sigma)


@numba.njit(cache=True)
def _alias_table(w):
    """Vose's alias method for weights ``w`` (need not be normalized)."""
    k = w.size
    total = 0.0
    for v in w:
        total += v
    prob = np.empty(k)
    alias = np.arange(k).astype(np.int64)
    scaled = np.empty(k)
    for t in range(k):
        scaled[t] = w[t] * k / total
    small = np.empty(k, dtype=np.int64)
    large = np.empty(k, dtype=np.int64)
    ns = 0
    nl = 0
    for t in range(k):
        if scaled[t] < 1.0:
            small[ns] = t
            ns += 1
        else:
            large[nl] = t
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    while nl > 0:
        nl -= 1
        prob[large[nl]] = 1.0
    while ns > 0:
        ns -= 1
        prob[small[ns]] = 1.0
    return prob, alias


@dataclass
class AliasSampler:
    """O(1) draws from a discrete distribution over support positions."""

    prob: np.ndarray
    alias: np.ndarray

    @classmethod
    def build(cls, weights) -> "AliasSampler":
        w = np.asarray(weights, dtype=np.float64)
        if w.size == 0 or not np.sum(w) > 0:
            raise ValueError("sampler weights have no mass")
        prob, alias = _alias_table(w)
        return cls(prob, alias)

    @property
    def size(self) -> int:
        return self.prob.size

    def draw(self, rng: np.random.Generator, count: int) -> np.ndarray:
        k = self.prob.size
        slot = np.minimum((rng.random(count) * k).astype(np.int64), k - 1)
        keep = rng.random(count) < self.prob[slot]
        return np.where(keep, slot, self.alias[slot])

    def masses(self) -> np.ndarray:
        """Probability of each support position implied by the table."""
        k = self.prob.size
        m = self.prob.copy()
        np.add.at(m, self.alias, 1.0 - self.prob)
        return m / k


@dataclass
class AffinityModel:
    sigma: np.ndarray
    p: np.ndarray
    Z: float
    repulsion_coeff: float
    support_i: np.ndarray
    support_j: np.ndarray
    pos_sampler: AliasSampler
    neg_sampler: AliasSampler
    neg_total: float

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def support_p(self) -> np.ndarray:
        return self.p[self.support_i, self.support_j]


def _upper_pairs(n: int, flat: Optional[np.ndarray] = None):
    if flat is None:
        i, j = np.triu_indices(n, 1)
        return i.astype(np.int32), j.astype(np.int32)
    # row offsets of the row-major upper triangle
    rows = np.arange(n, dtype=np.int64)
    offsets = rows * n - rows * (rows + 1) // 2
    i = np.searchsorted(offsets, flat, side="right") - 1
    j = flat - offsets[i] + i + 1
    return i.astype(np.int32), j.astype(np.int32)


def build_samplers(
    p: np.ndarray,
    subsample: float = 1.0,
    seed: int = 0,
    sigma: Optional[np.ndarray] = None,
    repulsion_weight: Optional[float] = None,
) -> AffinityModel:
    """Positive/negative pair samplers, Z and the repulsion coefficient.

    With ``subsample < 1`` a uniform sample of ceil(s * N(N-1)/2) pairs is the
    common support of both samplers and of Z.
    """
    p = np.asarray(p, dtype=np.float64)
    n = p.shape[0]
    if not 0 < subsample <= 1:
        raise ValueError("subsample must lie in (0, 1]")
    total_pairs = n * (n - 1) // 2
    if subsample < 1:
        size = int(math.ceil(subsample * total_pairs))
        rng = stage_rng(seed, "subsample")
        flat = np.sort(rng.choice(total_pairs, size=size, replace=False))
        si, sj = _upper_pairs(n, flat)
    else:
        si, sj = _upper_pairs(n)
    ps = p[si, sj]
    Z = math.fsum(ps)
    if not Z > 0:
        raise ValueError("affinities sum to zero on the pair support")
    neg_w = 1.0 - ps
    neg_total = math.fsum(neg_w)
    if not neg_total > 0:
        raise ValueError("negative sampler has zero mass (all affinities equal 1)")
    lam = 1.0 / n**2 if repulsion_weight is None else float(repulsion_weight)
    coeff = (si.size - Z) / Z * lam
    return AffinityModel(
        sigma=np.ones(n) if sigma is None else np.asarray(sigma),
        p=p,
        Z=Z,
        repulsion_coeff=max(coeff, 0.0),
        support_i=si,
        support_j=sj,
        pos_sampler=AliasSampler.build(ps),
        neg_sampler=AliasSampler.build(neg_w),
        neg_total=neg_total,
    )


def build_affinities(metric, tau, subsample=1.0, seed=0, repulsion_weight=None) -> AffinityModel:
    dist = metric.dense() if isinstance(metric, MetricMatrix) else np.asarray(metric, dtype=np.float64)
    sigma = match_perplexity(dist, tau)
    p = symmetric_affinities(dist, sigma)
    return build_samplers(p, subsample, seed, sigma=sigma, repulsion_weight=repulsion_weight)
