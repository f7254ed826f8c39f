"""Laplacian-eigenmap initialization and the stochastic attraction/repulsion loop."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from embedor.affinities import AffinityModel
from embedor.core import RunConfig, stage_rng

INIT_STD = 1e-2
JITTER = 1e-4
COINCIDENT = 1e-12
_DENSE_EIG_LIMIT = 1500
_CHUNK = 1 << 20


class EmbeddingError(RuntimeError):
    pass


@dataclass
class EmbeddingState:
    Y: np.ndarray
    iteration: int = 0
    eta: float = 0.0
    seed: int = 0
    trace: list = field(default_factory=list)  # (iteration, objective estimate, eta)
    labels: Optional[np.ndarray] = None
    affinities: Optional[AffinityModel] = None

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def dim(self) -> int:
        return self.Y.shape[1]


def spectral_init(p: np.ndarray, m: int, seed: int = 0) -> np.ndarray:
    """Eigenmap of the affinity graph, columns scaled to standard deviation 1e-2.

    Uses the m leading nontrivial eigenvectors of D^-1/2 P D^-1/2 (the trivial
    direction D^1/2 1 is deflated below the spectrum) mapped back by D^-1/2.
    """
    p = np.asarray(p, dtype=np.float64)
    n = p.shape[0]
    if m >= n:
        raise ValueError("embedding dimension must be < N")
    if np.any(p < 0) or not np.allclose(p, p.T, rtol=0, atol=1e-12):
        raise ValueError("affinities must be symmetric and nonnegative")
    deg = p.sum(axis=1)
    inv_sqrt = np.zeros(n)
    inv_sqrt[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    u = np.sqrt(deg)
    u /= np.linalg.norm(u)
    if n <= _DENSE_EIG_LIMIT:
        a = inv_sqrt[:, None] * p * inv_sqrt[None, :] - 3.0 * np.outer(u, u)
        vals, vecs = scipy.linalg.eigh(a, subset_by_index=[n - m, n - 1])
        resid = np.linalg.norm(a @ vecs - vecs * vals, axis=0)
    else:
        def matvec(x):
            x = np.ravel(x)
            return inv_sqrt * (p @ (inv_sqrt * x)) - 3.0 * u * (u @ x)

        op = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
        v0 = stage_rng(seed, "spectral").standard_normal(n)
        try:
            vals, vecs = eigsh(op, k=m, which="LA", v0=v0, tol=1e-8, ncv=min(n, max(2 * m + 1, 24)), maxiter=50 * n)
        except ArpackNoConvergence as exc:
            raise EmbeddingError(f"eigensolver did not converge: {len(exc.eigenvalues)} of {m} found") from exc
        resid = np.array([np.linalg.norm(matvec(vecs[:, c]) - vals[c] * vecs[:, c]) for c in range(m)])
    if np.any(resid > 1e-5):
        raise EmbeddingError(f"eigenvector residuals too large: {resid}")
    # leading eigenvalue first
    vecs = vecs[:, np.argsort(-vals, kind="stable")]
    y = inv_sqrt[:, None] * vecs
    for c in range(m):
        col = y[:, c]
        sd = col.std()
        if not sd > 0:
            raise EmbeddingError("degenerate eigenvector (zero spread)")
        if col[np.argmax(np.abs(col))] < 0:
            col = -col
        y[:, c] = col * (INIT_STD / sd)
    return y


def low_dim_kernel(y_i, y_j) -> float:
    """Student-t similarity ``1 / (1 + |y_i - y_j|^2)``."""
    d = np.asarray(y_i, dtype=np.float64) - np.asarray(y_j, dtype=np.float64)
    return 1.0 / (1.0 + float(d @ d))


def grad_log_f(y_i, y_j) -> np.ndarray:
    """Gradient of log f_ij with respect to y_i."""
    d = np.asarray(y_i, dtype=np.float64) - np.asarray(y_j, dtype=np.float64)
    return -2.0 * d / (1.0 + d @ d)


def grad_log_1mf(y_i, y_j) -> np.ndarray:
    """Gradient of log(1 - f_ij) with respect to y_i (singular at y_i = y_j)."""
    d = np.asarray(y_i, dtype=np.float64) - np.asarray(y_j, dtype=np.float64)
    r2 = d @ d
    return 2.0 * d / (r2 * (1.0 + r2))


@numba.njit(cache=True)
def _splitmix(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return z ^ (z >> np.uint64(31)), x


@numba.njit(cache=True)
def _jitter(y, i, key, out):
    """Random displacement of length JITTER, a pure function of ``key``."""
    m = y.shape[1]
    state = np.uint64(key)
    norm = 0.0
    while norm < 1e-300:
        norm = 0.0
        for c in range(m):
            z, state = _splitmix(state)
            u1 = (float(z >> np.uint64(11)) + 0.5) / 9007199254740992.0
            z, state = _splitmix(state)
            u2 = float(z >> np.uint64(11)) / 9007199254740992.0
            out[c] = math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
            norm += out[c] * out[c]
    norm = math.sqrt(norm)
    for c in range(m):
        y[i, c] += JITTER * out[c] / norm


@numba.njit(cache=True)
def _attract(y, i, j, eta):
    m = y.shape[1]
    r2 = 0.0
    for c in range(m):
        d = y[i, c] - y[j, c]
        r2 += d * d
    log_f = -math.log1p(r2)
    g = -2.0 * eta / (1.0 + r2)
    for c in range(m):
        y[i, c] += g * (y[i, c] - y[j, c])
    r2 = 0.0
    for c in range(m):
        d = y[j, c] - y[i, c]
        r2 += d * d
    g = -2.0 * eta / (1.0 + r2)
    for c in range(m):
        y[j, c] += g * (y[j, c] - y[i, c])
    return log_f


@numba.njit(cache=True)
def _repel(y, i, j, step, key, buf):
    m = y.shape[1]
    r2 = 0.0
    for c in range(m):
        d = y[i, c] - y[j, c]
        r2 += d * d
    if math.sqrt(r2) < COINCIDENT:
        _jitter(y, i, key, buf)
        r2 = 0.0
        for c in range(m):
            d = y[i, c] - y[j, c]
            r2 += d * d
    log_1mf = math.log(r2) - math.log1p(r2)
    g = 2.0 * step / (r2 * (1.0 + r2))
    for c in range(m):
        y[i, c] += g * (y[i, c] - y[j, c])
    r2 = 0.0
    for c in range(m):
        d = y[j, c] - y[i, c]
        r2 += d * d
    g = 2.0 * step / (r2 * (1.0 + r2))
    for c in range(m):
        y[j, c] += g * (y[j, c] - y[i, c])
    return log_1mf


@numba.njit(cache=True)
def _run(y, pi, pj, ni, nj, t0, total, eta0, coeff, seed, block, sums, counts):
    """Run iterations t0 .. t0 + len(pi) - 1; return -1 or the failing iteration."""
    buf = np.empty(y.shape[1])
    span = max(total - 1, 1)
    for s in range(pi.size):
        t = t0 + s
        eta = eta0 * (1.0 - 0.99 * t / span)
        log_f = _attract(y, pi[s], pj[s], eta)
        key = np.uint64(seed) * np.uint64(0x100000001B3) + np.uint64(t)
        log_1mf = _repel(y, ni[s], nj[s], eta * coeff, key, buf)
        b = t // block
        sums[b] += log_f + coeff * log_1mf
        counts[b] += 1
        for idx in (pi[s], pj[s], ni[s], nj[s]):
            for c in range(y.shape[1]):
                if not math.isfinite(y[idx, c]):
                    return t
    return -1


def sgd_step(state: EmbeddingState, positive=None, negative=None, eta: float = 1.0, coeff=None) -> EmbeddingState:
    """One attractive and/or repulsive update, applied in place and returned."""
    y = state.Y
    if coeff is None:
        coeff = state.affinities.repulsion_coeff if state.affinities is not None else 1.0
    if positive is not None:
        _attract(y, int(positive[0]), int(positive[1]), float(eta))
    if negative is not None:
        key = np.uint64(state.seed) * np.uint64(0x100000001B3) + np.uint64(state.iteration)
        _repel(y, int(negative[0]), int(negative[1]), float(eta) * float(coeff), key, np.empty(y.shape[1]))
    state.iteration += 1
    state.eta = eta
    return state


def default_iterations(n: int) -> int:
    return 400 * n


def optimize(
    affinities: AffinityModel,
    config: RunConfig,
    init: Optional[np.ndarray] = None,
    verbose: bool = False,
) -> EmbeddingState:
    """Alg-style loop: one positive and one negative pair per iteration.

    The learning rate decays linearly from ``config.learning_rate`` to 1% of it.
    """
    n = affinities.n
    total = default_iterations(n) if config.iters is None else int(config.iters)
    if init is None:
        y = spectral_init(affinities.p, config.dim, seed=config.seed)
    else:
        y = np.array(init, dtype=np.float64, copy=True)
    state = EmbeddingState(y, 0, config.learning_rate, config.seed, affinities=affinities)
    if total <= 0:
        return state
    rng = stage_rng(config.seed, "sgd")
    block = max(1, -(-total // 20))
    nblocks = -(-total // block)
    sums = np.zeros(nblocks)
    counts = np.zeros(nblocks, dtype=np.int64)
    si = affinities.support_i
    sj = affinities.support_j
    coeff = float(affinities.repulsion_coeff)
    reported = 0
    for t0 in range(0, total, _CHUNK):
        size = min(_CHUNK, total - t0)
        pos = affinities.pos_sampler.draw(rng, size)
        neg = affinities.neg_sampler.draw(rng, size)
        fail = _run(
            y, si[pos], sj[pos], si[neg], sj[neg], t0, total, float(config.learning_rate), coeff,
            int(config.seed) & 0xFFFFFFFF, block, sums, counts,
        )
        if fail >= 0:
            raise EmbeddingError(f"non-finite coordinate at iteration {fail}")
        done = t0 + size
        while reported < nblocks and min((reported + 1) * block, total) <= done:
            it = min((reported + 1) * block, total)
            eta = config.learning_rate * (1.0 - 0.99 * (it - 1) / max(total - 1, 1))
            entry = (it, float(sums[reported] / max(counts[reported], 1)), eta)
            state.trace.append(entry)
            if verbose:
                print(f"{entry[0]},{entry[1]:.9g},{entry[2]:.6g}", file=sys.stderr)
            reported += 1
    state.iteration = total
    state.eta = config.learning_rate * 0.01
    return state
