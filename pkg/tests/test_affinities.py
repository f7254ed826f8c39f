import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.spatial.distance import cdist
from scipy.stats import chi2

from embedor.affinities import (
    AliasSampler,
    PerplexityError,
    build_samplers,
    match_perplexity,
    perplexity_of,
    symmetric_affinities,
)
from oracles import perplexity


def random_dist(seed, n=40):
    x = np.random.default_rng(seed).normal(size=(n, 3))
    return cdist(x, x)


def test_uniform_row_any_sigma():
    d = np.ones((5, 5)) - np.eye(5)
    sigma = match_perplexity(d, 4.0 - 1e-9, tol=1e-6)
    assert np.all(sigma > 0)
    for s in (0.1, 1.0, 50.0):
        assert perplexity_of(np.ones(4), s) == pytest.approx(4.0, rel=1e-12)


def test_three_points_against_root_finder():
    d = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.5], [2.0, 1.5, 0.0]])
    sigma = match_perplexity(d, 1.9, tol=1e-6)
    assert perplexity([1.0, 2.0], sigma[0]) == pytest.approx(1.9, abs=1e-6)
    ref = math.exp(brentq(lambda ls: perplexity([1.0, 2.0], math.exp(ls)) - 1.9, -5, 5, xtol=1e-14))
    assert sigma[0] == pytest.approx(ref, rel=1e-4)


@given(st.integers(0, 10_000), st.floats(2.0, 30.0))
def test_calibrated_perplexity_within_tolerance(seed, tau):
    d = random_dist(seed)
    sigma = match_perplexity(d, tau)
    for i in range(d.shape[0]):
        row = np.delete(d[i], i)
        assert abs(perplexity(row, sigma[i]) - tau) <= 1e-3 * tau


def test_perplexity_monotone_in_sigma():
    row = np.delete(random_dist(3)[0], 0)
    vals = [perplexity_of(row, s) for s in np.geomspace(1e-2, 1e2, 200)]
    assert np.all(np.diff(vals) >= -1e-9)


def test_tau_out_of_range():
    d = random_dist(0, n=10)
    with pytest.raises(ValueError):
        match_perplexity(d, 10)
    with pytest.raises(ValueError):
        match_perplexity(d, 1.0)


def test_perplexity_failure_reports_residual():
    # with a single iteration the bisection cannot reach a tight tolerance
    with pytest.raises(PerplexityError, match="worst residual"):
        match_perplexity(random_dist(1), 20.0, tol=1e-12, max_iter=1)


def test_symmetric_affinity_values():
    d = np.array([[0.0, 0.0, 2.0], [0.0, 0.0, 2.0], [2.0, 2.0, 0.0]])
    p = symmetric_affinities(d, np.array([2.0, 2.0, 2.0]))
    assert p[0, 1] == 1.0
    assert p[0, 2] == pytest.approx(math.exp(-1), rel=1e-15)
    assert np.all(np.diag(p) == 0)
    far = symmetric_affinities(np.array([[0.0, 1e6], [1e6, 0.0]]), np.array([1.0, 1.0]))
    assert 0 <= far[0, 1] < 1e-300


@given(st.integers(0, 10_000))
def test_affinity_symmetry_and_equivariance(seed):
    d = random_dist(seed, n=25)
    sigma = match_perplexity(d, 8.0)
    p = symmetric_affinities(d, sigma)
    assert np.array_equal(p, p.T)
    assert np.all((p >= 0) & (p <= 1))
    perm = np.random.default_rng(seed).permutation(25)
    q = symmetric_affinities(d[np.ix_(perm, perm)], sigma[perm])
    assert np.allclose(q, p[np.ix_(perm, perm)], rtol=1e-14, atol=0)


def test_three_pair_hand_case():
    p = np.full((3, 3), 0.5) - 0.5 * np.eye(3)
    m = build_samplers(p)
    assert m.Z == 1.5
    assert m.repulsion_coeff == pytest.approx(1 / 9, rel=1e-15)
    assert np.allclose(m.pos_sampler.masses(), 1 / 3)


def test_all_ones_rejected():
    with pytest.raises(ValueError):
        build_samplers(np.ones((3, 3)) - np.eye(3))


@given(st.integers(0, 10_000))
def test_sampler_masses_and_totals(seed):
    d = random_dist(seed, n=20)
    p = symmetric_affinities(d, match_perplexity(d, 5.0))
    m = build_samplers(p)
    assert abs(m.pos_sampler.masses().sum() - 1) < 1e-9
    assert abs(m.neg_sampler.masses().sum() - 1) < 1e-9
    assert np.allclose(m.pos_sampler.masses(), m.support_p() / m.Z, rtol=1e-9, atol=1e-15)
    assert m.Z + m.neg_total == pytest.approx(20 * 19 / 2, rel=1e-15)


def test_subsampled_support():
    d = random_dist(2, n=30)
    p = symmetric_affinities(d, match_perplexity(d, 5.0))
    m = build_samplers(p, subsample=0.2, seed=4)
    assert m.support_i.size == math.ceil(0.2 * 435)
    assert np.all(m.support_i < m.support_j)
    assert len(set(zip(m.support_i.tolist(), m.support_j.tolist()))) == m.support_i.size
    assert m.Z == pytest.approx(p[m.support_i, m.support_j].sum(), rel=1e-12)
    again = build_samplers(p, subsample=0.2, seed=4)
    assert np.array_equal(again.support_i, m.support_i)


def test_alias_draw_frequencies():
    w = np.array([5.0, 1.0, 0.0, 3.0, 1.0])
    s = AliasSampler.build(w)
    draws = s.draw(np.random.default_rng(0), 10**6)
    counts = np.bincount(draws, minlength=5)
    exp = 1e6 * w / w.sum()
    assert counts[2] == 0
    keep = exp > 0
    stat = ((counts[keep] - exp[keep]) ** 2 / exp[keep]).sum()
    assert stat < chi2.ppf(0.999, keep.sum() - 1)
    assert np.allclose(s.masses(), w / w.sum(), rtol=1e-12, atol=1e-15)
