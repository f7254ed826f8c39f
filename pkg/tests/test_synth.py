import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from embedor.core import PointCloud
from embedor.graph import build_knn_graph
from embedor.synth import (
    DATASETS,
    NoiseParams,
    count_bridging_edges,
    generate,
    opposite_component_distance,
    perturb_adjacency,
    perturb_ambient,
    tree_segments,
)
from helpers import from_pairs


def test_circles_radii():
    c = generate("circles", 1000, seed=0)
    r = np.linalg.norm(c.points, axis=1)
    assert set(c.labels.tolist()) == {0, 1}
    assert np.allclose(r[c.labels == 0], 1.0) and np.allclose(r[c.labels == 1], 2.0)
    assert (c.labels == 1).sum() == pytest.approx(1000 * 2 / 3, abs=1)


def test_moons_on_half_circles():
    c = generate("moons", 400, seed=1)
    up = c.points[c.labels == 0]
    lo = c.points[c.labels == 1]
    assert np.allclose(np.linalg.norm(up, axis=1), 1.0) and np.all(up[:, 1] >= 0)
    assert np.allclose(np.linalg.norm(lo - [1.0, 0.5], axis=1), 1.0) and np.all(lo[:, 1] <= 0.5)


def test_swiss_roll_parametrisation():
    c = generate("swiss_roll", 500, seed=2)
    x, h, z = c.points.T
    t = np.hypot(x, z)
    assert np.all((t >= 1.5 * np.pi) & (t <= 4.5 * np.pi)) and np.all((h >= 0) & (h <= 21))
    assert np.allclose(x, t * np.cos(t)) and np.allclose(z, t * np.sin(t))


def test_tori_membership():
    c = generate("tori", 2000, seed=3)
    a = c.points[c.labels == 0]
    b = c.points[c.labels == 1] - [1.0, 0.0, 0.0]
    ra = (np.hypot(a[:, 0], a[:, 1]) - 1) ** 2 + a[:, 2] ** 2
    rb = (np.hypot(b[:, 0], b[:, 2]) - 1) ** 2 + b[:, 1] ** 2
    assert np.allclose(ra, 0.0625) and np.allclose(rb, 0.0625)
    assert opposite_component_distance(c.points, c.labels).min() > 0.3


def test_tree_points_on_segments():
    c = generate("tree", 600, seed=4)
    segs = tree_segments(3, 1.0, 0.8, np.pi / 4)
    assert len(segs) == 7
    best = np.full(c.n, np.inf)
    for a, b in segs:
        u = np.clip((c.points - a) @ (b - a) / ((b - a) @ (b - a)), 0, 1)
        best = np.minimum(best, np.linalg.norm(c.points - (a + u[:, None] * (b - a)), axis=1))
    assert best.max() < 1e-12
    assert set(c.labels.tolist()) == {0}


def test_gaussian_mixture_moments():
    c = generate("gaussian_mixture", 30000, params={"dim": 3}, seed=5)
    for lab, sd, mu in zip(range(3), (0.1, 0.2, 0.5), (0.0, 2 / 3, 2.0)):
        x = c.points[c.labels == lab]
        assert x[:, 0].mean() == pytest.approx(mu, abs=4 * sd / np.sqrt(len(x)))
        assert x.std(axis=0) == pytest.approx([sd] * 3, rel=0.05)


@pytest.mark.parametrize("name", DATASETS)
def test_seed_reproducible(name):
    a, b = generate(name, 100, seed=7), generate(name, 100, seed=7)
    assert a.points.tobytes() == b.points.tobytes()
    assert not np.array_equal(a.points, generate(name, 100, seed=8).points)


def test_generate_errors():
    with pytest.raises(ValueError, match="unknown dataset"):
        generate("spiral", 100)
    with pytest.raises(ValueError):
        generate("circles", 5)


def test_ambient_noise():
    c = generate("circles", 100, seed=0)
    assert np.array_equal(perturb_ambient(c, 0.0).points, c.points)
    big = PointCloud(np.zeros((20000, 2)), np.zeros(20000, dtype=int))
    noisy = perturb_ambient(big, 1.0, seed=1)
    assert noisy.points.var(axis=0) == pytest.approx([1, 1], rel=0.05)
    assert np.array_equal(noisy.labels, big.labels)


def _moons_graph(seed=0, n=400):
    c = generate("moons", n, seed=seed)
    return c, build_knn_graph(c, 10)


def test_adjacency_noise_zero_pmax():
    c, g = _moons_graph()
    res = perturb_adjacency(g, c, NoiseParams(p_max=0.0), seed=0)
    assert res.added_edges == 0 and res.graph.n_edges == g.n_edges


def test_adjacency_noise_infinite_sigma_flags_all():
    c, g = _moons_graph(n=60)
    res = perturb_adjacency(g, c, NoiseParams(p_max=1.0, sigma=1e12), seed=0)
    assert res.nu.all()


def test_adjacency_noise_proxy_and_monotone_edges():
    c, g = _moons_graph()
    params = NoiseParams(p_max=0.1, sigma=0.7)
    res = perturb_adjacency(g, c, params, seed=2)
    d = opposite_component_distance(c.points, c.labels)
    assert np.allclose(res.s, 0.1 * np.exp(-(d**2) / 0.49), rtol=1e-14, atol=0)
    assert res.s_max == res.s.max()
    assert set(zip(g.ei.tolist(), g.ej.tolist())) <= set(zip(res.graph.ei.tolist(), res.graph.ej.tolist()))
    assert count_bridging_edges(res.graph, c.labels) > count_bridging_edges(g, c.labels)


def test_bridging_grows_with_pmax():
    c, g = _moons_graph()
    means = []
    for p_max in (0.02, 0.1, 0.3):
        counts = [
            count_bridging_edges(perturb_adjacency(g, c, NoiseParams(p_max=p_max), seed=s).graph, c.labels)
            for s in range(20)
        ]
        means.append(np.mean(counts))
    assert means[0] < means[1] < means[2]


def test_adjacency_needs_two_labels():
    c = generate("swiss_roll", 50, seed=0)
    with pytest.raises(ValueError):
        perturb_adjacency(build_knn_graph(c, 5), c, NoiseParams(), seed=0)


@given(st.floats(-1, 3), st.floats(0, 2))
def test_noise_params_ranges(p_max, beta):
    ok = 0 <= p_max <= 1 and 0 < beta < 1
    if ok:
        NoiseParams(p_max=p_max, beta=beta)
    else:
        with pytest.raises(ValueError):
            NoiseParams(p_max=p_max, beta=beta)


def test_bridging_counts():
    assert count_bridging_edges(from_pairs(3, [(0, 1), (1, 2)]), [0, 0, 0]) == 0
    assert count_bridging_edges(from_pairs(2, [(0, 1)]), [0, 1]) == 1
    k22 = from_pairs(4, [(0, 2), (0, 3), (1, 2), (1, 3)])
    assert count_bridging_edges(k22, [0, 0, 1, 1]) == 4
