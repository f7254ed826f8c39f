"""End-to-end workflows shared by the CLI and the experiment scripts."""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from embedor.affinities import build_affinities
from embedor.core import PipelineReport, PointCloud, RunConfig
from embedor.curvature import CurvatureMap, curvature
from embedor.embedder import EmbeddingState, optimize
from embedor.evaluation import EdgeStatReport, geodesic_oracle, geodesic_score, zscored_edge_stats
from embedor.graph import NeighborGraph, build_epsilon_graph, build_knn_graph
from embedor.metric import KAPPA_FLOOR, MetricMatrix, build_metric, edge_energy, edge_weights
from embedor.synth import NoiseParams, generate, perturb_adjacency, perturb_ambient


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def stage(name: str, timings: dict):
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    finally:
        timings[name] = timings.get(name, 0.0) + 1e3 * (time.perf_counter() - start)


@dataclass
class MetricRun:
    graph: NeighborGraph
    curvature: CurvatureMap
    energies: np.ndarray
    weights: np.ndarray
    metric: MetricMatrix
    timings: dict = field(default_factory=dict)


@dataclass
class EmbedRun:
    state: EmbeddingState
    metric: MetricRun
    report: PipelineReport


def build_graph(cloud: PointCloud, config: RunConfig) -> NeighborGraph:
    if config.epsilon is not None:
        return build_epsilon_graph(cloud, config.epsilon)
    return build_knn_graph(cloud, config.k)


def compute_metric(cloud: PointCloud, config: RunConfig, graph: Optional[NeighborGraph] = None) -> MetricRun:
    """Graph, curvature, energies and the curvature-weighted shortest-path metric."""
    timings: dict = {}
    with stage("config", timings):
        config.check_against(cloud.n)
    if graph is None:
        with stage("graph", timings):
            graph = build_graph(cloud, config)
    with stage("curvature", timings):
        curv = curvature(graph, config.curvature)
        energies = edge_energy(np.maximum(curv.kappa, KAPPA_FLOOR), config.p)
        weights = edge_weights(graph, curv, config.p)
    with stage("apsp", timings):
        metric = build_metric(graph, weights, config.landmarks, config.landmark_strategy, config.seed)
    return MetricRun(graph, curv, np.atleast_1d(energies), weights, metric, timings)


def run_embed(
    cloud: PointCloud,
    config: RunConfig,
    graph: Optional[NeighborGraph] = None,
    verbose: bool = False,
) -> EmbedRun:
    mr = compute_metric(cloud, config, graph)
    timings = dict(mr.timings)
    with stage("affinities", timings):
        aff = build_affinities(mr.metric, config.perplexity, config.subsample, config.seed, config.repulsion_weight)
    with stage("sgd", timings):
        state = optimize(aff, config, verbose=verbose)
    state.labels = cloud.labels
    report = PipelineReport(timings, cloud.n, mr.graph.n_edges)
    report.stats["Z"] = aff.Z
    report.stats["repulsion_coeff"] = aff.repulsion_coeff
    return EmbedRun(state, mr, report)


def edge_stats(embedding, mr: MetricRun, beta: float) -> EdgeStatReport:
    return zscored_edge_stats(embedding, mr.graph, mr.metric, beta)


# Ambient noise used for the geodesic-score experiment, chosen so that the
# full k-NN graph at n=5000 has a moderate number of bridging edges.
TABLE1_NOISE = {"circles": 0.15, "swiss_roll": 0.5, "tori": 0.1, "tree": 0.02}
TABLE1_DATASETS = ("circles", "swiss_roll", "tori", "tree")


@dataclass
class Table1Row:
    dataset: str
    scores: list

    @property
    def mean(self) -> float:
        return float(np.mean(self.scores))

    @property
    def std(self) -> float:
        return float(np.std(self.scores, ddof=1)) if len(self.scores) > 1 else 0.0


def table1_trial(dataset: str, n: int, seed: int, config: Optional[RunConfig] = None, noise: Optional[float] = None) -> float:
    """Embed one noisy sample and score it against geodesics of its noiseless source."""
    base = config or RunConfig()
    cfg = RunConfig(**{**base.__dict__, "seed": seed})
    clean = generate(dataset, n, seed=seed)
    oracle = geodesic_oracle(clean, k=cfg.k if cfg.k is not None else 15)
    std = TABLE1_NOISE[dataset] if noise is None else noise
    noisy = perturb_ambient(clean, std, seed=seed)
    run = run_embed(noisy, cfg)
    return geodesic_score(run.state.Y, oracle)


def cmd_table1(
    seeds: int, n: int = 5000, datasets=TABLE1_DATASETS, config: Optional[RunConfig] = None, log=None, seed0: int = 0
) -> list[Table1Row]:
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    rows = []
    for ds in datasets:
        scores = []
        for s in range(seed0, seed0 + seeds):
            scores.append(table1_trial(ds, n, s, config))
            if log is not None:
                log(f"{ds} seed={s} score={scores[-1]:.4f}")
        rows.append(Table1Row(ds, scores))
    return rows


def table2_trial(dataset: str, n: int, seed: int, params: Optional[NoiseParams] = None, beta: float = 0.33, config: Optional[RunConfig] = None):
    """Bridging edges in the full noisy graph and in its metric-shortest fraction."""
    from embedor.metric import shortest_quantile_edges
    from embedor.synth import count_bridging_edges

    base = config or RunConfig()
    cfg = RunConfig(**{**base.__dict__, "seed": seed})
    clean = generate(dataset, n, seed=seed)
    noisy = perturb_adjacency(build_graph(clean, cfg), clean, params or NoiseParams(), seed=seed)
    mr = compute_metric(clean, cfg, graph=noisy.graph)
    short = shortest_quantile_edges(mr.graph, mr.metric, beta)
    return count_bridging_edges(mr.graph, clean.labels), count_bridging_edges(short, clean.labels), noisy.s_max
