"""Curvature-weighted graph metric and stochastic neighbor embedding."""

from embedor.core import EdgeRecord, PointCloud, RunConfig, stage_rng
from embedor.graph import NeighborGraph, build_epsilon_graph, build_knn_graph, connected_components
from embedor.curvature import CurvatureMap, frc_all, orc_all, orc_edge
from embedor.metric import (
    MetricMatrix,
    apsp_exact,
    apsp_landmark,
    edge_energy,
    edge_weights,
    select_landmarks,
    shortest_quantile_edges,
)
from embedor.affinities import AffinityModel, build_samplers, match_perplexity, symmetric_affinities
from embedor.embedder import EmbeddingState, low_dim_kernel, optimize, sgd_step, spectral_init
from embedor.evaluation import geodesic_oracle, geodesic_score, permutation_test, spearman
from embedor.pipeline import compute_metric, run_embed
from embedor.synth import NoiseParams, count_bridging_edges, generate, perturb_adjacency, perturb_ambient

__all__ = [
    "AffinityModel",
    "NoiseParams",
    "CurvatureMap",
    "EdgeRecord",
    "EmbeddingState",
    "MetricMatrix",
    "NeighborGraph",
    "PointCloud",
    "RunConfig",
    "apsp_exact",
    "apsp_landmark",
    "build_epsilon_graph",
    "build_knn_graph",
    "build_samplers",
    "compute_metric",
    "count_bridging_edges",
    "connected_components",
    "edge_energy",
    "edge_weights",
    "frc_all",
    "generate",
    "geodesic_oracle",
    "geodesic_score",
    "low_dim_kernel",
    "match_perplexity",
    "optimize",
    "orc_all",
    "orc_edge",
    "permutation_test",
    "perturb_adjacency",
    "perturb_ambient",
    "run_embed",
    "select_landmarks",
    "sgd_step",
    "shortest_quantile_edges",
    "spearman",
    "spectral_init",
    "stage_rng",
    "symmetric_affinities",
]
