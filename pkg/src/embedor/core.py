"""Shared value types and seeding helpers."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class PointCloud:
    """N points in R^D with optional integer component labels."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise ValueError(f"points must be 2-D, got shape {pts.shape}")
        if pts.shape[0] < 2:
            raise ValueError(f"need at least 2 points, got {pts.shape[0]}")
        if pts.shape[1] < 1:
            raise ValueError("points must have at least one coordinate")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite coordinates")
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (pts.shape[0],):
                raise ValueError(f"labels length {lab.shape} does not match N={pts.shape[0]}")
            object.__setattr__(self, "labels", lab.astype(np.int64))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass
class EdgeRecord:
    i: int
    j: int
    euclid: float
    kappa: Optional[float] = None
    energy: Optional[float] = None
    weight: Optional[float] = None
    delta: Optional[float] = None

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("edge endpoints must differ")
        if self.i > self.j:
            self.i, self.j = self.j, self.i
        if self.euclid < 0:
            raise ValueError("euclid must be nonnegative")
        if self.energy is not None and self.energy < 1:
            raise ValueError(f"energy must be >= 1, got {self.energy}")


@dataclass
class RunConfig:
    """Pipeline parameters. Exactly one of ``k`` and ``epsilon`` is used."""

    k: Optional[int] = 15
    epsilon: Optional[float] = None
    p: float = 3.0
    perplexity: float = 150.0
    dim: int = 2
    iters: Optional[int] = None  # None -> 400 * N
    learning_rate: float = 0.5
    seed: int = 0
    curvature: str = "orc"
    landmarks: int = 0
    landmark_strategy: str = "random"
    subsample: float = 1.0
    repulsion_weight: Optional[float] = None  # None -> 1 / N**2

    def __post_init__(self):
        if self.epsilon is not None:
            # an explicit radius overrides the default k
            if self.k == 15:
                self.k = None
        if (self.k is None) == (self.epsilon is None):
            raise ValueError("exactly one of k and epsilon must be set")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be positive")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.p < 0:
            raise ValueError("p must be >= 0")
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must lie in (0, 1]")
        if self.curvature not in ("orc", "frc"):
            raise ValueError(f"unknown curvature backend {self.curvature!r}")
        if self.landmarks < 0:
            raise ValueError("landmarks must be >= 0")
        if self.landmark_strategy not in ("random", "betweenness"):
            raise ValueError(f"unknown landmark strategy {self.landmark_strategy!r}")
        if self.perplexity <= 1:
            raise ValueError("perplexity must exceed 1")

    def check_against(self, n: int) -> None:
        """Validate the parts of the config that depend on the sample count."""
        if self.perplexity >= n:
            raise ValueError(f"perplexity {self.perplexity} must be < N={n}")
        if self.k is not None and self.k >= n:
            raise ValueError(f"k={self.k} must be < N={n}")
        if self.landmarks > n:
            raise ValueError(f"landmarks={self.landmarks} exceeds N={n}")



def stage_seed(seed: int, stage: str) -> np.random.SeedSequence:
    """Derive the seed sequence for one pipeline stage from the root seed."""
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(stage.encode())])


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    return np.random.default_rng(stage_seed(seed, stage))


@dataclass
class PipelineReport:
    timings_ms: dict = field(default_factory=dict)
    n_points: int = 0
    n_edges: int = 0
    added_edges: int = 0
    s_max: Optional[float] = None
    outputs: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
