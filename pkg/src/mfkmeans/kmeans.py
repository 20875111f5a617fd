"""Functional k-means under any :class:`~mfkmeans.metrics.MetricSpec`.

Every supported metric is the norm of a fixed linear map applied to the
difference of two curves, so the centroid step (minimising the summed squared
distance to the cluster members) is solved exactly by the pointwise mean of
the members. The loop therefore runs on the embedded feature vectors of
:func:`~mfkmeans.metrics.embed`, where the mean of a cluster's features is the
feature vector of its mean curve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .core import FunctionalSample, MultiCurve
from .exceptions import DimensionError
from .metrics import MetricSpec, cross_distances, embed

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    metric: MetricSpec
    max_iter: int = 200
    n_restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        if int(self.n_restarts) != self.n_restarts or self.n_restarts < 1:
            raise ValueError(f"n_restarts must be a positive integer, got {self.n_restarts}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True, eq=False)
class ClusteringResult:
    """Outcome of a k-means fit.

    ``labels`` are cluster indices in ``1..k``. ``iterations`` counts the
    assignment steps performed, including the final one that reproduced the
    previous assignment. ``objective_trace`` records the objective after each
    centroid update.
    """

    labels: np.ndarray
    centroids: list
    objective: float
    iterations: int
    converged: bool
    objective_trace: tuple = field(default=())
    restart: int = 0

    @property
    def k(self) -> int:
        return len(self.centroids)


def _check_centroids(sample: FunctionalSample, centroids: Sequence[MultiCurve]) -> np.ndarray:
    if len(centroids) == 0:
        raise ValueError("need at least one centroid")
    for c in centroids:
        if c.grid != sample.grid or c.n_components != sample.n_components:
            raise DimensionError("centroid does not live on the sample's grid/components")
    return np.stack([c.values for c in centroids])


def assign(sample: FunctionalSample, centroids: Sequence[MultiCurve], metric: MetricSpec) -> np.ndarray:
    """Label of the nearest centroid for each curve; ties go to the lowest index."""
    C = _check_centroids(sample, centroids)
    D = cross_distances(sample.values, C, metric, sample.grid)
    return np.argmin(D, axis=1) + 1


def update_centroids(sample: FunctionalSample, labels: Sequence[int], k: int) -> list[MultiCurve]:
    labels = np.asarray(labels)
    if labels.shape != (sample.n,):
        raise ValueError(f"expected {sample.n} labels, got shape {labels.shape}")
    out = []
    for l in range(1, k + 1):
        members = labels == l
        if not members.any():
            raise ValueError(f"cluster {l} is empty")
        out.append(MultiCurve(sample.values[members].mean(axis=0), sample.grid))
    return out


def objective(
    sample: FunctionalSample,
    labels: Sequence[int],
    centroids: Sequence[MultiCurve],
    metric: MetricSpec,
) -> float:
    """Sum over curves of the squared distance to the assigned centroid."""
    labels = np.asarray(labels)
    if labels.shape != (sample.n,):
        raise ValueError(f"expected {sample.n} labels, got shape {labels.shape}")
    C = _check_centroids(sample, centroids)
    if labels.min() < 1 or labels.max() > len(centroids):
        raise ValueError("labels reference a missing centroid")
    EX = embed(sample.values, metric, sample.grid)
    EC = embed(C, metric, sample.grid)
    diff = EX - EC[labels - 1]
    return float(np.sum(diff * diff))


def _means(E: np.ndarray, lab: np.ndarray, k: int) -> np.ndarray:
    counts = np.bincount(lab, minlength=k).astype(float)
    sums = np.zeros((k, E.shape[1]))
    np.add.at(sums, lab, E)
    return sums / counts[:, np.newaxis]


def _repair_empty(E: np.ndarray, lab: np.ndarray, centers: np.ndarray, k: int) -> np.ndarray:
    """Move the curve farthest from its centroid into each empty cluster."""
    lab = lab.copy()
    while True:
        counts = np.bincount(lab, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return lab
        d2 = np.sum((E - centers[lab]) ** 2, axis=1)
        d2[counts[lab] <= 1] = -np.inf
        i = int(np.argmax(d2))
        lab[i] = empty[0]
        centers = centers.copy()
        centers[empty[0]] = E[i]


def _single_run(E: np.ndarray, k: int, max_iter: int, rng: np.random.Generator):
    n = E.shape[0]
    init = rng.choice(n, size=k, replace=False)
    centers = E[init].copy()
    prev = None
    trace = []
    converged = False
    m = 0
    for m in range(1, max_iter + 1):
        lab = np.argmin(cdist(E, centers, "sqeuclidean"), axis=1)
        lab = _repair_empty(E, lab, centers, k)
        if prev is not None and np.array_equal(lab, prev):
            converged = True
            break
        centers = _means(E, lab, k)
        diff = E - centers[lab]
        trace.append(float(np.sum(diff * diff)))
        prev = lab
    return prev, trace, m, converged


def run_kmeans(sample: FunctionalSample, config: KMeansConfig) -> ClusteringResult:
    """Best of ``config.n_restarts`` seeded k-means runs, ranked by objective.

    Each restart draws ``k`` distinct curves as initial centroids and
    alternates assignment and mean update until the assignment repeats or
    ``max_iter`` assignment steps have been made.
    """
    n, k = sample.n, config.k
    if k > n:
        raise ValueError(f"k = {k} exceeds the number of curves n = {n}")
    E = embed(sample.values, config.metric, sample.grid)
    children = np.random.SeedSequence(int(config.seed)).spawn(config.n_restarts)
    best = None
    for r, child in enumerate(children):
        lab, trace, iters, conv = _single_run(E, k, config.max_iter, np.random.default_rng(child))
        if not conv:
            log.warning("k-means restart %d stopped at max_iter=%d without converging", r, config.max_iter)
        obj = trace[-1]
        if best is None or obj < best[0]:
            best = (obj, lab, trace, iters, conv, r)
    obj, lab, trace, iters, conv, r = best
    labels = lab + 1
    centroids = update_centroids(sample, labels, k)
    return ClusteringResult(labels, centroids, obj, iters, conv, tuple(trace), r)
