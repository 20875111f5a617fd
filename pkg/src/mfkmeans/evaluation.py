"""Cluster validation: silhouettes, confusion matrices and p sweeps."""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

import numpy as np

from .core import FunctionalSample
from .kmeans import KMeansConfig, run_kmeans
from .metrics import MetricSpec, pairwise_distances
from .spectral import Spectrum, spectrum_of

MAX_MATCHED_CLUSTERS = 8


@dataclass(frozen=True, eq=False)
class SilhouetteReport:
    values: np.ndarray
    labels: np.ndarray
    cluster_means: dict
    overall_mean: float
    order: np.ndarray
    """Curve indices grouped by cluster, nonincreasing silhouette within each cluster."""


def silhouette_from_distances(D: np.ndarray, labels: Sequence[int]) -> SilhouetteReport:
    D = np.asarray(D, dtype=float)
    labels = np.asarray(labels)
    n = labels.size
    if D.shape != (n, n):
        raise ValueError(f"distance matrix shape {D.shape} does not match {n} labels")
    clusters = np.unique(labels)
    s = np.zeros(n)
    if clusters.size < 2:
        warnings.warn("silhouette values are undefined for a single cluster; reporting zeros")
    else:
        member = labels[np.newaxis, :] == clusters[:, np.newaxis]  # (k, n)
        sizes = member.sum(axis=1)
        sums = D @ member.T  # (n, k): summed distance from i to each cluster
        own = np.searchsorted(clusters, labels)
        for i in range(n):
            if sizes[own[i]] == 1:
                continue
            a = sums[i, own[i]] / (sizes[own[i]] - 1)
            others = np.delete(np.arange(clusters.size), own[i])
            b = np.min(sums[i, others] / sizes[others])
            denom = max(a, b)
            s[i] = 0.0 if denom == 0 else (b - a) / denom
    s = np.clip(s, -1.0, 1.0)
    cluster_means = {c.item(): float(s[labels == c].mean()) for c in clusters}
    order = np.concatenate(
        [np.flatnonzero(labels == c)[np.argsort(-s[labels == c], kind="stable")] for c in clusters]
    ) if n else np.array([], dtype=int)
    return SilhouetteReport(s, labels, cluster_means, float(s.mean()), order)


def silhouette(sample: FunctionalSample, labels: Sequence[int], metric: MetricSpec) -> SilhouetteReport:
    """Silhouette value of every curve under ``metric``; singletons score 0."""
    return silhouette_from_distances(pairwise_distances(sample, metric), labels)


@dataclass(frozen=True, eq=False)
class ConfusionReport:
    """Contingency table of found clusters (rows) against true groups (columns)."""

    matrix: np.ndarray
    found_levels: tuple
    truth_levels: tuple
    matching: dict
    correct_rate: float

    @property
    def n(self) -> int:
        return int(self.matrix.sum())

    def aligned(self) -> np.ndarray:
        """Rows reordered so that row ``j`` is the cluster matched to truth level ``j``.

        Only defined when the numbers of found clusters and true groups agree.
        """
        if len(self.found_levels) != len(self.truth_levels):
            raise ValueError("alignment needs as many clusters as true groups")
        inverse = {t: f for f, t in self.matching.items()}
        rows = [self.found_levels.index(inverse[t]) for t in self.truth_levels]
        return self.matrix[rows]


def _sorted_levels(values) -> tuple:
    levels = set(values)
    try:
        return tuple(sorted(levels))
    except TypeError:
        return tuple(sorted(levels, key=repr))


def score(labels: Sequence[Hashable], truth: Sequence[Hashable]) -> ConfusionReport:
    """Best agreement between cluster labels and true groups over all label matchings."""
    labels = list(np.asarray(labels).tolist()) if isinstance(labels, np.ndarray) else list(labels)
    truth = list(np.asarray(truth).tolist()) if isinstance(truth, np.ndarray) else list(truth)
    if len(labels) != len(truth):
        raise ValueError(f"got {len(labels)} labels but {len(truth)} true groups")
    if not labels:
        raise ValueError("nothing to score")
    found = _sorted_levels(labels)
    groups = _sorted_levels(truth)
    if len(found) > MAX_MATCHED_CLUSTERS or len(groups) > MAX_MATCHED_CLUSTERS:
        raise ValueError(f"exhaustive matching supports at most {MAX_MATCHED_CLUSTERS} levels")
    fi = {f: i for i, f in enumerate(found)}
    gi = {g: j for j, g in enumerate(groups)}
    M = np.zeros((len(found), len(groups)), dtype=int)
    for l, t in zip(labels, truth):
        M[fi[l], gi[t]] += 1

    best_count, best_map = -1, None
    if len(found) <= len(groups):
        for perm in itertools.permutations(range(len(groups)), len(found)):
            c = sum(M[i, j] for i, j in enumerate(perm))
            if c > best_count:
                best_count, best_map = c, {found[i]: groups[j] for i, j in enumerate(perm)}
    else:
        for perm in itertools.permutations(range(len(found)), len(groups)):
            c = sum(M[i, j] for j, i in enumerate(perm))
            if c > best_count:
                best_count, best_map = c, {found[i]: groups[j] for j, i in enumerate(perm)}
    return ConfusionReport(M, found, groups, best_map, best_count / len(labels))


def sweep_p(
    sample: FunctionalSample,
    truth: Sequence[Hashable],
    k: int,
    log10_grid: Sequence[float],
    n_runs: int = 1,
    seed: int = 0,
    n_restarts: int = 1,
    max_iter: int = 200,
    spectrum: Optional[Spectrum] = None,
) -> list[tuple[float, float, float]]:
    """Misclassified proportion of ``dp`` k-means for each ``log10(p)`` in ``log10_grid``.

    Returns ``(log10_p, mean, sd)`` rows, the statistics being taken over
    ``n_runs`` k-means fits with independent seeds (``sd`` is 0 for one run).
    """
    if len(log10_grid) == 0:
        raise ValueError("empty p grid")
    if spectrum is None:
        spectrum = spectrum_of(sample)
    run_seeds = [
        int(ss.generate_state(1, np.uint64)[0])
        for ss in np.random.SeedSequence(int(seed)).spawn(n_runs)
    ] if n_runs > 1 else [int(seed)]
    rows = []
    for lg in log10_grid:
        metric = MetricSpec.dp_log10(spectrum, lg)
        errs = []
        for s in run_seeds:
            res = run_kmeans(sample, KMeansConfig(k, metric, max_iter, n_restarts, s))
            errs.append(1.0 - score(res.labels, truth).correct_rate)
        sd = float(np.std(errs, ddof=1)) if len(errs) > 1 else 0.0
        rows.append((float(lg), float(np.mean(errs)), sd))
    return rows


def mean_sd(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), (float(v.std(ddof=1)) if v.size > 1 else 0.0)

