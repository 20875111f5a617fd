"""Distances between multivariate curves.

Three metrics are available:

* ``dp`` -- the generalized Mahalanobis distance. Each principal component
  of the difference is weighted by ``h_k(p) / lambda_k = 1 / (lambda_k + 1/p)``
  and whatever lies outside the estimated eigenspace is weighted by ``p``.
* ``truncated`` -- the Mahalanobis semi-distance on the first ``K``
  principal components.
* ``l2`` -- the plain norm of the difference.

All three are square roots of fixed positive semidefinite quadratic forms in
the difference ``a - b``. :func:`embed` exposes the matching linear feature
map, so that batched distances reduce to Euclidean distances between
feature vectors.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist as _euclidean_cdist

from .core import FunctionalSample, Grid, MultiCurve, _check_compatible, l2_distance
from .exceptions import DimensionError
from .spectral import Spectrum


class MetricKind(str, enum.Enum):
    GENERALIZED_MAHALANOBIS = "dp"
    TRUNCATED_MAHALANOBIS = "truncated"
    L2 = "l2"


@dataclass(frozen=True, eq=False)
class MetricSpec:
    kind: MetricKind
    p: Optional[float] = None
    K: Optional[int] = None
    spectrum: Optional[Spectrum] = None

    def __post_init__(self):
        kind = MetricKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is MetricKind.GENERALIZED_MAHALANOBIS:
            if self.p is None or not self.p > 0 or not math.isfinite(self.p):
                raise ValueError(f"p must be a positive finite number, got {self.p}")
            if self.spectrum is None:
                raise ValueError("the dp metric needs a spectrum")
        elif kind is MetricKind.TRUNCATED_MAHALANOBIS:
            if self.spectrum is None:
                raise ValueError("the truncated metric needs a spectrum")
            if self.K is None or int(self.K) != self.K or not 1 <= self.K <= self.spectrum.rank:
                raise ValueError(f"K must be an integer in 1..{self.spectrum.rank}, got {self.K}")
            object.__setattr__(self, "K", int(self.K))

    @classmethod
    def l2(cls) -> "MetricSpec":
        return cls(MetricKind.L2)

    @classmethod
    def dp(cls, spectrum: Spectrum, p: float) -> "MetricSpec":
        return cls(MetricKind.GENERALIZED_MAHALANOBIS, p=float(p), spectrum=spectrum)

    @classmethod
    def dp_log10(cls, spectrum: Spectrum, log10p: float) -> "MetricSpec":
        return cls.dp(spectrum, 10.0 ** float(log10p))

    @classmethod
    def truncated(cls, spectrum: Spectrum, K: int) -> "MetricSpec":
        return cls(MetricKind.TRUNCATED_MAHALANOBIS, K=K, spectrum=spectrum)

    @property
    def label(self) -> str:
        if self.kind is MetricKind.GENERALIZED_MAHALANOBIS:
            return f"dp(log10p={math.log10(self.p):g})"
        if self.kind is MetricKind.TRUNCATED_MAHALANOBIS:
            return f"truncated(K={self.K})"
        return "l2"


def regularizing_weight(lam: float, p: float) -> float:
    """``lam / (lam + 1/p)``; lies in ``[0, 1)`` and increases with both arguments."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    if lam < 0:
        raise ValueError(f"eigenvalue must be nonnegative, got {lam}")
    if lam == 0:
        return 0.0
    return lam * p / (lam * p + 1.0)


def _component_weights(spectrum: Spectrum, p: float) -> np.ndarray:
    # h_k(p) / lambda_k, rearranged to avoid cancellation for tiny lambda
    lam = spectrum.retained
    return p / (lam * p + 1.0)


def _check_on_spectrum(diff: MultiCurve, spectrum: Spectrum) -> None:
    if diff.grid != spectrum.grid or diff.n_components != spectrum.n_components:
        raise DimensionError("curve does not live on the spectrum's grid/components")


def _scores(diff: np.ndarray, spectrum: Spectrum) -> np.ndarray:
    """Inner products of flattened curves (rows) with the retained eigenfunctions."""
    return spectrum.grid.weight * (diff @ spectrum.basis())


def _residual_sq_norm(diff: np.ndarray, scores: np.ndarray, spectrum: Spectrum) -> np.ndarray:
    resid = diff - scores @ spectrum.basis().T
    return spectrum.grid.weight * np.sum(resid * resid, axis=-1)


def mahalanobis_component(diff: MultiCurve, k: int, spectrum: Spectrum) -> float:
    """``|<diff, phi_k>| / sqrt(lambda_k)`` for a 1-based component index ``k``."""
    if not 1 <= k <= spectrum.rank:
        raise IndexError(f"component {k} is outside the retained range 1..{spectrum.rank}")
    _check_on_spectrum(diff, spectrum)
    score = spectrum.grid.weight * float(
        np.sum(diff.values * spectrum.eigenfunctions[k - 1])
    )
    return abs(score) / math.sqrt(spectrum.eigenvalues[k - 1])


def dp_distance(a: MultiCurve, b: MultiCurve, spec: MetricSpec) -> float:
    if spec.kind is not MetricKind.GENERALIZED_MAHALANOBIS:
        raise ValueError(f"expected a dp metric, got {spec.kind.value}")
    _check_compatible(a, b)
    diff = a - b
    _check_on_spectrum(diff, spec.spectrum)
    d = diff.values.ravel()
    c = _scores(d, spec.spectrum)
    resid = _residual_sq_norm(d, c, spec.spectrum)
    total = float(np.sum(_component_weights(spec.spectrum, spec.p) * c * c)) + spec.p * max(
        float(resid), 0.0
    )
    return math.sqrt(total)


def truncated_mahalanobis(a: MultiCurve, b: MultiCurve, spec: MetricSpec) -> float:
    if spec.kind is not MetricKind.TRUNCATED_MAHALANOBIS:
        raise ValueError(f"expected a truncated metric, got {spec.kind.value}")
    _check_compatible(a, b)
    diff = a - b
    _check_on_spectrum(diff, spec.spectrum)
    return math.sqrt(
        sum(mahalanobis_component(diff, k, spec.spectrum) ** 2 for k in range(1, spec.K + 1))
    )


def distance(a: MultiCurve, b: MultiCurve, spec: MetricSpec) -> float:
    if spec.kind is MetricKind.GENERALIZED_MAHALANOBIS:
        return dp_distance(a, b, spec)
    if spec.kind is MetricKind.TRUNCATED_MAHALANOBIS:
        return truncated_mahalanobis(a, b, spec)
    return l2_distance(a, b)


def embed(values: np.ndarray, spec: MetricSpec, grid: Grid) -> np.ndarray:
    """Map curves to feature vectors whose Euclidean distances are ``spec`` distances.

    ``values`` is an ``(m, J, T)`` array or an ``(m, J*T)`` matrix of curves on
    ``grid``. The map is affine, so the mean of embedded curves is the
    embedding of their mean curve.
    """
    X = np.asarray(values, dtype=float)
    X = X.reshape(X.shape[0], -1)
    if spec.kind is MetricKind.L2:
        if X.shape[1] % grid.size:
            raise DimensionError("curve length is not a multiple of the grid size")
        return X * math.sqrt(grid.weight)
    spectrum = spec.spectrum
    if grid != spectrum.grid:
        raise DimensionError("curves and spectrum live on different grids")
    if X.shape[1] != spectrum.total_dim:
        raise DimensionError(
            f"curves have {X.shape[1]} stacked values, spectrum expects {spectrum.total_dim}"
        )
    if spectrum.mean is not None:
        X = X - spectrum.mean.values.ravel()
    c = _scores(X, spectrum)
    if spec.kind is MetricKind.TRUNCATED_MAHALANOBIS:
        return c[:, : spec.K] / np.sqrt(spectrum.retained[: spec.K])
    head = c * np.sqrt(_component_weights(spectrum, spec.p))
    resid = X - c @ spectrum.basis().T
    tail = resid * math.sqrt(spec.p * spectrum.grid.weight)
    return np.hstack([head, tail])


def cross_distances(
    A: np.ndarray, B: np.ndarray, spec: MetricSpec, grid: Grid, jobs: int = 1
) -> np.ndarray:
    """Distances between every curve of ``A`` (rows) and every curve of ``B`` (columns)."""
    EA = embed(A, spec, grid)
    EB = embed(B, spec, grid)
    if jobs <= 1 or EA.shape[0] < 2 * jobs:
        return _euclidean_cdist(EA, EB)
    chunks = np.array_split(np.arange(EA.shape[0]), jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(lambda idx: _euclidean_cdist(EA[idx], EB), chunks))
    return np.vstack(parts)


def pairwise_distances(sample: FunctionalSample, spec: MetricSpec, jobs: int = 1) -> np.ndarray:
    """Symmetric ``(n, n)`` matrix of distances between the curves of ``sample``."""
    D = cross_distances(sample.values, sample.values, spec, sample.grid, jobs=jobs)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


@dataclass(frozen=True)
class MetricChoice:
    """A metric named independently of any sample; bound to a spectrum later.

    String form: ``l2``, ``truncated:<K>`` or ``dp:<log10 p>``.
    """

    kind: MetricKind
    log10p: Optional[float] = None
    K: Optional[int] = None

    def __post_init__(self):
        kind = MetricKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is MetricKind.GENERALIZED_MAHALANOBIS:
            if self.log10p is None or not math.isfinite(self.log10p):
                raise ValueError("dp needs a finite log10(p)")
        if kind is MetricKind.TRUNCATED_MAHALANOBIS:
            if self.K is None or int(self.K) != self.K or self.K < 1:
                raise ValueError("truncated needs a positive integer K")

    @classmethod
    def parse(cls, text: str) -> "MetricChoice":
        name, _, arg = text.strip().partition(":")
        name = name.lower()
        try:
            if name == "l2" and not arg:
                return cls(MetricKind.L2)
            if name == "dp":
                return cls(MetricKind.GENERALIZED_MAHALANOBIS, log10p=float(arg))
            if name == "truncated":
                return cls(MetricKind.TRUNCATED_MAHALANOBIS, K=int(arg))
        except ValueError as exc:
            raise ValueError(f"bad metric {text!r}: {exc}") from None
        raise ValueError(f"bad metric {text!r}; use l2, truncated:<K> or dp:<log10 p>")

    def __str__(self) -> str:
        if self.kind is MetricKind.GENERALIZED_MAHALANOBIS:
            return f"dp:{self.log10p:g}"
        if self.kind is MetricKind.TRUNCATED_MAHALANOBIS:
            return f"truncated:{self.K}"
        return "l2"

    @property
    def needs_spectrum(self) -> bool:
        return self.kind is not MetricKind.L2

    def bind(self, spectrum: Optional[Spectrum]) -> MetricSpec:
        if self.kind is MetricKind.L2:
            return MetricSpec.l2()
        if spectrum is None:
            raise ValueError(f"metric {self} needs a spectrum")
        if self.kind is MetricKind.TRUNCATED_MAHALANOBIS:
            return MetricSpec.truncated(spectrum, self.K)
        return MetricSpec.dp_log10(spectrum, self.log10p)
