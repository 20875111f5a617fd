"""k-means clustering of multivariate functional data.

Distances between curves come from a regularized Mahalanobis-type metric
built on the spectrum of the pooled sample covariance operator.
"""

from .core import FunctionalSample, Grid, MultiCurve, inner_product, l2_distance, sample_mean
from .evaluation import ConfusionReport, SilhouetteReport, score, silhouette, sweep_p
from .exceptions import DimensionError, IngestionError, InsufficientSampleError, NumericalError
from .kmeans import ClusteringResult, KMeansConfig, run_kmeans
from .metrics import (
    MetricChoice,
    MetricKind,
    MetricSpec,
    distance,
    dp_distance,
    pairwise_distances,
    truncated_mahalanobis,
)
from .simgen import ScenarioSpec, generate
from .spectral import CovarianceEstimate, Spectrum, eigendecompose, estimate_covariance, spectrum_of

__version__ = "0.1.0"

__all__ = [
    "ClusteringResult",
    "ConfusionReport",
    "CovarianceEstimate",
    "DimensionError",
    "FunctionalSample",
    "Grid",
    "IngestionError",
    "InsufficientSampleError",
    "KMeansConfig",
    "MetricChoice",
    "MetricKind",
    "MetricSpec",
    "MultiCurve",
    "NumericalError",
    "ScenarioSpec",
    "SilhouetteReport",
    "Spectrum",
    "distance",
    "dp_distance",
    "eigendecompose",
    "estimate_covariance",
    "generate",
    "inner_product",
    "l2_distance",
    "pairwise_distances",
    "run_kmeans",
    "sample_mean",
    "score",
    "silhouette",
    "spectrum_of",
    "sweep_p",
    "truncated_mahalanobis",
]
