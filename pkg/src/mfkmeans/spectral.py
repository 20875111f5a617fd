"""Sample covariance operator of a functional sample and its eigenpairs.

The covariance kernel of a ``J``-variate sample on ``T`` grid points is
stored as a ``(J*T, J*T)`` matrix with components stacked end to end. The
covariance *operator* acts by integration against the kernel, so its
eigenvalues are the matrix eigenvalues times ``dt`` and its unit-norm
eigenfunctions are the unit eigenvectors divided by ``sqrt(dt)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FunctionalSample, Grid, MultiCurve
from .exceptions import InsufficientSampleError, NumericalError

SYMMETRY_RTOL = 1e-10
RANK_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class CovarianceEstimate:
    matrix: np.ndarray
    grid: Grid
    n_components: int
    n_curves: Optional[int] = None
    mean: Optional[MultiCurve] = None

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs of the covariance operator, at operator scale.

    ``eigenvalues`` has ``total_dim`` entries sorted nonincreasingly; entries
    past ``rank`` are exactly zero. ``eigenfunctions`` holds only the ``rank``
    retained eigenfunctions as an ``(rank, J, T)`` array, orthonormal under
    :func:`mfkmeans.core.inner_product`.
    """

    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    rank: int
    grid: Grid
    n_components: int
    mean: Optional[MultiCurve] = None

    @property
    def total_dim(self) -> int:
        return self.n_components * self.grid.size

    @property
    def retained(self) -> np.ndarray:
        return self.eigenvalues[: self.rank]

    def basis(self) -> np.ndarray:
        """Retained eigenfunctions as the columns of a ``(J*T, rank)`` matrix."""
        return self.eigenfunctions.reshape(self.rank, self.total_dim).T

    def eigenfunction(self, k: int) -> MultiCurve:
        """The ``k``-th eigenfunction, 1-based."""
        if not 1 <= k <= self.rank:
            raise IndexError(f"eigenfunction index {k} outside 1..{self.rank}")
        return MultiCurve(self.eigenfunctions[k - 1], self.grid)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "eigenvalue"])
            for k, lam in enumerate(self.eigenvalues, start=1):
                w.writerow([k, repr(float(lam))])


def estimate_covariance(sample: FunctionalSample) -> CovarianceEstimate:
    """Unbiased (``1/(n-1)``) pointwise covariance of all curves in ``sample``."""
    n = sample.n
    if n < 2:
        raise InsufficientSampleError(f"need at least 2 curves to estimate a covariance, got {n}")
    X = sample.flat()
    centered = X - X.mean(axis=0)
    C = centered.T @ centered / (n - 1)
    C = 0.5 * (C + C.T)
    C.setflags(write=False)
    mean = MultiCurve(X.mean(axis=0).reshape(sample.n_components, -1), sample.grid)
    return CovarianceEstimate(C, sample.grid, sample.n_components, n, mean)


def eigendecompose(cov: CovarianceEstimate) -> Spectrum:
    C = np.asarray(cov.matrix, dtype=float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise NumericalError(f"covariance matrix must be square, got shape {C.shape}")
    if C.shape[0] != cov.n_components * cov.grid.size:
        raise NumericalError("covariance matrix size does not match grid and component count")
    if not np.all(np.isfinite(C)):
        raise NumericalError("covariance matrix has non-finite entries")
    scale = np.max(np.abs(C)) if C.size else 0.0
    if np.max(np.abs(C - C.T)) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise NumericalError("covariance matrix is not symmetric")

    dt = cov.grid.weight
    vals, vecs = np.linalg.eigh(0.5 * (C + C.T))
    order = np.argsort(vals)[::-1]
    vals = vals[order] * dt
    vecs = vecs[:, order]

    top = vals[0] if vals.size else 0.0
    keep = (vals > 0.0) & (vals > top * RANK_RTOL)
    rank = int(np.count_nonzero(keep))
    if cov.n_curves is not None:
        rank = min(rank, cov.n_curves - 1)
    eigenvalues = np.zeros_like(vals)
    eigenvalues[:rank] = vals[:rank]

    phi = vecs[:, :rank] / np.sqrt(dt)
    # deterministic sign: largest-magnitude entry of each eigenfunction is positive
    pivots = np.argmax(np.abs(phi), axis=0)
    signs = np.sign(phi[pivots, np.arange(rank)])
    signs[signs == 0] = 1.0
    phi = phi * signs
    eigenfunctions = phi.T.reshape(rank, cov.n_components, cov.grid.size).copy()

    eigenvalues.setflags(write=False)
    eigenfunctions.setflags(write=False)
    return Spectrum(eigenvalues, eigenfunctions, rank, cov.grid, cov.n_components, cov.mean)


def spectrum_of(sample: FunctionalSample) -> Spectrum:
    return eigendecompose(estimate_covariance(sample))
