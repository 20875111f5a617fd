"""Synthetic two-group samples built from a truncated Karhunen-Loeve expansion.

Each curve is ``m(t) + sum_k Z_k sqrt(rho_k) theta_k(t)`` on ``[0, 1]``, with
the cosine/sine basis ``theta_k`` and variances ``rho_k`` below. The two
groups differ only in their mean:

* case ``i``   -- univariate, mean shift along components 1-3;
* case ``ii``  -- univariate, mean shift along components 4..K;
* case ``iii`` -- bivariate, shift along 1-3 applied to both coordinates;
* case ``iv``  -- bivariate, shift along 4..K applied to both coordinates.

In the bivariate cases the score pair ``(Z_k^(1), Z_k^(2))`` is normal with
unit variances and correlation 0.5, drawn as ``L @ N`` with ``L`` the
Cholesky factor of the score covariance and ``N`` i.i.d. standard normals.

Random numbers come from numpy's PCG64 generator (``default_rng``); standard
normals use numpy's ziggurat sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import FunctionalSample, Grid

CASES = ("i", "ii", "iii", "iv")
SCORE_COVARIANCE = np.array([[1.0, 0.5], [0.5, 1.0]])
GROUP_LABELS = ("X", "Y")


@dataclass(frozen=True)
class ScenarioSpec:
    case_id: str
    T: int = 150
    K_tilde: int = 100
    n1: int = 50
    n2: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.case_id not in CASES:
            raise ValueError(f"unknown case {self.case_id!r}; expected one of {', '.join(CASES)}")
        if self.T < 2:
            raise ValueError("T must be at least 2")
        if self.K_tilde < 1:
            raise ValueError("K_tilde must be positive")
        if self.n1 < 1 or self.n2 < 1 or self.n1 + self.n2 < 2:
            raise ValueError("group sizes must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def n_components(self) -> int:
        return 1 if self.case_id in ("i", "ii") else 2

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        return {
            "case_id": self.case_id,
            "T": self.T,
            "K_tilde": self.K_tilde,
            "n1": self.n1,
            "n2": self.n2,
            "seed": int(self.seed),
        }


def rho(k: int) -> float:
    if k < 1:
        raise ValueError(f"component index must be >= 1, got {k}")
    if k <= 3:
        return 1.0 / (k + 1)
    return 1.0 / (k + 1) ** 2


def theta(k: int, t):
    """Orthonormal basis of L2[0,1]: 1, then sqrt(2) sin(k pi t) for even k, sqrt(2) cos((k-1) pi t) for odd k."""
    if k < 1:
        raise ValueError(f"basis index must be >= 1, got {k}")
    t = np.asarray(t, dtype=float)
    if k == 1:
        out = np.ones_like(t)
    elif k % 2 == 0:
        out = math.sqrt(2.0) * np.sin(k * math.pi * t)
    else:
        out = math.sqrt(2.0) * np.cos((k - 1) * math.pi * t)
    return float(out) if out.ndim == 0 else out


def basis_matrix(K: int, t: np.ndarray) -> np.ndarray:
    return np.vstack([theta(k, t) for k in range(1, K + 1)])


def rho_vector(K: int) -> np.ndarray:
    return np.array([rho(k) for k in range(1, K + 1)])


def group_means(spec: ScenarioSpec, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """``(J, T)`` means of the two groups."""
    t = grid.points
    K = spec.K_tilde
    if spec.n_components == 1:
        m1 = (t * (1 - t))[np.newaxis, :]
    else:
        m1 = np.vstack([t * (1 - t), 4 * t**2 * (1 - t)])
    if spec.case_id in ("i", "iii"):
        shifted = range(1, min(3, K) + 1)
    else:
        shifted = range(4, K + 1)
    shift = np.zeros_like(t)
    for k in shifted:
        shift += math.sqrt(rho(k)) * theta(k, t)
    return m1, m1 + shift[np.newaxis, :]


def _scores(rng: np.random.Generator, n: int, K: int, J: int) -> np.ndarray:
    if J == 1:
        return rng.standard_normal((n, K, 1))
    L = np.linalg.cholesky(SCORE_COVARIANCE)
    return rng.standard_normal((n, K, 2)) @ L.T


def generate(spec: ScenarioSpec) -> FunctionalSample:
    """Draw group 1 (label ``"X"``) then group 2 (label ``"Y"``)."""
    grid = Grid.uniform(0.0, 1.0, spec.T)
    rng = np.random.default_rng(int(spec.seed))
    Theta = basis_matrix(spec.K_tilde, grid.points)
    sd = np.sqrt(rho_vector(spec.K_tilde))
    J = spec.n_components
    means = group_means(spec, grid)
    blocks = []
    for size, m in zip((spec.n1, spec.n2), means):
        Z = _scores(rng, size, spec.K_tilde, J)
        # (n, K, J) scores -> (n, J, T) curves
        fluct = np.einsum("nkj,k,kt->njt", Z, sd, Theta)
        blocks.append(m[np.newaxis, :, :] + fluct)
    labels = (GROUP_LABELS[0],) * spec.n1 + (GROUP_LABELS[1],) * spec.n2
    return FunctionalSample(np.concatenate(blocks), grid, labels)
