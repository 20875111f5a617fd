"""Discretized multivariate functional data on an equispaced grid.

A unit of observation is a ``J x T`` array: ``J`` component functions sampled
on a shared grid of ``T`` points. Integrals over the domain are evaluated with
the rectangle rule, using the constant weight ``dt`` of the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .exceptions import DimensionError

_EQUISPACED_RTOL = 1e-8


def _frozen(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Equispaced abscissae ``t_1 < ... < t_T`` with quadrature weight ``dt``."""

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen(self.points, 1, "grid points")
        if pts.size < 2:
            raise ValueError("a grid needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        steps = np.diff(pts)
        if np.any(steps <= 0):
            raise ValueError("grid points must be strictly increasing")
        if not np.allclose(steps, steps.mean(), rtol=_EQUISPACED_RTOL, atol=0.0):
            raise ValueError("grid points must be equispaced")
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, t_min: float, t_max: float, size: int) -> "Grid":
        if size < 2:
            raise ValueError("a grid needs at least 2 points")
        if not t_max > t_min:
            raise ValueError("t_max must exceed t_min")
        return cls(np.linspace(t_min, t_max, size))

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def t_min(self) -> float:
        return float(self.points[0])

    @property
    def t_max(self) -> float:
        return float(self.points[-1])

    @property
    def weight(self) -> float:
        return (self.t_max - self.t_min) / (self.size - 1)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return self.size == other.size and bool(np.array_equal(self.points, other.points))

    def __hash__(self):
        return hash((self.size, self.t_min, self.t_max))

    def to_dict(self) -> dict:
        return {"t_min": self.t_min, "t_max": self.t_max, "T": self.size}

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls.uniform(float(d["t_min"]), float(d["t_max"]), int(d["T"]))


@dataclass(frozen=True, eq=False)
class MultiCurve:
    """One statistical unit: ``values[l, j]`` is component ``l`` at ``grid.points[j]``."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[np.newaxis, :]
        vals = _frozen(vals, 2, "curve values")
        if vals.shape[0] < 1:
            raise DimensionError("a curve needs at least one component")
        if vals.shape[1] != self.grid.size:
            raise DimensionError(
                f"curve has {vals.shape[1]} points per component, grid has {self.grid.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("curve values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def n_components(self) -> int:
        return int(self.values.shape[0])

    def __add__(self, other: "MultiCurve") -> "MultiCurve":
        _check_compatible(self, other)
        return MultiCurve(self.values + other.values, self.grid)

    def __sub__(self, other: "MultiCurve") -> "MultiCurve":
        _check_compatible(self, other)
        return MultiCurve(self.values - other.values, self.grid)

    def __neg__(self) -> "MultiCurve":
        return MultiCurve(-self.values, self.grid)

    def __mul__(self, scalar: float) -> "MultiCurve":
        return MultiCurve(float(scalar) * self.values, self.grid)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, MultiCurve):
            return NotImplemented
        return self.grid == other.grid and bool(np.array_equal(self.values, other.values))

    __hash__ = None

    @classmethod
    def zeros(cls, grid: Grid, n_components: int = 1) -> "MultiCurve":
        return cls(np.zeros((n_components, grid.size)), grid)

    @classmethod
    def constant(cls, level: float, grid: Grid, n_components: int = 1) -> "MultiCurve":
        return cls(np.full((n_components, grid.size), float(level)), grid)


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """``n`` curves on one grid, stored as an ``(n, J, T)`` array.

    ``labels`` holds optional group identifiers (any hashable values), one per curve.
    """

    values: np.ndarray
    grid: Grid
    labels: Optional[tuple] = None
    ids: Optional[tuple] = field(default=None)

    def __post_init__(self):
        vals = _frozen(self.values, 3, "sample values")
        n, J, T = vals.shape
        if n < 2:
            raise ValueError(f"a functional sample needs at least 2 curves, got {n}")
        if J < 1:
            raise DimensionError("curves need at least one component")
        if T != self.grid.size:
            raise DimensionError(f"sample has {T} points per component, grid has {self.grid.size}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sample values must be finite")
        object.__setattr__(self, "values", vals)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != n:
                raise ValueError(f"got {len(labels)} labels for {n} curves")
            object.__setattr__(self, "labels", labels)
        ids = tuple(range(n)) if self.ids is None else tuple(self.ids)
        if len(ids) != n:
            raise ValueError(f"got {len(ids)} curve ids for {n} curves")
        if len(set(ids)) != n:
            raise ValueError("curve ids must be unique")
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_curves(cls, curves: Sequence[MultiCurve], labels=None, ids=None) -> "FunctionalSample":
        if len(curves) < 1:
            raise ValueError("no curves given")
        grid = curves[0].grid
        J = curves[0].n_components
        for c in curves[1:]:
            if c.grid != grid or c.n_components != J:
                raise DimensionError("all curves must share one grid and one number of components")
        return cls(np.stack([c.values for c in curves]), grid, labels, ids)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_components(self) -> int:
        return int(self.values.shape[1])

    @property
    def curves(self) -> list[MultiCurve]:
        return [MultiCurve(v, self.grid) for v in self.values]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> MultiCurve:
        return MultiCurve(self.values[i], self.grid)

    def __iter__(self) -> Iterator[MultiCurve]:
        return iter(self.curves)

    def flat(self) -> np.ndarray:
        """Curves as rows of an ``(n, J*T)`` matrix, components stacked end to end."""
        return self.values.reshape(self.n, -1)


def _check_compatible(a: MultiCurve, b: MultiCurve) -> None:
    if a.grid != b.grid:
        raise DimensionError("curves live on different grids")
    if a.n_components != b.n_components:
        raise DimensionError(
            f"curves have different numbers of components ({a.n_components} vs {b.n_components})"
        )


def inner_product(a: MultiCurve, b: MultiCurve) -> float:
    """Sum over components of the rectangle-rule integral of ``a_l * b_l``."""
    _check_compatible(a, b)
    return float(np.sum(a.values * b.values) * a.grid.weight)


def l2_distance(a: MultiCurve, b: MultiCurve) -> float:
    d = a - b
    return float(np.sqrt(max(inner_product(d, d), 0.0)))


def sample_mean(sample: FunctionalSample, subset: Optional[Sequence[int]] = None) -> MultiCurve:
    """Pointwise mean of all curves, or of the curves indexed by ``subset``."""
    if subset is None:
        vals = sample.values
    else:
        idx = np.asarray(subset, dtype=int)
        if idx.size == 0:
            raise ValueError("cannot average an empty subset of curves")
        vals = sample.values[idx]
    return MultiCurve(vals.mean(axis=0), sample.grid)
