"""Point observations in geographic + covariate space and the distance
machinery shared by the rest of the package.

Coordinates are assumed to be projected to a planar reference system;
all distances are Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .exceptions import ValidationError

__all__ = [
    "SampleSet",
    "ColumnScaling",
    "pairwise_distances",
    "cross_distances",
    "augment_dimensions",
    "standardize_columns",
    "destandardize_columns",
]


def _as_matrix(a, name, ncols=None):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None] if ncols != 0 else a.reshape(-1, 0)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SampleSet:
    """n point observations.

    Parameters
    ----------
    coords : array_like, shape (n, d_s)
        Geographic coordinates, ``d_s`` in {2, 3}. After
        :func:`augment_dimensions` the matrix may carry extra columns;
        ``n_geo`` records how many of them are geographic.
    values : array_like, shape (n,)
        Observed variable z.
    covariates : array_like, shape (n, d_x), optional
        Non-spatial covariates. Empty by default.
    """

    coords: np.ndarray
    values: np.ndarray
    covariates: np.ndarray = field(default=None)
    n_geo: int = field(default=None)

    def __post_init__(self):
        coords = _as_matrix(self.coords, "coords")
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise ValidationError("values contain non-finite entries")
        n = coords.shape[0]
        if n < 1:
            raise ValidationError("a sample set needs at least one observation")
        if values.shape[0] != n:
            raise ValidationError(
                f"values has {values.shape[0]} rows, coords has {n}"
            )
        if self.covariates is None:
            cov = np.zeros((n, 0))
        else:
            cov = np.asarray(self.covariates, dtype=float)
            if cov.ndim == 1:
                cov = cov[:, None]
            if cov.ndim != 2 or cov.shape[0] != n:
                raise ValidationError("covariates must be an (n, d_x) matrix")
            if not np.all(np.isfinite(cov)):
                raise ValidationError("covariates contain non-finite entries")
        n_geo = coords.shape[1] if self.n_geo is None else int(self.n_geo)
        if n_geo not in (2, 3):
            raise ValidationError(f"geographic dimension must be 2 or 3, got {n_geo}")
        if coords.shape[1] < n_geo:
            raise ValidationError("coords has fewer columns than n_geo")
        object.__setattr__(self, "coords", _frozen(coords))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "covariates", _frozen(cov))
        object.__setattr__(self, "n_geo", n_geo)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def geo(self) -> np.ndarray:
        """The geographic part of ``coords``."""
        return self.coords[:, : self.n_geo]

    def subset(self, index) -> "SampleSet":
        index = np.asarray(index)
        return SampleSet(
            self.coords[index], self.values[index], self.covariates[index], self.n_geo
        )


def pairwise_distances(points) -> np.ndarray:
    """Symmetric Euclidean distance matrix with an exact zero diagonal.

    Parameters
    ----------
    points : array_like, shape (n, d)

    Returns
    -------
    ndarray, shape (n, n)
    """
    pts = _as_matrix(points, "points")
    if pts.shape[0] < 1:
        raise ValidationError("need at least one point")
    if pts.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(pts, "euclidean"))


def cross_distances(a, b) -> np.ndarray:
    """Euclidean distances between the rows of ``a`` and the rows of ``b``."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValidationError("point sets differ in dimension")
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def augment_dimensions(base: SampleSet, extra) -> SampleSet:
    """Append ``extra`` columns to the coordinates of ``base``.

    Values and covariates are carried over unchanged, so pairwise distances
    of the result are computed in the expanded space ``[coords | extra]``.
    """
    extra = np.asarray(extra, dtype=float)
    if extra.ndim == 1:
        extra = extra[:, None]
    if extra.shape[0] != base.n:
        raise ValidationError(
            f"extra has {extra.shape[0]} rows but the sample set has {base.n}"
        )
    if not np.all(np.isfinite(extra)):
        raise ValidationError("extra contains non-finite entries")
    if extra.shape[1] == 0:
        return base
    return SampleSet(
        np.hstack([base.coords, extra]), base.values, base.covariates, base.n_geo
    )


@dataclass(frozen=True)
class ColumnScaling:
    """Per-column location/scale recorded by :func:`standardize_columns`."""

    mean: np.ndarray
    scale: np.ndarray

    def apply(self, m) -> np.ndarray:
        return (np.asarray(m, dtype=float) - self.mean) / self.scale

    def invert(self, m) -> np.ndarray:
        return np.asarray(m, dtype=float) * self.scale + self.mean


def standardize_columns(m) -> tuple[np.ndarray, ColumnScaling]:
    """Centre every column and scale it to unit (population) standard deviation.

    Constant columns map to zero and record a scale of 1 so the transform
    stays invertible.
    """
    m = _as_matrix(m, "m")
    mean = m.mean(axis=0)
    sd = m.std(axis=0)
    # a column is constant when its spread is at round-off level of its magnitude
    tiny = 1e-13 * np.maximum(np.abs(mean), 1.0)
    scale = np.where(sd > tiny, sd, 1.0)
    out = (m - mean) / scale
    out[:, sd <= tiny] = 0.0
    return out, ColumnScaling(mean, scale)


def destandardize_columns(m, scaling: ColumnScaling) -> np.ndarray:
    return scaling.invert(m)
