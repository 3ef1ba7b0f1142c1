"""Empirical semivariance, parametric variogram models and their fitting.

Two model families are provided, both parameterised by a sill, a range and
a nugget::

    gaussian     nugget + sill * (1 - exp(-3 h^2 / a^2))
    exponential  nugget + sill * (1 - exp(-3 h / a))

With this "practical range" convention both reach 95% of the sill at
``h = a``.  The Gaussian model is parabolic at the origin, the exponential
model is linear there.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .exceptions import (
    EmptyResultError,
    FitError,
    UndefinedStatisticError,
    ValidationError,
)
from .sample_model import SampleSet, pairwise_distances

__all__ = [
    "FAMILIES",
    "VariogramCloud",
    "BinnedVariogram",
    "VariogramModel",
    "VariogramFit",
    "empirical_semivariance",
    "bin_cloud",
    "gaussian_variogram",
    "exponential_variogram",
    "model_to_covariance",
    "fit_variogram",
    "fit_cloud",
    "weighted_residual",
    "morans_i",
]

FAMILIES = ("gaussian", "exponential")

# relative spread of bin means below which the range is unidentifiable
FLAT_TOL = 1e-6
# largest range the search may reach, as a multiple of h_max; beyond it sill
# and range are confounded (the Gaussian model degenerates to a parabola)
MAX_RANGE_FACTOR = 2.0


@dataclass(frozen=True)
class VariogramCloud:
    """All unordered sample pairs ``i < j`` with lag ``h`` and semivariance ``v``."""

    h: np.ndarray
    v: np.ndarray
    i: np.ndarray
    j: np.ndarray

    def __len__(self):
        return self.h.shape[0]


@dataclass(frozen=True)
class BinnedVariogram:
    """Distance-binned cloud. Empty bins are omitted."""

    h_center: np.ndarray
    gamma: np.ndarray
    count: np.ndarray
    h_max: float

    def __len__(self):
        return self.h_center.shape[0]


@dataclass(frozen=True)
class VariogramModel:
    family: str
    sill: float
    range: float
    nugget: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown variogram family {self.family!r}")
        if not (np.isfinite(self.sill) and self.sill > 0):
            raise ValidationError(f"sill must be positive, got {self.sill}")
        if not (np.isfinite(self.range) and self.range > 0):
            raise ValidationError(f"range must be positive, got {self.range}")
        if not (np.isfinite(self.nugget) and self.nugget >= 0):
            raise ValidationError(f"nugget must be non-negative, got {self.nugget}")

    def __call__(self, h):
        return _semivariance(self.family, h, self.sill, self.range, self.nugget)

    def covariance(self, h):
        return model_to_covariance(self, h)


@dataclass
class VariogramFit:
    model: VariogramModel
    loss: float
    converged: bool
    warning: str | None = None
    trace: list = field(default_factory=list)


def _semivariance(family, h, sill, rng, nugget):
    h = np.asarray(h, dtype=float)
    if family == "gaussian":
        return nugget + sill * -np.expm1(-3.0 * h * h / (rng * rng))
    return nugget + sill * -np.expm1(-3.0 * h / rng)


def gaussian_variogram(h, model: VariogramModel):
    """Gaussian semivariance ``nugget + sill * (1 - exp(-3 h^2 / a^2))``."""
    return _semivariance("gaussian", h, model.sill, model.range, model.nugget)


def exponential_variogram(h, model: VariogramModel):
    """Exponential semivariance ``nugget + sill * (1 - exp(-3 h / a))``."""
    return _semivariance("exponential", h, model.sill, model.range, model.nugget)


def model_to_covariance(model: VariogramModel, h):
    """Covariance ``c(h) = nugget + sill - gamma(h)``.

    At exactly ``h = 0`` the nugget is treated as the measurement-error
    discontinuity and the returned value is the sill.
    """
    h = np.asarray(h, dtype=float)
    c = model.nugget + model.sill - model(h)
    return np.where(h == 0.0, model.sill, c)


def empirical_semivariance(samples: SampleSet, coords=None) -> VariogramCloud:
    """Semivariance cloud ``v_ij = 0.5 (z_i - z_j)^2`` over all pairs ``i < j``.

    Distances use ``samples.coords`` (every column, so an augmented sample
    set yields the expanded-space cloud) unless ``coords`` is given.
    """
    if samples.n < 2:
        raise ValidationError("need at least two samples for a variogram cloud")
    pts = samples.coords if coords is None else coords
    d = pairwise_distances(pts)
    i, j = np.triu_indices(samples.n, k=1)
    z = samples.values
    return VariogramCloud(h=d[i, j], v=0.5 * (z[i] - z[j]) ** 2, i=i, j=j)


def bin_cloud(cloud: VariogramCloud, n_bins: int, h_max: float) -> BinnedVariogram:
    """Average the cloud in ``n_bins`` equal-width bins on ``[0, h_max]``.

    Bin centres are bin midpoints. Pairs beyond ``h_max`` are dropped; a
    pair exactly at ``h_max`` falls in the last bin.
    """
    if n_bins < 1:
        raise ValidationError("n_bins must be at least 1")
    if not h_max > 0:
        raise ValidationError("h_max must be positive")
    keep = cloud.h <= h_max
    if not np.any(keep):
        raise EmptyResultError(f"no pair has lag <= h_max={h_max}")
    h, v = cloud.h[keep], cloud.v[keep]
    width = h_max / n_bins
    idx = np.minimum((h / width).astype(int), n_bins - 1)
    count = np.bincount(idx, minlength=n_bins)
    total = np.bincount(idx, weights=v, minlength=n_bins)
    occupied = count > 0
    centers = (np.arange(n_bins) + 0.5) * width
    return BinnedVariogram(
        h_center=centers[occupied],
        gamma=total[occupied] / count[occupied],
        count=count[occupied],
        h_max=float(h_max),
    )


def weighted_residual(model: VariogramModel, h, gamma, weight=None) -> float:
    """``sum(weight * (gamma - model(h))**2)``."""
    r = np.asarray(gamma, dtype=float) - model(h)
    w = 1.0 if weight is None else np.asarray(weight, dtype=float)
    return float(np.sum(w * r * r))


def _unpack(theta, fit_nugget, log_range_cap=np.inf):
    sill, rng = np.exp(theta[0]), np.exp(min(theta[1], log_range_cap))
    nugget = max(theta[2], 0.0) if fit_nugget else 0.0
    return sill, rng, nugget


def _fit_weighted(h, g, w, family, h_max, fit_nugget, extra_starts=(), max_iter=4000):
    if family not in FAMILIES:
        raise ValidationError(f"unknown variogram family {family!r}")
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    w = np.asarray(w, dtype=float)
    level = float(np.sum(w * g) / np.sum(w))

    spread = np.ptp(g) / abs(level) if level != 0 else 0.0
    if spread < FLAT_TOL:
        sill = level if level > 0 else np.finfo(float).tiny
        model = VariogramModel(family, sill, float(h_max), 0.0)
        loss = weighted_residual(model, h, g, w)
        return VariogramFit(model, loss, True, "flat_cloud", [(0, loss)])

    cap = np.log(MAX_RANGE_FACTOR * h_max)

    def objective(theta):
        sill, rng, nugget = _unpack(theta, fit_nugget, cap)
        r = g - _semivariance(family, h, sill, rng, nugget)
        return float(np.sum(w * r * r))

    starts = []
    for frac in (0.25, 0.5, 1.0):
        s = [np.log(level), np.log(frac * h_max)]
        starts.append(s + [0.0] if fit_nugget else s)
    for m in extra_starts:
        s = [np.log(m.sill), min(np.log(m.range), cap)]
        starts.append(s + [m.nugget] if fit_nugget else s)

    scale = float(np.sum(w * g * g)) + np.finfo(float).tiny
    options = {"xatol": 1e-10, "fatol": 1e-15 * scale, "maxiter": max_iter}

    def run(x0):
        trace = []
        res = minimize(
            objective, np.asarray(x0, dtype=float), method="Nelder-Mead",
            options=options, callback=lambda xk: trace.append(objective(xk)),
        )
        return res, trace

    best, best_trace = None, None
    for x0 in starts:
        res, trace = run(x0)
        if best is None or res.fun < best.fun:
            best, best_trace = res, trace
    # one restart from the winner guards against simplex collapse
    polish, polish_trace = run(best.x)
    converged = bool(polish.success)
    if polish.fun <= best.fun:
        best, best_trace = polish, best_trace + polish_trace

    sill, rng, nugget = _unpack(best.x, fit_nugget, cap)
    model = VariogramModel(family, float(sill), float(rng), float(nugget))
    trace = [(k, f) for k, f in enumerate(best_trace)] or [(0, float(best.fun))]
    return VariogramFit(model, float(best.fun), converged, None, trace)


def fit_variogram(
    binned: BinnedVariogram, family: str = "gaussian", fit_nugget: bool = False,
    max_iter: int = 4000,
) -> VariogramFit:
    """Least-squares fit of a variogram model to binned semivariances.

    Minimises ``sum(count * (gamma - model(h_center))**2)`` with a
    Nelder-Mead search over log sill, log range and (optionally) a clipped
    nugget, multi-started at sill = mean semivariance and range in
    {1/4, 1/2, 1} * h_max.

    Raises
    ------
    FitError
        If the simplex search exhausts ``max_iter``; the best fit so far is
        attached as ``err.best``.
    """
    if len(binned) < 3:
        raise ValidationError("fitting needs at least 3 bins")
    fit = _fit_weighted(
        binned.h_center, binned.gamma, binned.count, family, binned.h_max,
        fit_nugget, max_iter=max_iter,
    )
    if fit.warning == "flat_cloud":
        warnings.warn("flat variogram: range fixed at h_max", RuntimeWarning, stacklevel=2)
    if not fit.converged:
        raise FitError("variogram fit did not converge", best=fit)
    return fit


def fit_cloud(
    cloud: VariogramCloud, family: str = "gaussian", fit_nugget: bool = False,
    extra_starts=(), max_iter: int = 4000, h_max: float | None = None,
) -> VariogramFit:
    """Fit a model to the raw pair cloud with unit weight per pair.

    Same search as :func:`fit_variogram`; ``h_max`` (starting ranges and
    range cap) defaults to the largest lag. Never raises on
    non-convergence, the flag is left on the result.
    """
    if len(cloud) < 2:
        raise ValidationError("fitting needs at least 2 pairs")
    if h_max is None:
        h_max = float(np.max(cloud.h)) or 1.0
    return _fit_weighted(
        cloud.h, cloud.v, np.ones(len(cloud)), family, h_max, fit_nugget,
        extra_starts=extra_starts, max_iter=max_iter,
    )


def morans_i(samples: SampleSet, weight_scheme: str = "inverse_distance") -> float:
    """Global Moran's I of ``samples.values``.

    Weights are inverse geographic distances with zero self-weight,
    row-standardised, so ``S0 = n`` and::

        I = sum_ij w_ij y_i y_j / sum_i y_i^2,   y = z - mean(z)
    """
    if weight_scheme != "inverse_distance":
        raise ValidationError(f"unknown weight scheme {weight_scheme!r}")
    n = samples.n
    if n < 3:
        raise ValidationError("Moran's I needs at least 3 samples")
    y = samples.values - samples.values.mean()
    ss = float(y @ y)
    if ss <= 1e-24 * max(1.0, float(np.max(np.abs(samples.values))) ** 2):
        raise UndefinedStatisticError("Moran's I is undefined for a constant field")
    d = pairwise_distances(samples.geo)
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] == 0):
        raise ValidationError("coincident sample locations give infinite weights")
    w = np.zeros_like(d)
    w[off] = 1.0 / d[off]
    w /= w.sum(axis=1, keepdims=True)
    return float(y @ w @ y / ss)
