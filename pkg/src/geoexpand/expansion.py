"""Dimension expansion: learn latent per-sample coordinates ``Z'`` so that a
single stationary variogram explains the semivariance cloud measured in the
expanded space ``[coords | Z']``.

The fitted quantity is::

    sum_{i<j} (v_ij - gamma_phi(d_ij([X, Z'])))^2 + lam * ||Z'||_F^2

with ``v_ij = 0.5 (z_i - z_j)^2``. Because the unpenalised objective only
depends on distances, ``Z'`` is defined up to rotation, reflection and
translation; the ridge term and column centring fix the gauge.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .exceptions import ValidationError
from .regression import KernelParams, gp_predict
from .sample_model import (
    ColumnScaling,
    SampleSet,
    pairwise_distances,
    standardize_columns,
)
from .variogram import (
    BinnedVariogram,
    VariogramCloud,
    VariogramFit,
    VariogramModel,
    bin_cloud,
    empirical_semivariance,
    fit_cloud,
    model_to_covariance,
)

log = logging.getLogger(__name__)

__all__ = [
    "ExpansionConfig",
    "Expansion",
    "StationarityReport",
    "expansion_objective",
    "expansion_gradient",
    "learn_expansion",
    "stationarity_report",
    "interpolate_latent",
    "point_biserial",
]

OPTIMIZERS = ("gradient", "lbfgs", "simplex")


@dataclass(frozen=True)
class ExpansionConfig:
    """Settings for :func:`learn_expansion`.

    Attributes
    ----------
    p : int
        Number of latent dimensions to learn.
    lam : float or None
        Ridge weight on ``||Z'||^2``; ``None`` means ``1e-3 * var(v)`` of
        the semivariance cloud.
    optimizer : {"gradient", "lbfgs", "simplex"}
        Latent-coordinate update. ``"gradient"`` is steepest descent with
        Armijo backtracking and Barzilai-Borwein trial steps.
    max_iters : int
        Outer (variogram fit, latent update) rounds.
    inner_iters : int
        Iteration budget of each latent update.
    tolerance : float
        Relative objective change that ends the outer loop.
    init_scale : float
        Standard deviation of the initial latent noise, in units of the
        standardised coordinates.
    seed : int
    """

    p: int = 1
    lam: float | None = None
    optimizer: str = "gradient"
    max_iters: int = 200
    inner_iters: int = 500
    tolerance: float = 1e-8
    init_scale: float = 1e-2
    seed: int = 42

    def __post_init__(self):
        if self.p < 1:
            raise ValidationError("p must be at least 1")
        if self.lam is not None and self.lam < 0:
            raise ValidationError("lam must be non-negative")
        if self.optimizer not in OPTIMIZERS:
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")
        if not self.tolerance > 0:
            raise ValidationError("tolerance must be positive")
        if self.max_iters < 1 or self.inner_iters < 1:
            raise ValidationError("iteration budgets must be positive")


@dataclass
class Expansion:
    """Result of :func:`learn_expansion`.

    ``z_prime`` is in the units of the standardised coordinates
    ``coords_std``; ``scaling`` maps original coordinates there.
    """

    z_prime: np.ndarray
    phi_hat: VariogramModel
    trace: list
    converged: bool
    lam: float
    coords_std: np.ndarray
    scaling: ColumnScaling
    objective: float = field(default=np.nan)

    @property
    def expanded_coords(self) -> np.ndarray:
        return np.hstack([self.coords_std, self.z_prime])


# ---- objective and gradient


def _pairs(n):
    return np.triu_indices(n, k=1)


def _dist_and_dgamma(family, d, sill, rng):
    """Semivariance (without nugget), ``gamma'(d) / d`` and ``d gamma / d log a``."""
    if family == "gaussian":
        e = np.exp(-3.0 * d * d / (rng * rng))
        gam = sill * (1.0 - e)
        slope_over_d = 6.0 * sill * e / (rng * rng)
        dlog_range = -6.0 * sill * e * d * d / (rng * rng)
    else:
        e = np.exp(-3.0 * d / rng)
        gam = sill * (1.0 - e)
        with np.errstate(divide="ignore", invalid="ignore"):
            slope_over_d = np.where(d > 0, 3.0 * sill * e / (rng * np.where(d > 0, d, 1.0)), 0.0)
        dlog_range = -3.0 * sill * e * d / rng
    return gam, slope_over_d, dlog_range


def _prepare(z_prime, samples):
    z_prime = np.asarray(z_prime, dtype=float)
    if z_prime.ndim == 1:
        z_prime = z_prime[:, None]
    if z_prime.shape[0] != samples.n:
        raise ValidationError("z_prime must have one row per sample")
    i, j = _pairs(samples.n)
    x = samples.coords
    dg2 = np.sum((x[i] - x[j]) ** 2, axis=1)
    dz = z_prime[i] - z_prime[j]
    d = np.sqrt(dg2 + np.sum(dz * dz, axis=1))
    z = samples.values
    v = 0.5 * (z[i] - z[j]) ** 2
    return z_prime, i, j, dz, d, v


def expansion_objective(z_prime, phi: VariogramModel, samples: SampleSet, lam: float = 0.0) -> float:
    """Squared misfit of the pair semivariances plus ``lam * ||Z'||_F^2``.

    Distances are taken in ``[samples.coords | z_prime]``.
    """
    z_prime, i, j, dz, d, v = _prepare(z_prime, samples)
    r = v - phi(d)
    return float(r @ r + lam * np.sum(z_prime * z_prime))


def expansion_gradient(z_prime, phi: VariogramModel, samples: SampleSet, lam: float = 0.0):
    """Analytic gradient of :func:`expansion_objective`.

    Returns
    -------
    grad_z : ndarray, shape (n, p)
    grad_phi : ndarray, shape (3,)
        Derivatives with respect to ``log sill``, ``log range`` and ``nugget``.

    Pairs at zero distance contribute nothing to ``grad_z``.
    """
    z_prime, i, j, dz, d, v = _prepare(z_prime, samples)
    gam, slope_over_d, dlog_range = _dist_and_dgamma(phi.family, d, phi.sill, phi.range)
    r = v - (phi.nugget + gam)
    # d/dz_i of r^2 = -2 r gamma'(d) (z_i - z_j) / d
    c = (-2.0 * r * slope_over_d)[:, None] * dz
    n, p = z_prime.shape
    grad_z = 2.0 * lam * z_prime
    for k in range(p):
        grad_z[:, k] += np.bincount(i, weights=c[:, k], minlength=n)
        grad_z[:, k] -= np.bincount(j, weights=c[:, k], minlength=n)
    grad_phi = np.array([
        np.sum(-2.0 * r * gam),
        np.sum(-2.0 * r * dlog_range),
        np.sum(-2.0 * r),
    ])
    return grad_z, grad_phi


# ---- latent updates


def _descend(fun, grad, x0, max_iter, tol):
    """Steepest descent, Armijo backtracking, Barzilai-Borwein trial step.

    Only steps that satisfy the sufficient-decrease test are taken, so the
    objective is monotone.
    """
    x = x0.copy()
    f = fun(x)
    g = grad(x)
    step = 1.0 / max(np.linalg.norm(g), 1e-12)
    x_prev = g_prev = None
    for _ in range(max_iter):
        gg = float(np.sum(g * g))
        if gg == 0.0:
            break
        if x_prev is not None:
            s, y = x - x_prev, g - g_prev
            sy = float(np.sum(s * y))
            if sy > 0:
                step = float(np.sum(s * s)) / sy
        for _ in range(60):
            x_new = x - step * g
            f_new = fun(x_new)
            if f_new <= f - 1e-4 * step * gg:
                break
            step *= 0.5
        else:
            break
        x_prev, g_prev = x, g
        decrease = f - f_new
        x, f = x_new, f_new
        g = grad(x)
        if decrease <= tol * max(abs(f), 1e-300):
            break
    return x, f


def _update_latent(z0, phi, samples, lam, config):
    shape = z0.shape

    def fun(flat):
        return expansion_objective(flat.reshape(shape), phi, samples, lam)

    def grad(flat):
        return expansion_gradient(flat.reshape(shape), phi, samples, lam)[0].ravel()

    x0 = z0.ravel()
    if config.optimizer == "gradient":
        x, _ = _descend(fun, grad, x0, config.inner_iters, 1e-12)
    elif config.optimizer == "lbfgs":
        res = minimize(fun, x0, jac=grad, method="L-BFGS-B",
                       options={"maxiter": config.inner_iters, "ftol": 1e-14, "gtol": 1e-10})
        x = res.x
    else:
        res = minimize(fun, x0, method="Nelder-Mead",
                       options={"maxiter": config.inner_iters * x0.size, "xatol": 1e-10,
                                "fatol": 1e-14, "adaptive": True})
        x = res.x
    # never accept a worse point, whatever the optimizer reports
    if fun(x) > fun(x0):
        x = x0
    z = x.reshape(shape)
    z = z - z.mean(axis=0)
    return z


def learn_expansion(samples: SampleSet, config: ExpansionConfig = ExpansionConfig()) -> Expansion:
    """Alternate variogram fitting and latent-coordinate updates.

    Each round (a) refits a Gaussian variogram to the pair cloud in the
    current expanded space, keeping the previous model when the refit is not
    better, then (b) moves ``Z'`` downhill with the variogram held fixed.
    Rounds stop when the relative objective change drops below
    ``config.tolerance`` or after ``config.max_iters`` rounds.

    Coordinates are standardised column-wise first; ``Z'`` lives in the
    same units.
    """
    if samples.n < 4:
        raise ValidationError("dimension expansion needs at least 4 samples")
    z = samples.values
    if np.ptp(z) <= 1e-12 * max(1.0, float(np.max(np.abs(z)))):
        raise ValidationError("all observed values are equal; nothing to expand")

    coords_std, scaling = standardize_columns(samples.coords)
    base = SampleSet(coords_std, z, n_geo=samples.n_geo)
    geo_cloud = empirical_semivariance(base)
    v = geo_cloud.v
    # the range search is capped relative to the geographic extent, which stays
    # fixed while Z' moves
    h_geo = float(geo_cloud.h.max())
    lam = 1e-3 * float(np.var(v)) if config.lam is None else float(config.lam)

    rng = np.random.default_rng(config.seed)
    zp = rng.normal(0.0, config.init_scale, size=(samples.n, config.p))
    zp -= zp.mean(axis=0)

    def objective(zp_, phi_):
        return expansion_objective(zp_, phi_, base, lam)

    def refit(zp_, phi_=None):
        cloud = empirical_semivariance(base, coords=np.hstack([coords_std, zp_]))
        starts = () if phi_ is None else (phi_,)
        return fit_cloud(cloud, "gaussian", extra_starts=starts, h_max=h_geo).model

    phi = refit(zp)
    f = objective(zp, phi)
    trace = [(0, f)]
    converged = False
    for it in range(1, config.max_iters + 1):
        cand = refit(zp, phi)
        if objective(zp, cand) <= f:
            phi = cand
        zp = _update_latent(zp, phi, base, lam, config)
        f_new = objective(zp, phi)
        trace.append((it, f_new))
        change = (f - f_new) / max(abs(f), 1e-300)
        f = f_new
        if change < config.tolerance:
            converged = True
            break
    if not converged:
        log.warning("dimension expansion stopped after %d rounds", config.max_iters)
    return Expansion(zp, phi, trace, converged, lam, coords_std, scaling, f)


# ---- diagnostics


@dataclass
class StationarityReport:
    """Geographic-only versus expanded-space variogram fits.

    ``residual_*`` are unweighted pair residual sums of squares;
    ``improvement_ratio = residual_expanded / residual_geographic``.
    """

    cloud_geographic: VariogramCloud
    cloud_expanded: VariogramCloud
    fit_geographic: VariogramModel
    fit_expanded: VariogramModel
    residual_geographic: float
    residual_expanded: float
    improvement_ratio: float
    min_eigenvalue: float
    psd: bool
    converged: bool

    def binned(self, n_bins=10):
        """Binned geographic and expanded clouds over their own lag ranges."""
        return (
            bin_cloud(self.cloud_geographic, n_bins, float(self.cloud_geographic.h.max())),
            bin_cloud(self.cloud_expanded, n_bins, float(self.cloud_expanded.h.max())),
        )


def _pair_rss(model, cloud):
    r = cloud.v - model(cloud.h)
    return float(r @ r)


def stationarity_report(samples: SampleSet, expansion: Expansion) -> StationarityReport:
    """Compare variogram fits before and after adding the latent coordinates.

    Also checks that the Gaussian covariance matrix implied by
    ``expansion.phi_hat`` over the expanded coordinates is positive
    semi-definite (minimum eigenvalue >= -1e-10).
    """
    base = SampleSet(expansion.coords_std, samples.values, n_geo=samples.n_geo)
    geo = empirical_semivariance(base)
    exp_cloud = empirical_semivariance(base, coords=expansion.expanded_coords)
    h_geo = float(geo.h.max())
    geo_fit = fit_cloud(geo, "gaussian").model
    exp_fit = fit_cloud(exp_cloud, "gaussian", extra_starts=(expansion.phi_hat,),
                        h_max=h_geo).model
    if _pair_rss(expansion.phi_hat, exp_cloud) < _pair_rss(exp_fit, exp_cloud):
        exp_fit = expansion.phi_hat
    rg, re = _pair_rss(geo_fit, geo), _pair_rss(exp_fit, exp_cloud)
    ratio = re / rg if rg > 0 else (0.0 if re == 0 else np.inf)

    c = model_to_covariance(expansion.phi_hat, pairwise_distances(expansion.expanded_coords))
    min_eig = float(np.linalg.eigvalsh(c).min())
    return StationarityReport(
        geo, exp_cloud, geo_fit, exp_fit, rg, re, float(ratio), min_eig,
        min_eig >= -1e-10, expansion.converged,
    )


def interpolate_latent(samples: SampleSet, expansion: Expansion, grid, params=None) -> np.ndarray:
    """Interpolate each latent column onto ``grid`` (original coordinates).

    A near noise-free constant-mean GP over the standardised coordinates is
    used per column. Default kernel: signal variance = column variance,
    length-scale = twice the median nearest-neighbour distance.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 2 or grid.shape[1] != expansion.coords_std.shape[1]:
        raise ValidationError("grid must have the same columns as the sample coordinates")
    g = expansion.scaling.apply(grid)
    x = expansion.coords_std
    d = pairwise_distances(x)
    np.fill_diagonal(d, np.inf)
    nn = float(np.median(d.min(axis=1)))
    ell = 2.0 * nn if np.isfinite(nn) and nn > 0 else 1.0
    out = np.empty((g.shape[0], expansion.z_prime.shape[1]))
    for k in range(expansion.z_prime.shape[1]):
        col = expansion.z_prime[:, k]
        kp = params
        if kp is None:
            var = float(np.var(col))
            kp = KernelParams(var if var > 0 else 1.0, ell, 0.0)
        out[:, k] = gp_predict(x, col, g, kp, mean_fn="constant").mean
    return out


def point_biserial(values, labels) -> float:
    """Pearson correlation between a continuous variable and a 0/1 label."""
    values = np.asarray(values, dtype=float).reshape(-1)
    labels = np.asarray(labels, dtype=float).reshape(-1)
    return float(np.corrcoef(values, labels)[0, 1])
