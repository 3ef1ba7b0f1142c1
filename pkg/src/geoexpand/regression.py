"""Weight-space and function-space Gaussian regression.

The weight-space view places a prior ``w ~ N(0, Sigma_p)`` on the weights of
an explicit basis expansion ``f(x) = phi(x)^T w``. The function-space view
puts a Gaussian process prior directly on ``f`` through a covariance
function. With ``k(x, x') = phi(x)^T Sigma_p phi(x')`` both give the same
predictive distribution; :func:`equivalence_check` measures how closely
they agree in floating point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .exceptions import ConditioningError, ValidationError
from .linalg import cho_solve, jitchol, logdet_from_chol, refined_solve, tri_solve
from .sample_model import cross_distances

log = logging.getLogger(__name__)

__all__ = [
    "BasisSpec",
    "WeightPrior",
    "KernelParams",
    "BasisKernel",
    "PredictiveDistribution",
    "EquivalenceReport",
    "HyperFit",
    "MixedPrediction",
    "apply_basis",
    "weight_space_predict",
    "rbf_kernel",
    "gp_predict",
    "equivalence_check",
    "random_equivalence_instance",
    "equivalence_sweep",
    "log_marginal_likelihood",
    "optimize_hyperparams",
    "mixed_fit_predict",
]

# clip predictive variances that are negative by less than this
VAR_TOL = 1e-10
# relative diagonal jitter for noise-free Gram matrices
NOISE_FREE_JITTER = 1e-10


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValidationError("points must be a vector or an (n, d) matrix")
    return x


# ---- basis functions


@dataclass(frozen=True)
class BasisSpec:
    """Basis expansion.

    ``kind="polynomial"`` maps each input column to its powers ``1..degree``
    and prepends one intercept column; no cross terms are formed, so
    ``m = 1 + d * degree``. ``kind="identity"`` is the degree-1 polynomial.
    """

    kind: str = "polynomial"
    degree: int = 1

    def __post_init__(self):
        if self.kind not in ("polynomial", "identity"):
            raise ValidationError(f"unknown basis kind {self.kind!r}")
        if self.degree < 0:
            raise ValidationError("polynomial degree must be >= 0")

    @property
    def power(self) -> int:
        return 1 if self.kind == "identity" else self.degree

    def output_dim(self, d: int) -> int:
        return 1 + d * self.power


def apply_basis(x, spec: BasisSpec) -> np.ndarray:
    """Feature matrix with row ``i`` equal to ``phi(x_i)``; column 0 is all ones."""
    x = _points(x)
    cols = [np.ones((x.shape[0], 1))]
    for k in range(1, spec.power + 1):
        cols.append(x**k)
    # regroup so powers of one input column are adjacent: 1, x1, x1^2, .., x2, ..
    feats = np.hstack(cols)
    d = x.shape[1]
    if d > 1 and spec.power > 1:
        order = [0] + [1 + (k - 1) * d + c for c in range(d) for k in range(1, spec.power + 1)]
        feats = feats[:, order]
    return feats


# ---- parameter containers


@dataclass(frozen=True)
class WeightPrior:
    """Gaussian weight prior covariance and observation noise variance."""

    cov: np.ndarray
    noise: float

    def __post_init__(self):
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape[0] != cov.shape[1]:
            raise ValidationError("prior covariance must be square")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ValidationError("prior covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise ValidationError("prior covariance must be positive definite")
        if not self.noise > 0:
            raise ValidationError("noise variance must be positive")
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class KernelParams:
    """RBF hyper-parameters: signal variance, length-scale, noise variance."""

    signal_var: float
    length_scale: float
    noise: float = 0.0

    def __post_init__(self):
        if not self.signal_var > 0:
            raise ValidationError("signal variance must be positive")
        if not self.length_scale > 0:
            raise ValidationError("length-scale must be positive")
        if not self.noise >= 0:
            raise ValidationError("noise variance must be non-negative")

    def gram(self, a, b=None):
        """Noise-free RBF covariance between the rows of ``a`` and ``b``."""
        a = _points(a)
        b = a if b is None else _points(b)
        d = cross_distances(a, b)
        return self.signal_var * np.exp(-0.5 * (d / self.length_scale) ** 2)


@dataclass(frozen=True)
class BasisKernel:
    """Covariance induced by a basis and weight prior, ``phi(x)^T Sigma_p phi(x')``."""

    spec: BasisSpec
    prior: WeightPrior

    @property
    def noise(self):
        return self.prior.noise

    def gram(self, a, b=None):
        fa = apply_basis(a, self.spec)
        fb = fa if b is None else apply_basis(b, self.spec)
        return fa @ self.prior.cov @ fb.T


@dataclass(frozen=True)
class PredictiveDistribution:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        cov = 0.5 * (cov + cov.T)
        diag = np.diag(cov).copy()
        if np.any(diag < -VAR_TOL * max(1.0, np.abs(diag).max(initial=0.0))):
            raise ConditioningError("predictive covariance has a negative variance")
        np.fill_diagonal(cov, np.maximum(diag, 0.0))
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))

    @property
    def var(self):
        return np.diag(self.cov)

    @property
    def sd(self):
        return np.sqrt(self.var)


# ---- weight space


def weight_space_predict(train_x, train_z, test_x, spec: BasisSpec, priors: WeightPrior):
    """Bayesian linear regression predictive distribution over ``f(test_x)``.

    Evaluates, with feature matrices ``P = phi(X)`` and ``Ps = phi(X*)``::

        mean = Ps Sp P^T (P Sp P^T + s2 I)^-1 z
        cov  = Ps Sp Ps^T - Ps Sp P^T (P Sp P^T + s2 I)^-1 P Sp Ps^T

    through a Cholesky factorisation of the n x n system.
    """
    x = _points(train_x)
    z = np.asarray(train_z, dtype=float).reshape(-1)
    if x.shape[0] < 1:
        raise ValidationError("weight-space prediction needs at least one training point")
    if z.shape[0] != x.shape[0]:
        raise ValidationError("train_x and train_z differ in length")
    phi = apply_basis(x, spec)
    phis = apply_basis(test_x, spec)
    sp = priors.cov
    if sp.shape[0] != phi.shape[1]:
        raise ValidationError(
            f"prior covariance is {sp.shape[0]}x{sp.shape[0]} but the basis has {phi.shape[1]} terms"
        )
    a = phi @ sp @ phi.T + priors.noise * np.eye(x.shape[0])
    L, _ = jitchol(a)
    cross = phis @ sp @ phi.T
    mean = cross @ cho_solve(L, z)
    v = tri_solve(L, cross.T)
    cov = phis @ sp @ phis.T - v.T @ v
    return PredictiveDistribution(mean, cov)


# ---- function space


def rbf_kernel(a, b, params: KernelParams, same_index: bool = False) -> float:
    """``signal_var * exp(-d^2 / (2 l^2)) + noise * delta``.

    ``delta`` is 1 only when ``a`` and ``b`` are the same observation, not
    merely coincident locations.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise ValidationError("points differ in dimension")
    d2 = float(np.sum((a - b) ** 2))
    k = params.signal_var * np.exp(-0.5 * d2 / params.length_scale**2)
    return k + (params.noise if same_index else 0.0)


def _mean_offset(z, mean_fn):
    if mean_fn == "zero":
        return 0.0
    if mean_fn == "constant":
        return float(np.mean(z)) if z.size else 0.0
    raise ValidationError(f"unknown mean function {mean_fn!r}")


def _factor_train(kernel, x, return_gram=False):
    k = kernel.gram(x) + kernel.noise * np.eye(x.shape[0])
    base = NOISE_FREE_JITTER if kernel.noise == 0 else 0.0
    L, jitter = jitchol(k, base_jitter=base)
    if return_gram:
        return L, k, jitter
    return L


def gp_predict(train_x, train_z, test_x, kernel, mean_fn: str = "zero"):
    """Gaussian-process posterior over ``f(test_x)``.

    Parameters
    ----------
    train_x : array_like, shape (n, d)
        Training inputs; may have zero rows, in which case the prior is returned.
    train_z : array_like, shape (n,)
    test_x : array_like, shape (n*, d)
    kernel : KernelParams or BasisKernel
        Anything with ``gram(a, b)`` and a ``noise`` variance. Noise is added
        to the training Gram diagonal only.
    mean_fn : {"zero", "constant"}
        ``"constant"`` uses the training mean, subtracted before
        conditioning and added back afterwards.
    """
    xs = _points(test_x)
    z = np.asarray(train_z, dtype=float).reshape(-1)
    x = np.asarray(train_x, dtype=float)
    if x.size == 0:
        x = np.zeros((0, xs.shape[1]))
    x = _points(x)
    if z.shape[0] != x.shape[0]:
        raise ValidationError("train_x and train_z differ in length")
    m = _mean_offset(z, mean_fn)
    kss = kernel.gram(xs)
    if x.shape[0] == 0:
        return PredictiveDistribution(np.full(xs.shape[0], m), kss)
    L, k, jitter = _factor_train(kernel, x, return_gram=True)
    ks = kernel.gram(x, xs)
    # refine against the un-jittered Gram so noise-free fits still interpolate
    alpha = refined_solve(L, k, z - m) if jitter > 0 else cho_solve(L, z - m)
    mean = ks.T @ alpha + m
    v = tri_solve(L, ks)
    return PredictiveDistribution(mean, kss - v.T @ v)


# ---- equivalence of the two views


@dataclass(frozen=True)
class EquivalenceReport:
    mean_diff: float
    cov_diff: float
    weight_space: PredictiveDistribution
    function_space: PredictiveDistribution

    @property
    def max_diff(self) -> float:
        return max(self.mean_diff, self.cov_diff)


def equivalence_check(train_x, train_z, test_x, spec: BasisSpec, priors: WeightPrior):
    """Predict with both views and report the largest absolute disagreement."""
    ws = weight_space_predict(train_x, train_z, test_x, spec, priors)
    fs = gp_predict(train_x, train_z, test_x, BasisKernel(spec, priors), "zero")
    return EquivalenceReport(
        mean_diff=float(np.max(np.abs(ws.mean - fs.mean))),
        cov_diff=float(np.max(np.abs(ws.cov - fs.cov))),
        weight_space=ws,
        function_space=fs,
    )


def random_equivalence_instance(rng, n_max=20, m_max=5, n_test=5):
    """A well-conditioned random 1-D instance for :func:`equivalence_check`.

    Returns ``(train_x, train_z, test_x, spec, priors)``.
    """
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    x = rng.uniform(-1.0, 1.0, size=(n, 1))
    xs = rng.uniform(-1.0, 1.0, size=(n_test, 1))
    z = rng.normal(size=n)
    q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    cov = (q * rng.uniform(0.5, 2.0, size=m)) @ q.T
    cov = 0.5 * (cov + cov.T)
    noise = float(rng.uniform(0.1, 1.0))
    return x, z, xs, BasisSpec("polynomial", m - 1), WeightPrior(cov, noise)


def equivalence_sweep(trials=100, n_max=20, m_max=5, seed=42):
    """Run :func:`equivalence_check` over seeded random instances.

    Returns a list of :class:`EquivalenceReport`, one per trial.
    """
    rng = np.random.default_rng(seed)
    return [
        equivalence_check(*random_equivalence_instance(rng, n_max, m_max))
        for _ in range(trials)
    ]


# ---- hyper-parameters


def log_marginal_likelihood(train_x, train_z, params: KernelParams, mean_fn="zero",
                            return_grad=False):
    """Gaussian log evidence of ``train_z`` under an RBF GP.

    ``-0.5 y^T (K + s2 I)^-1 y - 0.5 log|K + s2 I| - n/2 log(2 pi)`` with
    ``y`` the observations minus the mean function.

    With ``return_grad`` the gradient with respect to
    ``(log signal_var, log length_scale, log noise)`` is returned as well.
    """
    x = _points(train_x)
    z = np.asarray(train_z, dtype=float).reshape(-1)
    n = x.shape[0]
    y = z - _mean_offset(z, mean_fn)
    kf = params.gram(x)
    L = _factor_train(params, x)
    alpha = cho_solve(L, y)
    lml = -0.5 * y @ alpha - 0.5 * logdet_from_chol(L) - 0.5 * n * np.log(2 * np.pi)
    if not return_grad:
        return float(lml)
    kinv = cho_solve(L, np.eye(n))
    inner = np.outer(alpha, alpha) - kinv
    d2 = cross_distances(x, x) ** 2
    dk = (
        kf,
        kf * d2 / params.length_scale**2,
        params.noise * np.eye(n),
    )
    grad = np.array([0.5 * np.sum(inner * g) for g in dk])
    return float(lml), grad


@dataclass(frozen=True)
class HyperFit:
    params: KernelParams
    log_marginal: float
    converged: bool
    warning: str | None = None


def optimize_hyperparams(train_x, train_z, init: KernelParams, mean_fn="constant",
                         max_iter=500) -> HyperFit:
    """Maximise the log marginal likelihood over log hyper-parameters.

    L-BFGS-B with analytic gradients. Variances are bounded to
    ``[1e-8, 1e4] * var(z)`` (``var(z)`` replaced by 1 for constant data),
    the length-scale to ``[1e-3 * min, 1e3 * max]`` pairwise distance.
    The result is never worse than ``init``.
    """
    x = _points(train_x)
    z = np.asarray(train_z, dtype=float).reshape(-1)
    y = z - _mean_offset(z, mean_fn)
    scale = float(np.var(y))
    if scale <= 1e-24 * max(1.0, float(np.max(np.abs(z), initial=0.0)) ** 2):
        scale = 1.0
    d = cross_distances(x, x)[np.triu_indices(x.shape[0], 1)]
    d = d[d > 0]
    dmin, dmax = (float(d.min()), float(d.max())) if d.size else (1.0, 1.0)
    bounds = [
        (np.log(1e-8 * scale), np.log(1e4 * scale)),
        (np.log(1e-3 * dmin), np.log(1e3 * dmax)),
        (np.log(1e-8 * scale), np.log(1e4 * scale)),
    ]

    def unpack(theta):
        return KernelParams(*np.exp(theta))

    def neg(theta):
        try:
            lml, g = log_marginal_likelihood(x, y, unpack(theta), "zero", return_grad=True)
        except ConditioningError:
            return np.inf, np.zeros(3)
        return -lml, -g

    theta0 = np.log([init.signal_var, init.length_scale, max(init.noise, np.exp(bounds[2][0]))])
    theta0 = np.clip(theta0, [b[0] for b in bounds], [b[1] for b in bounds])
    res = minimize(neg, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"maxiter": max_iter, "ftol": 1e-13, "gtol": 1e-9})
    best = unpack(res.x)
    best_lml = -float(res.fun)
    try:
        init_lml = log_marginal_likelihood(x, y, init, "zero")
    except ConditioningError:
        init_lml = -np.inf
    if init_lml > best_lml:
        best, best_lml = init, init_lml
    warning = None if res.success else "not_converged"
    if warning:
        log.warning("hyper-parameter search stopped early: %s", res.message)
    return HyperFit(best, best_lml, bool(res.success), warning)


# ---- mixed linear + GP model


@dataclass(frozen=True)
class MixedPrediction:
    weights: np.ndarray
    linear: np.ndarray
    residual: PredictiveDistribution
    params: KernelParams

    @property
    def mean(self):
        return self.linear + self.residual.mean

    @property
    def cov(self):
        return self.residual.cov

    @property
    def prediction(self):
        return PredictiveDistribution(self.mean, self.cov)


def mixed_fit_predict(x1, x2, z, test_x1, test_x2, spec: BasisSpec, params: KernelParams,
                      optimize: bool = False) -> MixedPrediction:
    """Linear trend on covariates ``x1`` plus a GP over coordinates ``x2``.

    Two-stage estimate: ordinary least squares of ``z`` on ``phi(x1)``, then a
    zero-mean GP over ``x2`` conditioned on the OLS residuals. With
    ``optimize`` the GP hyper-parameters are re-estimated on the residuals
    starting from ``params``.
    """
    x1, x2 = _points(x1), _points(x2)
    z = np.asarray(z, dtype=float).reshape(-1)
    if not (x1.shape[0] == x2.shape[0] == z.shape[0]):
        raise ValidationError("x1, x2 and z must have the same number of rows")
    phi = apply_basis(x1, spec)
    if np.linalg.matrix_rank(phi) < phi.shape[1]:
        raise ConditioningError("basis matrix is rank deficient")
    w, *_ = np.linalg.lstsq(phi, z, rcond=None)
    resid = z - phi @ w
    if optimize:
        params = optimize_hyperparams(x2, resid, params, mean_fn="zero").params
    gp = gp_predict(x2, resid, test_x2, params, "zero")
    return MixedPrediction(w, apply_basis(test_x1, spec) @ w, gp, params)
