"""Symmetric positive-definite solves with a fixed jitter policy."""

from __future__ import annotations

import logging

import numpy as np
from scipy import linalg

from .exceptions import ConditioningError

log = logging.getLogger(__name__)

# relative to the mean of the diagonal; tried in order after a jitter-free attempt
JITTER_LADDER = (1e-10, 1e-8, 1e-6)


def jitchol(a, base_jitter=0.0):
    """Lower Cholesky factor of ``a``, escalating diagonal jitter on failure.

    Parameters
    ----------
    a : ndarray, shape (n, n)
        Symmetric matrix.
    base_jitter : float
        Relative jitter always added (e.g. for noise-free Gram matrices).

    Returns
    -------
    L : ndarray
        Lower-triangular factor with ``L @ L.T == a + jitter * I``.
    jitter : float
        Absolute jitter that was added.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    scale = float(np.mean(np.diag(a)))
    if not np.isfinite(scale) or scale <= 0.0:
        raise ConditioningError("matrix has a non-positive mean diagonal")
    ladder = [base_jitter] + [j for j in JITTER_LADDER if j > base_jitter]
    for rel in ladder:
        jitter = rel * scale
        try:
            L = linalg.cholesky(a + jitter * np.eye(n), lower=True, check_finite=False)
        except linalg.LinAlgError:
            continue
        if rel > base_jitter:
            log.debug("cholesky needed relative jitter %.1e", rel)
        return L, jitter
    raise ConditioningError(
        f"matrix not positive definite even with relative jitter {JITTER_LADDER[-1]:g}"
    )


def cho_solve(L, b):
    return linalg.cho_solve((L, True), b, check_finite=False)


def refined_solve(L, a, b, steps=2):
    """Solve ``a x = b`` given a factor ``L`` of ``a + jitter * I``.

    A few rounds of iterative refinement against the un-jittered ``a`` remove
    most of the bias the jitter introduces; each round shrinks the error
    along an eigen-direction ``lam`` by ``jitter / (lam + jitter)``.
    """
    x = cho_solve(L, b)
    for _ in range(steps):
        x = x + cho_solve(L, b - a @ x)
    return x


def tri_solve(L, b):
    """Solve ``L x = b`` for lower-triangular ``L``."""
    return linalg.solve_triangular(L, b, lower=True, check_finite=False)


def logdet_from_chol(L):
    return 2.0 * float(np.sum(np.log(np.diag(L))))
