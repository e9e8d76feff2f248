"""Gaussian-process surrogate: Gram assembly, factorization, prediction.

All heavy lifting is Cholesky-based. The functional API (:func:`posterior`,
:func:`log_marginal_likelihood`) implements the textbook zero-mean formulas
exactly as stated; the :class:`GraphGP` estimator wraps them with the
observation-centering policy used inside the optimization loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from sklearn.base import BaseEstimator

from .exceptions import IllConditionedError

__all__ = [
    "SIGMA_MIN",
    "Posterior",
    "add_noise",
    "cholesky_with_jitter",
    "posterior",
    "log_marginal_likelihood",
    "GraphGP",
]

SIGMA_MIN = 1e-6

_JITTER_START = 1e-10
_JITTER_MAX = 1e-4


@dataclass(frozen=True)
class Posterior:
    """Predictive mean and variance (variance, not standard deviation)."""

    mu: np.ndarray
    var: np.ndarray


def add_noise(K: np.ndarray, sigma: float) -> np.ndarray:
    """K + sigma^2 I."""
    K = np.asarray(K, dtype=float)
    return K + (sigma**2) * np.eye(K.shape[0])


def cholesky_with_jitter(K_sigma: np.ndarray, jitter: bool = True) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter on failure.

    Jitter starts at 1e-10 times the mean diagonal and grows by factors of
    10 up to 1e-4 times the mean diagonal; past that the matrix is declared
    ill-conditioned.
    """
    K_sigma = np.asarray(K_sigma, dtype=float)
    try:
        return np.linalg.cholesky(K_sigma)
    except np.linalg.LinAlgError:
        if not jitter:
            raise IllConditionedError("Gram matrix is not positive definite")
    scale = float(np.mean(np.diag(K_sigma)))
    if scale <= 0:
        scale = 1.0
    factor = _JITTER_START
    eye = np.eye(K_sigma.shape[0])
    while factor <= _JITTER_MAX * (1 + 1e-12):
        try:
            return np.linalg.cholesky(K_sigma + factor * scale * eye)
        except np.linalg.LinAlgError:
            factor *= 10.0
    raise IllConditionedError(
        f"Gram matrix not factorizable within jitter cap {_JITTER_MAX:g}"
    )


def posterior(
    K_obs: np.ndarray,
    K_star: np.ndarray,
    k_star_diag,
    y: np.ndarray,
    sigma: float,
    jitter: bool = True,
) -> Posterior:
    """Exact GP posterior at query points.

    ``K_obs`` is the kernel over observed points, ``K_star`` the
    (queries x observed) cross kernel, ``k_star_diag`` the self kernel of
    each query. Variances are floored at zero.
    """
    y = np.asarray(y, dtype=float)
    K_star = np.atleast_2d(np.asarray(K_star, dtype=float))
    L = cholesky_with_jitter(add_noise(K_obs, sigma), jitter=jitter)
    alpha = cho_solve((L, True), y)
    mu = K_star @ alpha
    v = solve_triangular(L, K_star.T, lower=True)
    var = np.asarray(k_star_diag, dtype=float) - np.einsum("ij,ij->j", v, v)
    return Posterior(mu=mu, var=np.maximum(var, 0.0))


def log_marginal_likelihood(
    K_obs: np.ndarray, y: np.ndarray, sigma: float, jitter: bool = True
) -> float:
    """Log evidence of the observations under the zero-mean GP."""
    y = np.asarray(y, dtype=float)
    L = cholesky_with_jitter(add_noise(K_obs, sigma), jitter=jitter)
    alpha = cho_solve((L, True), y)
    return float(
        -0.5 * y @ alpha
        - np.log(np.diag(L)).sum()
        - 0.5 * y.size * math.log(2.0 * math.pi)
    )


class GraphGP(BaseEstimator):
    """GP surrogate over candidate indices of a kernel workspace.

    Observations are centered by subtracting their mean before fitting and
    the mean is restored on prediction (``center=False`` disables this and
    recovers the raw zero-mean formulas). The fitted factorization is
    immutable, so predictions for many candidates may run concurrently.

    Parameters
    ----------
    workspace : KernelWorkspace
        Precomputed kernel state for the candidate set.
    params : KernelParams
        Hyperparameters of the combined kernel.
    center : bool
        Whether to center observations around their mean.
    """

    def __init__(self, workspace, params, center=True):
        self.workspace = workspace
        self.params = params
        self.center = center

    def fit(self, X, y):
        idx = np.asarray(X, dtype=int)
        y = np.asarray(y, dtype=float)
        if idx.size == 0:
            raise ValueError("at least one observation is required")
        if idx.size != y.size:
            raise ValueError("indices and observations must align")
        if len(set(idx.tolist())) != idx.size:
            raise ValueError("observation indices must be distinct")
        sigma = max(self.params.sigma, SIGMA_MIN)
        self.idx_ = idx
        self.y_mean_ = float(y.mean()) if self.center else 0.0
        self.y_centered_ = y - self.y_mean_
        K = self.workspace.gram(idx, self.params)
        self.L_ = cholesky_with_jitter(add_noise(K, sigma))
        self.alpha_ = cho_solve((self.L_, True), self.y_centered_)
        return self

    def predict(self, X) -> Posterior:
        idx = np.asarray(X, dtype=int)
        K_star = self.workspace.cross(idx, self.idx_, self.params)
        mu = K_star @ self.alpha_ + self.y_mean_
        v = solve_triangular(self.L_, K_star.T, lower=True)
        var = self.workspace.diag_value(self.params) - np.einsum("ij,ij->j", v, v)
        return Posterior(mu=mu, var=np.maximum(var, 0.0))

    def log_marginal_likelihood(self) -> float:
        return float(
            -0.5 * self.y_centered_ @ self.alpha_
            - np.log(np.diag(self.L_)).sum()
            - 0.5 * self.y_centered_.size * math.log(2.0 * math.pi)
        )
