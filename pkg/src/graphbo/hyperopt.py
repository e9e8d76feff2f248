"""Hyperparameter estimation for the combined kernel.

The discrete (window, dim) grid is enumerated exhaustively; for each grid
point the continuous block {length scales, noise, kernel weights} is
optimized in log space (which enforces positivity) by multi-restart
Nelder-Mead on the log marginal likelihood, and the best assignment over
all grid points wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .exceptions import FittingError, IllConditionedError
from .gp import SIGMA_MIN, log_marginal_likelihood
from .kernels import KernelParams

__all__ = [
    "NelderMeadOptions",
    "nelder_mead",
    "DEFAULT_GRID",
    "fit_params",
]

DEFAULT_GRID_VALUES = (2, 5, 10, 25, 50)
DEFAULT_GRID = tuple((w, d) for w in DEFAULT_GRID_VALUES for d in DEFAULT_GRID_VALUES)

# Log-uniform start ranges for normalized features in [0, 1].
_L_RANGE = (0.05, 5.0)
_SIGMA_RANGE = (1e-4, 0.5)
_WEIGHT_RANGE = (0.01, 10.0)

_LOG_CLAMP = 20.0
_FAIL = -1e300


@dataclass(frozen=True)
class NelderMeadOptions:
    """Iteration budget and simplex tolerances."""

    max_iter: int | None = None
    xatol: float = 1e-5
    fatol: float = 1e-8


def nelder_mead(objective, start, options: NelderMeadOptions | None = None):
    """Maximize a continuous function by simplex descent on its negation.

    Returns the best point and its objective value. Deterministic for a
    fixed start.
    """
    if options is None:
        options = NelderMeadOptions()
    start = np.atleast_1d(np.asarray(start, dtype=float))
    opts = {"xatol": options.xatol, "fatol": options.fatol}
    if options.max_iter is not None:
        opts["maxiter"] = options.max_iter
    res = minimize(
        lambda x: -objective(x), start, method="Nelder-Mead", options=opts
    )
    return res.x, float(-res.fun)


class _ParamVector:
    """Maps the active continuous parameters to and from a flat log vector."""

    def __init__(self, dims, pins):
        pins = pins or {}
        self.dims = tuple(dims)
        self.alpha_pin = pins.get("alpha")
        self.beta_pin = pins.get("betas")
        # Length scales are dropped for groups whose weight is pinned to 0.
        self.keep_l = self.beta_pin is None or self.beta_pin > 0

    def sample_start(self, rng) -> np.ndarray:
        parts = []
        if self.keep_l:
            for dim in self.dims:
                parts.append(rng.uniform(np.log(_L_RANGE[0]), np.log(_L_RANGE[1]), dim))
        parts.append(rng.uniform(np.log(_SIGMA_RANGE[0]), np.log(_SIGMA_RANGE[1]), 1))
        if self.alpha_pin is None:
            parts.append(
                rng.uniform(np.log(_WEIGHT_RANGE[0]), np.log(_WEIGHT_RANGE[1]), 1)
            )
        if self.beta_pin is None:
            parts.append(
                rng.uniform(
                    np.log(_WEIGHT_RANGE[0]), np.log(_WEIGHT_RANGE[1]), len(self.dims)
                )
            )
        return np.concatenate(parts)

    def unpack(self, vec, w: int, d: int) -> KernelParams:
        vec = np.clip(np.asarray(vec, dtype=float), -_LOG_CLAMP, _LOG_CLAMP)
        pos = 0
        lengths = []
        for dim in self.dims:
            if self.keep_l:
                lengths.append(np.exp(vec[pos : pos + dim]))
                pos += dim
            else:
                lengths.append(np.ones(dim))
        sigma = max(float(np.exp(vec[pos])), SIGMA_MIN)
        pos += 1
        if self.alpha_pin is None:
            alpha = float(np.exp(vec[pos]))
            pos += 1
        else:
            alpha = float(self.alpha_pin)
        if self.beta_pin is None:
            betas = np.exp(vec[pos : pos + len(self.dims)])
        else:
            betas = np.full(len(self.dims), float(self.beta_pin))
        return KernelParams(
            w=w, d=d, length_scales=tuple(lengths), sigma=sigma, alpha=alpha, betas=betas
        )


def fit_params(
    indices,
    y,
    workspace,
    grid=DEFAULT_GRID,
    restarts: int = 5,
    seed: int = 0,
    pins: dict | None = None,
    nm_options: NelderMeadOptions | None = None,
    center: bool = True,
):
    """Estimate kernel hyperparameters by maximum marginal likelihood.

    Returns ``(params, lml)`` for the best (grid point, restart) outcome.
    ``pins`` fixes named weights (e.g. ``{"alpha": 0.0}``) outside the
    optimization; a zero pin also removes the now-inert block from the
    search vector.
    """
    indices = np.asarray(indices, dtype=int)
    y = np.asarray(y, dtype=float)
    if indices.size < 2:
        raise ValueError("at least two observations are required to fit")
    grid = list(grid)
    if not grid:
        raise ValueError("grid must be non-empty")
    if center:
        y = y - y.mean()

    vector = _ParamVector(workspace.feature_groups.dims, pins)
    # With the graph kernel pinned off, the grid point cannot matter.
    if pins and pins.get("alpha") == 0.0:
        grid = grid[:1]

    bound = workspace.bind(indices)
    rng = np.random.default_rng(seed)
    best = None
    for w, d in grid:
        def objective(vec, w=w, d=d):
            params = vector.unpack(vec, w, d)
            try:
                K = bound.gram(params)
                return log_marginal_likelihood(K, y, params.sigma)
            except (IllConditionedError, FloatingPointError):
                return _FAIL

        for _ in range(restarts):
            start = vector.sample_start(rng)
            x_best, f_best = nelder_mead(objective, start, nm_options)
            if np.isfinite(f_best) and f_best > _FAIL / 2:
                if best is None or f_best > best[0]:
                    best = (f_best, x_best, w, d)
    if best is None:
        raise FittingError("marginal likelihood failed on every grid point")
    f_best, x_best, w, d = best
    return vector.unpack(x_best, w, d), f_best
