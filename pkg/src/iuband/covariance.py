"""Nested Monte Carlo covariance estimation by subsampled bootstrap."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import ConfigurationError, check_positive_int, check_random_state
from .empirical import Grid
from .limiting import CovarianceEstimate
from .models import InputDataset, simulate_batch

__all__ = [
    "SubsampleConfig",
    "nested_cov",
    "bootstrap_matrix",
    "cov_from_bootstrap_matrix",
    "estimate_covariance",
    "optimal_config",
    "check_budget_rates",
    "SubsampleCovariance",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SubsampleConfig:
    """Subsample ratio ``theta``, outer resamples ``B`` and inner runs ``R_s``."""

    theta: float
    B: int
    R_s: int

    def __post_init__(self):
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        check_positive_int(self.B, "B", minimum=2)
        check_positive_int(self.R_s, "R_s", minimum=2)

    @property
    def budget(self):
        return self.B * self.R_s

    def subsample_sizes(self, data):
        """``s_i = floor(theta * n_i)``; zero sizes are a configuration error."""
        sizes = tuple(math.floor(self.theta * n_i) for n_i in data.sizes)
        for i, s in enumerate(sizes, start=1):
            if s < 1:
                raise ConfigurationError(
                    f"theta={self.theta} gives an empty subsample for input source {i} "
                    f"(n_{i}={data.sizes[i - 1]})"
                )
        return sizes


def nested_cov(outer_sampler, inner_sampler, B, R, rng=None):
    """Covariance of two conditional expectations by two-layer sampling.

    ``outer_sampler(rng)`` returns a conditioning element ``Z_b``;
    ``inner_sampler(z, R, rng)`` returns ``R`` conditional draws ``(X, Y)`` as
    two arrays. The result is the sample covariance of the inner means, which
    is biased upward by ``E[Cov(X, Y | Z)] / R``.
    """
    B = check_positive_int(B, "B", minimum=2)
    R = check_positive_int(R, "R", minimum=2)
    rng = check_random_state(rng)
    xbar = np.empty(B)
    ybar = np.empty(B)
    for b in range(B):
        z = outer_sampler(rng)
        x, y = inner_sampler(z, R, rng)
        xbar[b] = np.mean(x)
        ybar[b] = np.mean(y)
    return float(np.sum((xbar - xbar.mean()) * (ybar - ybar.mean())) / (B - 1))


def bootstrap_matrix(model, data, config, grid, rng=None):
    """``B x k`` matrix of subsample output ECDFs evaluated on the grid.

    Runs the model exactly ``B * R_s`` times.
    """
    rng = check_random_state(rng)
    sizes = config.subsample_sizes(data)
    points = grid.points
    qmat = np.empty((config.B, points.size))
    for b in range(config.B):
        subsample = [src.draw(s, rng) for src, s in zip(data, sizes)]
        outputs = simulate_batch(model, InputDataset(subsample), config.R_s, rng)
        outputs.sort()
        qmat[b] = np.searchsorted(outputs, points, side="right") / config.R_s
    return qmat


def cov_from_bootstrap_matrix(qmat, theta, n, grid=None):
    """``theta * n`` times the sample covariance of the rows of ``qmat``."""
    qmat = np.asarray(qmat, dtype=float)
    if qmat.ndim != 2 or qmat.shape[0] < 2:
        raise ValueError("the bootstrap matrix needs at least two rows")
    centered = qmat - qmat.mean(axis=0)
    mat = theta * n * (centered.T @ centered) / (qmat.shape[0] - 1)
    mat = 0.5 * (mat + mat.T)
    if grid is None:
        grid = Grid(np.arange(qmat.shape[1], dtype=float))
    return CovarianceEstimate(grid, mat)


def estimate_covariance(model, data, config, grid, rng=None):
    """Subsampled-bootstrap estimate of the input-noise covariance on ``grid``."""
    if data.m != model.m:
        raise ValueError(f"model {model.name!r} has {model.m} sources, data has {data.m}")
    qmat = bootstrap_matrix(model, data, config, grid, rng)
    return cov_from_bootstrap_matrix(qmat, config.theta, data.n, grid)


def optimal_config(N, data):
    """Budget split minimizing the order of the estimation error.

    All rate constants are taken as 1: ``s* = N^(1/4)``,
    ``R_s* = N^(1/3) s*^(2/3)`` (evaluated at the unrounded ``s*``, i.e.
    ``sqrt(N)``), ``B* = floor(N / R_s*)`` and ``theta* = s* / n``.
    """
    N = check_positive_int(N, "N", minimum=16)
    s_cont = N**0.25
    s_star = max(2, round(s_cont))
    R_s = max(2, round(N ** (1 / 3) * s_cont ** (2 / 3)))
    B = max(2, N // R_s)
    theta = min(1.0, s_star / data.n)
    return SubsampleConfig(theta=theta, B=B, R_s=R_s)


def check_budget_rates(config, data):
    """Finite-sample proxies of the consistency conditions.

    Returns a list of warning messages (empty when the configuration looks
    fine). Never raises.
    """
    messages = []
    theta_n = config.theta * data.n
    s = sum(math.floor(config.theta * n_i) for n_i in data.sizes) / data.m
    if theta_n < 10:
        messages.append(f"theta*n = {theta_n:g} < 10: subsample too small to be consistent")
    if config.B < 10:
        messages.append(f"B = {config.B} < 10: too few outer resamples")
    if config.R_s < 2 * s:
        messages.append(
            f"R_s = {config.R_s} < 2s = {2 * s:g}: inner noise dominates the estimate"
        )
    for msg in messages:
        logger.warning(msg)
    return messages


class SubsampleCovariance(BaseEstimator):
    """Estimator wrapper around :func:`estimate_covariance`.

    ``fit`` takes the input dataset (an :class:`InputDataset` or one array per
    source) and stores ``covariance_``, ``bootstrap_matrix_`` and
    ``diagnostics_``.
    """

    def __init__(self, model, grid, theta=0.03, B=33, R_s=30, random_state=None):
        self.model = model
        self.grid = grid
        self.theta = theta
        self.B = B
        self.R_s = R_s
        self.random_state = random_state

    def fit(self, X, y=None):
        data = X if isinstance(X, InputDataset) else InputDataset(X)
        grid = self.grid if isinstance(self.grid, Grid) else Grid(self.grid)
        config = SubsampleConfig(self.theta, self.B, self.R_s)
        rng = check_random_state(self.random_state)
        self.diagnostics_ = check_budget_rates(config, data)
        self.bootstrap_matrix_ = bootstrap_matrix(self.model, data, config, grid, rng)
        self.covariance_ = cov_from_bootstrap_matrix(
            self.bootstrap_matrix_, config.theta, data.n, grid
        )
        self.n_ = data.n
        return self

    def transform(self, X=None):
        check_is_fitted(self, "covariance_")
        return np.array(self.covariance_.matrix)
