"""Constant-width confidence bands for an output distribution function."""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_open_probability, check_positive_int, check_random_state
from .covariance import SubsampleConfig, check_budget_rates, estimate_covariance
from .empirical import EmpiricalDistribution, Grid, left_inverse, step_sup_distance
from .limiting import CovarianceEstimate, kolmogorov_quantile, max_stat_quantile
from .models import InputDataset, simulate_batch

__all__ = [
    "ConfidenceBand",
    "QuantileRegion",
    "output_ecdf",
    "build_inflated_band",
    "build_classic_ks_band",
    "band_covers",
    "extract_quantile_region",
    "region_covers",
    "InflatedKSBand",
    "ClassicKSBand",
]

METHODS = ("inflated", "classic_ks", "bootstrap_full")


@dataclass(frozen=True)
class ConfidenceBand:
    """``F_hat(t) -/+ halfwidth`` around an output ECDF.

    ``lower`` and ``upper`` are unclamped; :meth:`to_csv` clamps to [0, 1].
    """

    center: EmpiricalDistribution
    halfwidth: float
    method: str = "inflated"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.halfwidth >= 0:
            raise ValueError(f"halfwidth must be nonnegative, got {self.halfwidth}")
        if self.method not in METHODS:
            raise ValueError(f"unknown band method {self.method!r}")

    def lower(self, t):
        return self.center.cdf(t) - self.halfwidth

    def upper(self, t):
        return self.center.cdf(t) + self.halfwidth

    def to_csv(self, path):
        jumps = np.unique(self.center.samples)
        lo = np.clip(self.lower(jumps), 0.0, 1.0)
        hi = np.clip(self.upper(jumps), 0.0, 1.0)
        with open(path, "w") as fh:
            fh.write(f"# method={self.method}\n")
            fh.write(f"# alpha={self.metadata.get('alpha', '')}\n")
            fh.write(f"# halfwidth={float(self.halfwidth)!r}\n")
            fh.write(f"# seed={self.metadata.get('seed', '')}\n")
            for key in ("n", "R", "grid"):
                if key in self.metadata:
                    fh.write(f"# {key}={self.metadata[key]}\n")
            fh.write("t,lower,upper\n")
            for t, a, b in zip(jumps, lo, hi):
                fh.write(f"{float(t)!r},{float(a)!r},{float(b)!r}\n")


@dataclass(frozen=True)
class QuantileRegion:
    """Simultaneous intervals ``[lower[i], upper[i]]`` for quantile levels.

    Unbounded sides are stored as ``-inf`` / ``inf``.
    """

    levels: tuple
    lower: tuple
    upper: tuple

    def to_csv(self, path):
        def fmt(x):
            return "inf" if x == math.inf else "-inf" if x == -math.inf else repr(x)

        with open(path, "w") as fh:
            fh.write("level,lower,upper\n")
            for s, a, b in zip(self.levels, self.lower, self.upper):
                fh.write(f"{s!r},{fmt(a)},{fmt(b)}\n")


def output_ecdf(model, data, R, rng=None):
    """ECDF of ``R`` model runs driven by the empirical input distributions."""
    R = check_positive_int(R, "R")
    return EmpiricalDistribution(simulate_batch(model, data, R, check_random_state(rng)))


def build_inflated_band(model, data, R, cov, grid, alpha=0.05, R_q=10_000, rng=None,
                        center=None, method="inflated"):
    """Inflate the KS band by the estimated input-noise covariance ``cov``.

    ``center`` may be given to reuse an output ECDF already formed from ``R``
    runs under ``data``; otherwise ``R`` runs are simulated first.
    """
    rng = check_random_state(rng)
    if cov.k != grid.k or not np.array_equal(cov.grid.points, grid.points):
        raise ValueError("covariance estimate and grid do not match")
    if center is None:
        center = output_ecdf(model, data, R, rng)
    halfwidth = max_stat_quantile(cov, center.cdf(grid.points), data.n, R, alpha, R_q, rng)
    meta = {
        "n": data.n,
        "R": R,
        "alpha": alpha,
        "R_q": R_q,
        "grid": f"{float(grid.points[0])!r}:{float(grid.points[-1])!r}:{grid.k}",
    }
    return ConfidenceBand(center, halfwidth, method, meta)


def build_classic_ks_band(ecdf, R, alpha=0.05):
    """Classic KS band: half-width ``kolmogorov_quantile(1 - alpha) / sqrt(R)``."""
    R = check_positive_int(R, "R")
    alpha = check_open_probability(alpha, "alpha")
    return ConfidenceBand(
        ecdf, kolmogorov_quantile(1.0 - alpha) / math.sqrt(R), "classic_ks",
        {"R": R, "alpha": alpha},
    )


def band_covers(band, reference):
    """Whether ``lower <= F_ref <= upper`` holds for every real ``t``."""
    return step_sup_distance(band.center, reference) <= band.halfwidth


def extract_quantile_region(band, levels):
    """Invert the band into simultaneous quantile intervals.

    ``upper_s = inf{t : lower(t) >= s}`` and ``lower_s = inf{t : upper(t) >= s}``.
    """
    levels = tuple(float(s) for s in np.atleast_1d(levels))
    for s in levels:
        check_open_probability(s, "quantile level")
    q = band.halfwidth
    lower = tuple(left_inverse(band.center, s - q) for s in levels)
    upper = tuple(left_inverse(band.center, s + q) for s in levels)
    return QuantileRegion(levels, lower, upper)


def region_covers(region, true_quantiles):
    truth = np.atleast_1d(np.asarray(true_quantiles, dtype=float))
    if truth.size != len(region.levels):
        raise ValueError(
            f"region has {len(region.levels)} levels but {truth.size} quantiles were given"
        )
    lo = np.asarray(region.lower)
    hi = np.asarray(region.upper)
    return bool(np.all((lo <= truth) & (truth <= hi)))


class InflatedKSBand(BaseEstimator):
    """Input-uncertainty-inflated KS band as an estimator.

    ``fit(X)`` takes the input data (one sample array per source), estimates
    the covariance by subsampled bootstrap and calibrates the half-width.
    ``predict(t)`` evaluates the center ECDF; ``transform(t)`` returns the
    ``(lower, upper)`` columns; ``score(reference)`` tests coverage of a
    reference ECDF.
    """

    def __init__(self, model, grid, theta=0.03, B=33, R_s=30, R=500, R_q=10_000,
                 alpha=0.05, random_state=None):
        self.model = model
        self.grid = grid
        self.theta = theta
        self.B = B
        self.R_s = R_s
        self.R = R
        self.R_q = R_q
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y=None):
        data = X if isinstance(X, InputDataset) else InputDataset(X)
        grid = self.grid if isinstance(self.grid, Grid) else Grid(self.grid)
        config = SubsampleConfig(self.theta, self.B, self.R_s)
        rng = check_random_state(self.random_state)
        self.diagnostics_ = check_budget_rates(config, data)
        self.covariance_ = estimate_covariance(self.model, data, config, grid, rng)
        method = "bootstrap_full" if self.theta == 1 else "inflated"
        self.band_ = build_inflated_band(
            self.model, data, self.R, self.covariance_, grid, self.alpha, self.R_q, rng,
            method=method,
        )
        self.halfwidth_ = self.band_.halfwidth
        return self

    def predict(self, t):
        check_is_fitted(self, "band_")
        return self.band_.center.cdf(t)

    def transform(self, t):
        check_is_fitted(self, "band_")
        return np.column_stack([self.band_.lower(t), self.band_.upper(t)])

    def score(self, reference, y=None):
        check_is_fitted(self, "band_")
        return float(band_covers(self.band_, reference))


class ClassicKSBand(BaseEstimator):
    """Classic KS band around ``R`` runs; ignores input uncertainty."""

    def __init__(self, model, R=500, alpha=0.05, random_state=None):
        self.model = model
        self.R = R
        self.alpha = alpha
        self.random_state = random_state

    def fit(self, X, y=None):
        data = X if isinstance(X, InputDataset) else InputDataset(X)
        center = output_ecdf(self.model, data, self.R, self.random_state)
        self.band_ = build_classic_ks_band(center, self.R, self.alpha)
        self.halfwidth_ = self.band_.halfwidth
        return self

    predict = InflatedKSBand.predict
    transform = InflatedKSBand.transform
    score = InflatedKSBand.score


def covariance_free(grid):
    """Zero covariance on ``grid``; reduces the inflated band to a grid KS band."""
    return CovarianceEstimate(grid, np.zeros((grid.k, grid.k)))
