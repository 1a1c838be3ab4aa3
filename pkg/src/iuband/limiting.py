"""Sampling machinery for the limiting sup statistic of the inflated band.

The band half-width is the upper quantile of
``max_l |Z_l / sqrt(n) + W_l / sqrt(R)|`` where ``Z ~ N(0, V)`` carries the
input-data noise and ``W`` is a Brownian bridge evaluated at the output ECDF
values on the grid, drawn independently of ``Z``.
"""

import math
from functools import cached_property

import numpy as np

from ._validation import (
    check_open_probability,
    check_positive_int,
    check_probability_array,
    check_random_state,
)
from .empirical import Grid

__all__ = [
    "kolmogorov_cdf",
    "kolmogorov_quantile",
    "CovarianceEstimate",
    "sample_brownian_bridge_at",
    "sample_gaussian",
    "max_stat_quantile",
    "upper_order_statistic",
]


def kolmogorov_cdf(x, tol=1e-12):
    """``P(sup |BB| <= x) = 1 - 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 x^2)``."""
    if x <= 0:
        return 0.0
    total = 0.0
    j = 1
    while True:
        term = math.exp(-2.0 * j * j * x * x)
        total += term if j % 2 else -term
        if term < tol:
            break
        j += 1
    return max(0.0, 1.0 - 2.0 * total)


def kolmogorov_quantile(p, tol=1e-8):
    """Quantile of the sup of a standard Brownian bridge, by bisection."""
    p = check_open_probability(p, "p")
    lo, hi = 0.0, 1.0
    while kolmogorov_cdf(hi) < p:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if kolmogorov_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class CovarianceEstimate:
    """Estimated covariance of the input-noise process on a grid.

    Parameters
    ----------
    grid : Grid or array-like
        The ``k`` evaluation points.
    matrix : array-like of shape (k, k)
        Symmetric positive semi-definite matrix, up to round-off.

    The factor used for sampling is computed lazily and cached.
    """

    def __init__(self, grid, matrix):
        self.grid = grid if isinstance(grid, Grid) else Grid(grid)
        mat = np.array(matrix, dtype=float)
        k = self.grid.k
        if mat.shape != (k, k):
            raise ValueError(f"matrix shape {mat.shape} does not match grid size {k}")
        scale = max(np.abs(mat).max(), np.finfo(float).tiny)
        if np.abs(mat - mat.T).max() > 1e-12 * scale:
            raise ValueError("covariance matrix is not symmetric")
        if np.any(np.diag(mat) < 0):
            raise ValueError("covariance matrix has a negative diagonal entry")
        mat = 0.5 * (mat + mat.T)
        min_eig = float(np.linalg.eigvalsh(mat).min())
        floor = -1e-10 * np.trace(mat) / k
        if min_eig < floor:
            raise ValueError(
                f"covariance matrix is indefinite: min eigenvalue {min_eig:.3e} < {floor:.3e}"
            )
        mat.setflags(write=False)
        self.matrix = mat
        self.min_eigenvalue = min_eig

    @property
    def k(self):
        return self.grid.k

    @cached_property
    def factor(self):
        """``L`` with ``L @ L.T == matrix``."""
        try:
            return np.linalg.cholesky(self.matrix)
        except np.linalg.LinAlgError:
            vals, vecs = np.linalg.eigh(self.matrix)
            return vecs * np.sqrt(np.clip(vals, 0.0, None))

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(repr(float(t)) for t in self.grid.points) + "\n")
            for row in self.matrix:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path):
        rows = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(rows[0], rows[1:])


def sample_gaussian(cov, rng=None, size=None):
    """Mean-zero Gaussian draw(s) with covariance ``cov.matrix``.

    Returns shape ``(k,)`` when ``size`` is None, else ``(size, k)``.
    """
    rng = check_random_state(rng)
    n = 1 if size is None else size
    z = rng.standard_normal((n, cov.k)) @ cov.factor.T
    return z[0] if size is None else z


def sample_brownian_bridge_at(times, rng=None, size=None):
    """Joint Brownian-bridge values at arbitrary times in [0, 1].

    Times are sorted and deduplicated internally; duplicates get identical
    values and the output follows the input order.
    """
    rng = check_random_state(rng)
    times = np.asarray(times, dtype=float)
    if times.size and (np.any(~np.isfinite(times)) or times.min() < 0 or times.max() > 1):
        raise ValueError("Brownian bridge times must lie in [0, 1]")
    n = 1 if size is None else size
    uniq, inverse = np.unique(times, return_inverse=True)
    knots = np.append(uniq, 1.0)
    steps = np.diff(knots, prepend=0.0)
    increments = rng.standard_normal((n, knots.size)) * np.sqrt(steps)
    motion = np.cumsum(increments, axis=1)
    bridge = motion[:, :-1] - uniq * motion[:, -1:]
    out = bridge[:, inverse.reshape(-1)].reshape((n,) + times.shape)
    return out[0] if size is None else out


def upper_order_statistic(values, level):
    """The ``ceil(len(values) * level)``-th smallest value (1-based)."""
    values = np.sort(np.asarray(values, dtype=float))
    # guard against 10000 * 0.95 landing a hair above 9500
    idx = math.ceil(values.size * level - 1e-9)
    idx = min(max(idx, 1), values.size)
    return float(values[idx - 1])


def max_stat_quantile(cov, ecdf_at_grid, n, R, alpha, R_q, rng=None, chunk=4096):
    """Upper ``1 - alpha`` quantile of ``max_l |Z_l/sqrt(n) + W_l/sqrt(R)|``.

    ``Z ~ N(0, cov)`` and ``W`` is a Brownian bridge at ``ecdf_at_grid``,
    drawn independently. Draws are made in fixed-size chunks so the result
    depends only on the generator state.
    """
    rng = check_random_state(rng)
    u = check_probability_array(ecdf_at_grid, "ecdf_at_grid")
    if u.shape != (cov.k,):
        raise ValueError(f"ecdf_at_grid must have length {cov.k}")
    if np.any(np.diff(u) < 0):
        raise ValueError("ecdf_at_grid must be nondecreasing")
    if n < 1 or R < 1:
        raise ValueError("n and R must be >= 1")
    alpha = check_open_probability(alpha, "alpha")
    R_q = check_positive_int(R_q, "R_q", minimum=100)
    stats = max_stat_samples(cov, u, n, R, R_q, rng, chunk)
    return upper_order_statistic(stats, 1.0 - alpha)


def max_stat_samples(cov, ecdf_at_grid, n, R, R_q, rng, chunk=4096):
    out = np.empty(R_q)
    inv_n, inv_r = 1.0 / math.sqrt(n), 1.0 / math.sqrt(R)
    done = 0
    while done < R_q:
        size = min(chunk, R_q - done)
        z = sample_gaussian(cov, rng, size=size)
        w = sample_brownian_bridge_at(ecdf_at_grid, rng, size=size)
        out[done : done + size] = np.abs(z * inv_n + w * inv_r).max(axis=1)
        done += size
    return out
