import numpy as np
import pytest
from scipy.stats import kstwobign, norm

from iuband.empirical import Grid
from iuband.limiting import (
    CovarianceEstimate,
    kolmogorov_cdf,
    kolmogorov_quantile,
    max_stat_quantile,
    sample_brownian_bridge_at,
    sample_gaussian,
    upper_order_statistic,
)


def test_kolmogorov_quantile_values():
    assert kolmogorov_quantile(0.95) == pytest.approx(1.3581, abs=1e-4)
    assert kolmogorov_quantile(0.5) == pytest.approx(0.8276, abs=1e-4)
    assert kolmogorov_quantile(0.99) > kolmogorov_quantile(0.95)


@pytest.mark.parametrize("p", [0.01, 0.2, 0.5, 0.9, 0.95, 0.999])
def test_kolmogorov_quantile_matches_scipy(p):
    assert kolmogorov_quantile(p) == pytest.approx(kstwobign.ppf(p), abs=1e-7)
    assert kolmogorov_cdf(kolmogorov_quantile(p)) == pytest.approx(p, abs=1e-7)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
def test_kolmogorov_quantile_rejects(p):
    with pytest.raises(ValueError):
        kolmogorov_quantile(p)


def test_bridge_pinned(rng):
    assert sample_brownian_bridge_at([0.0], rng)[0] == 0.0
    assert sample_brownian_bridge_at([1.0], rng)[0] == pytest.approx(0.0, abs=1e-12)


def test_bridge_moments(rng):
    n = 100_000
    w = sample_brownian_bridge_at([0.5], rng, size=n)[:, 0]
    assert abs(w.var() - 0.25) <= 3 * 0.25 * np.sqrt(2 / n)
    w = sample_brownian_bridge_at([0.25, 0.75], rng, size=n)
    cov = np.cov(w.T)[0, 1]
    se = np.sqrt((0.1875**2 + 0.0625**2) / n)
    assert abs(cov - 0.0625) <= 3 * se


def test_bridge_duplicates_and_order(rng):
    times = [0.7, 0.2, 0.7, 0.0, 0.2]
    w = sample_brownian_bridge_at(times, np.random.default_rng(4))
    assert w[0] == w[2] and w[1] == w[4] and w[3] == 0.0
    sorted_w = sample_brownian_bridge_at([0.0, 0.2, 0.7], np.random.default_rng(4))
    assert np.allclose([w[3], w[1], w[0]], sorted_w)


def test_bridge_rejects_out_of_range(rng):
    with pytest.raises(ValueError):
        sample_brownian_bridge_at([0.5, 1.2], rng)


def test_gaussian_identity(rng):
    cov = CovarianceEstimate(Grid([0.0, 1.0]), np.eye(2))
    z = sample_gaussian(cov, rng, size=100_000)
    se = 1 / np.sqrt(100_000)
    assert np.all(np.abs(z.mean(axis=0)) <= 3 * se)
    assert np.all(np.abs(z.var(axis=0) - 1) <= 3 * np.sqrt(2) * se)
    assert abs(np.corrcoef(z.T)[0, 1]) <= 3 * se


def test_gaussian_zero_and_rank_one(rng):
    zero = CovarianceEstimate(Grid([0.0, 1.0]), np.zeros((2, 2)))
    assert np.all(sample_gaussian(zero, rng, size=10) == 0)
    ones = CovarianceEstimate(Grid([0.0, 1.0]), np.ones((2, 2)))
    z = sample_gaussian(ones, rng, size=1000)
    assert np.allclose(z[:, 0], z[:, 1], atol=1e-7)
    assert sample_gaussian(ones, rng).shape == (2,)


def test_covariance_validation():
    with pytest.raises(ValueError, match="min eigenvalue"):
        CovarianceEstimate(Grid([0.0, 1.0]), [[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ValueError, match="symmetric"):
        CovarianceEstimate(Grid([0.0, 1.0]), [[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(ValueError):
        CovarianceEstimate(Grid([0.0, 1.0]), np.eye(3))


def test_covariance_csv_roundtrip(tmp_path):
    cov = CovarianceEstimate(Grid([0.1, 0.5]), [[0.2, 0.1], [0.1, 0.3]])
    cov.to_csv(tmp_path / "v.csv")
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == "0.1,0.5" and len(lines) == 3
    back = CovarianceEstimate.from_csv(tmp_path / "v.csv")
    assert np.array_equal(back.matrix, cov.matrix)
    assert np.array_equal(back.grid.points, cov.grid.points)


def test_upper_order_statistic():
    values = np.arange(1, 10_001, dtype=float)
    assert upper_order_statistic(values, 0.95) == 9500.0
    assert upper_order_statistic([3.0, 1.0, 2.0], 0.5) == 2.0


def test_max_stat_pinned_bridge_gives_zero(rng):
    cov = CovarianceEstimate(Grid([1.0, 2.0, 3.0]), np.zeros((3, 3)))
    assert max_stat_quantile(cov, [0, 0, 0], 100, 100, 0.05, 1000, rng) == 0.0


def test_max_stat_grid_bridge_below_kolmogorov(rng):
    u = np.arange(1, 100) / 100
    cov = CovarianceEstimate(Grid(u), np.zeros((99, 99)))
    R = 400
    q = max_stat_quantile(cov, u, 1, R, 0.05, 100_000, rng)
    assert 1.30 <= np.sqrt(R) * q <= 1.37
    assert np.sqrt(R) * q < kolmogorov_quantile(0.95)


def test_max_stat_single_point_half_normal(rng):
    v, u, n, R, R_q = 0.3, 0.4, 50, 100, 100_000
    cov = CovarianceEstimate(Grid([0.0]), [[v]])
    q = max_stat_quantile(cov, [u], n, R, 0.05, R_q, rng)
    sigma = np.sqrt(v / n + u * (1 - u) / R)
    expected = norm.ppf(0.975) * sigma
    # SE of an empirical quantile: sqrt(p(1-p)/N) / density at the quantile
    density = 2 * norm.pdf(norm.ppf(0.975)) / sigma
    se = np.sqrt(0.95 * 0.05 / R_q) / density
    assert abs(q - expected) <= 3 * se


def test_max_stat_repeatable_within_two_percent():
    u = np.linspace(0.05, 0.95, 20)
    cov = CovarianceEstimate(Grid(u), 0.1 * np.minimum.outer(u, u))
    a = max_stat_quantile(cov, u, 100, 100, 0.05, 100_000, np.random.default_rng(1))
    b = max_stat_quantile(cov, u, 100, 100, 0.05, 100_000, np.random.default_rng(2))
    assert abs(a - b) <= 0.02 * a


def test_max_stat_scales_with_covariance():
    u = np.linspace(0.05, 0.95, 20)
    base = 0.1 * np.minimum.outer(u, u)
    c = 3.0
    q1 = max_stat_quantile(CovarianceEstimate(Grid(u), base), u, 100, 1e12, 0.05, 100_000,
                           np.random.default_rng(1))
    q2 = max_stat_quantile(CovarianceEstimate(Grid(u), c**2 * base), u, 100, 1e12, 0.05,
                           100_000, np.random.default_rng(2))
    assert q2 == pytest.approx(c * q1, rel=0.02)


def test_max_stat_components_independent():
    # replay the draw order of max_stat_quantile: a Z block, then a W block
    u = np.linspace(0.1, 0.9, 5)
    cov = CovarianceEstimate(Grid(u), 0.2 * np.eye(5))
    R_q = 4096
    rng = np.random.default_rng(9)
    z = sample_gaussian(cov, rng, size=R_q)
    w = sample_brownian_bridge_at(u, rng, size=R_q)
    for j in range(5):
        assert abs(np.corrcoef(z[:, j], w[:, j])[0, 1]) < 3 / np.sqrt(R_q)
    ref = np.random.default_rng(9)
    stats = np.abs(sample_gaussian(cov, ref, size=R_q) / 10
                   + sample_brownian_bridge_at(u, ref, size=R_q) / 10).max(axis=1)
    q = max_stat_quantile(cov, u, 100, 100, 0.05, R_q, np.random.default_rng(9), chunk=R_q)
    assert q == np.sort(stats)[int(np.ceil(0.95 * R_q)) - 1]


@pytest.mark.parametrize(
    "u, kwargs",
    [
        ([0.2, 0.1], {}),
        ([0.2, 1.1], {}),
        ([0.1, 0.2], {"R_q": 50}),
        ([0.1, 0.2], {"alpha": 1.0}),
        ([0.1, 0.2], {"n": 0}),
    ],
)
def test_max_stat_rejects(u, kwargs, rng):
    cov = CovarianceEstimate(Grid([0.0, 1.0]), np.eye(2))
    args = {"n": 10, "R": 10, "alpha": 0.05, "R_q": 1000}
    args.update(kwargs)
    with pytest.raises(ValueError):
        max_stat_quantile(cov, u, rng=rng, **args)
