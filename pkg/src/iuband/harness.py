"""Coverage experiments: repeated band construction against a truth proxy."""

import csv
import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .band import (
    band_covers,
    build_classic_ks_band,
    build_inflated_band,
    extract_quantile_region,
    output_ecdf,
    region_covers,
)
from .covariance import SubsampleConfig, estimate_covariance
from .empirical import EmpiricalDistribution, left_inverse, uniform_grid
from .models import (
    InputDataset,
    builtin_model,
    instrument,
    simulate_batch,
    true_input_distributions,
)

__all__ = [
    "stream",
    "ExperimentConfig",
    "ExperimentReport",
    "build_truth_proxy",
    "generate_data",
    "run_coverage_experiment",
    "run_quantile_experiment",
    "REPORT_COLUMNS",
]

logger = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "scenario",
    "min_n",
    "theta",
    "B",
    "R_s",
    "method",
    "coverage",
    "mean_halfwidth",
    "replications",
    "seed",
)

SCENARIOS = ("mm1", "network", "identity")
LONG_RUNNING = ("network",)
DEFAULT_GRIDS = {
    "mm1": (0.0, 10.0, 100),
    "network": (0.0, 0.04, 100),
    "identity": (0.0, 1.0, 100),
}
DEFAULT_RATIOS = {"mm1": (1.0, 2.0), "network": (1.0,) * 13, "identity": (1.0,)}

# stage tags for derived random streams
DATA, CENTER, ALG1, LIMIT, PROXY = range(5)


def stream(master, *key):
    """Independent generator for ``(master, *key)``.

    Keys are hashed by :class:`numpy.random.SeedSequence`, so streams for
    different replications and stages never depend on the order they are
    requested in.
    """
    seq = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


@dataclass
class ExperimentConfig:
    scenario: str
    min_n: int
    theta: list = field(default_factory=lambda: [0.01, 0.02, 0.03, 1.0])
    R_s: list = field(default_factory=lambda: [10, 30, 100])
    N: int = 1000
    R: int = None
    R_q: int = 10_000
    alpha: float = 0.05
    grid: list = None
    ratios: list = None
    replications: int = 500
    proxy_runs: int = 100_000
    seed: int = 0
    levels: list = field(default_factory=lambda: [0.25, 0.5, 0.75])

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        self.theta = [float(t) for t in np.atleast_1d(self.theta)]
        self.R_s = [int(r) for r in np.atleast_1d(self.R_s)]
        if self.R is None:
            self.R = int(self.min_n)
        if self.grid is None:
            self.grid = list(DEFAULT_GRIDS[self.scenario])
        if self.ratios is None:
            self.ratios = list(DEFAULT_RATIOS[self.scenario])
        self.levels = [float(s) for s in np.atleast_1d(self.levels)]
        for name in ("min_n", "N", "R", "R_q", "replications", "proxy_runs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if len(self.ratios) != builtin_model(self.scenario).m:
            raise ValueError(f"ratios needs one entry per input source of {self.scenario!r}")
        if len(self.grid) != 3:
            raise ValueError("grid is [lo, hi, k]")
        for theta in self.theta:
            if not 0 < theta <= 1:
                raise ValueError(f"theta must lie in (0, 1], got {theta}")
        for r in self.R_s:
            if r < 2 or self.N // r < 2:
                raise ValueError(f"R_s={r} leaves fewer than 2 outer resamples for N={self.N}")

    @classmethod
    def from_file(cls, path):
        raw = yaml.safe_load(Path(path).read_text()) or {}
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**raw)

    @property
    def data_sizes(self):
        base = min(self.ratios)
        return tuple(int(round(self.min_n * r / base)) for r in self.ratios)

    def make_grid(self):
        lo, hi, k = self.grid
        return uniform_grid(float(lo), float(hi), int(k))

    def sweep(self):
        """``(theta, B, R_s)`` triples with ``B = floor(N / R_s)``."""
        return [(theta, self.N // r, r) for theta in self.theta for r in self.R_s]


@dataclass
class ExperimentReport:
    rows: list
    extras: dict = field(default_factory=dict)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow(row)

    def row(self, method, theta=None, R_s=None):
        for r in self.rows:
            if r["method"] == method and (theta is None or r["theta"] == theta) and (
                R_s is None or r["R_s"] == R_s
            ):
                return r
        raise KeyError((method, theta, R_s))


def _proxy_path(cache_dir, scenario, runs, seed):
    return Path(cache_dir) / f"truth_{scenario}_{runs}_{seed}.npy"


def build_truth_proxy(scenario, proxy_runs, seed=0, cache_dir=None, chunk=20_000):
    """ECDF of ``proxy_runs`` outputs under the true input distributions.

    Cached as ``.npy`` under ``cache_dir`` keyed by scenario, run count and
    seed when a directory is given.
    """
    if proxy_runs < 10_000:
        warnings.warn(f"truth proxy with only {proxy_runs} runs is noisy", stacklevel=2)
    model = builtin_model(scenario)
    if cache_dir is not None:
        path = _proxy_path(cache_dir, scenario, proxy_runs, seed)
        if path.exists():
            return EmpiricalDistribution(np.load(path))
    rng = stream(seed, PROXY)
    inputs = true_input_distributions(scenario)
    parts, done = [], 0
    while done < proxy_runs:
        size = min(chunk, proxy_runs - done)
        parts.append(simulate_batch(model, inputs, size, rng))
        done += size
    outputs = np.concatenate(parts)
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        np.save(path, outputs)
    return EmpiricalDistribution(outputs)


def generate_data(scenario, sizes, rng):
    truth = true_input_distributions(scenario)
    return InputDataset([dist.draw(n_i, rng) for dist, n_i in zip(truth, sizes)])


def _replicate(config, r, reference, quantiles):
    """All bands of replication ``r``; one output ECDF is shared by every method."""
    model = instrument(builtin_model(config.scenario))
    grid = config.make_grid()
    data = generate_data(config.scenario, config.data_sizes, stream(config.seed, r, DATA))
    center = output_ecdf(model, data, config.R, stream(config.seed, r, CENTER))

    results = {}
    classic = build_classic_ks_band(center, config.R, config.alpha)
    results["classic_ks"] = _evaluate(classic, reference, quantiles, config.levels)
    for idx, (theta, B, R_s) in enumerate(config.sweep()):
        sub = SubsampleConfig(theta, B, R_s)
        cov = estimate_covariance(model, data, sub, grid, stream(config.seed, r, ALG1, idx))
        method = "bootstrap_full" if theta == 1 else "inflated"
        band = build_inflated_band(
            model, data, config.R, cov, grid, config.alpha, config.R_q,
            stream(config.seed, r, LIMIT, idx), center=center, method=method,
        )
        results[idx] = _evaluate(band, reference, quantiles, config.levels)
        u = center.cdf(grid.points)
        interior = (u > 0) & (u < 1)
        results[idx]["interior_noise"] = bool(np.any(np.diag(cov.matrix)[interior] > 0))
        results[idx]["psd_margin"] = cov.min_eigenvalue + 1e-10 * np.trace(cov.matrix) / grid.k
    results["model_runs"] = model.output_map.runs
    return results


def _evaluate(band, reference, quantiles, levels):
    out = {"halfwidth": band.halfwidth, "band_covers": band_covers(band, reference)}
    if quantiles is not None:
        region = extract_quantile_region(band, levels)
        out["region_covers"] = region_covers(region, quantiles)
    return out


def _run(config, threads, cache_dir, allow_long, quantile_mode):
    if config.scenario in LONG_RUNNING and not allow_long:
        raise ValueError(
            f"scenario {config.scenario!r} is long-running; pass allow_long=True (--long)"
        )
    reference = build_truth_proxy(config.scenario, config.proxy_runs, config.seed, cache_dir)
    quantiles = None
    if quantile_mode:
        quantiles = np.array([left_inverse(reference, s) for s in config.levels])

    def job(r):
        try:
            return _replicate(config, r, reference, quantiles)
        except Exception:  # noqa: BLE001 - abort only this replication
            logger.exception("replication %d aborted", r)
            return None

    indices = range(config.replications)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, indices))
    else:
        results = [job(r) for r in indices]

    aborted = [r for r, res in zip(indices, results) if res is None]
    if len(aborted) > 0.01 * config.replications:
        raise RuntimeError(f"{len(aborted)} of {config.replications} replications aborted")
    done = [res for res in results if res is not None]
    key = "region_covers" if quantile_mode else "band_covers"

    rows = []
    for idx, (theta, B, R_s) in enumerate(config.sweep()):
        method = "bootstrap_full" if theta == 1 else "inflated"
        for name, tag in ((method, idx), ("classic_ks", "classic_ks")):
            covered = [res[tag][key] for res in done]
            widths = [res[tag]["halfwidth"] for res in done]
            rows.append({
                "scenario": config.scenario,
                "min_n": config.min_n,
                "theta": theta,
                "B": B,
                "R_s": R_s,
                "method": name,
                "coverage": float(np.mean(covered)),
                "mean_halfwidth": float(np.mean(widths)),
                "replications": len(done),
                "seed": config.seed,
            })
    extras = {"aborted": aborted, "replication_results": done}
    return ExperimentReport(rows, extras)


def run_coverage_experiment(config, threads=1, cache_dir=None, allow_long=False):
    """Coverage of whole-function bands for every ``(theta, R_s)`` in the sweep."""
    return _run(config, threads, cache_dir, allow_long, quantile_mode=False)


def run_quantile_experiment(config, threads=1, cache_dir=None, allow_long=False):
    """Coverage of simultaneous quantile regions extracted from the bands.

    ``extras["replication_results"]`` also keeps the whole-band coverage of
    each replication, so the band-implies-region property can be audited.
    """
    return _run(config, threads, cache_dir, allow_long, quantile_mode=True)
