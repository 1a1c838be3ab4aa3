"""Empirical distributions, evaluation grids and exact step-function distances."""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_1d_finite, check_positive_int, check_random_state

__all__ = [
    "EmpiricalDistribution",
    "Grid",
    "ecdf_eval",
    "resample",
    "uniform_grid",
    "step_sup_distance",
    "left_inverse",
    "save_ecdf",
    "load_ecdf",
]


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    """Sorted sample acting both as a resampling source and as a step CDF.

    The CDF is right-continuous, ``F(t) = #{x_j <= t} / count``, and ties are
    counted with multiplicity.
    """

    samples: np.ndarray

    def __post_init__(self):
        arr = np.sort(check_1d_finite(self.samples, "samples"))
        if arr.size == 0:
            raise ValueError("an empirical distribution needs at least one sample")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def count(self):
        return int(self.samples.size)

    def cdf(self, t):
        """Vectorized ECDF evaluation."""
        t = np.asarray(t, dtype=float)
        return np.searchsorted(self.samples, t, side="right") / self.count

    def draw(self, size, rng):
        """Uniform draws with replacement; consumes one index draw per value."""
        idx = rng.integers(0, self.count, size=size)
        return self.samples[idx]

    def __len__(self):
        return self.count

    def __eq__(self, other):
        if not isinstance(other, EmpiricalDistribution):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing evaluation points ``t_1 < ... < t_k``."""

    points: np.ndarray = field()

    def __post_init__(self):
        arr = check_1d_finite(self.points, "grid points").copy()
        if arr.size == 0:
            raise ValueError("a grid needs at least one point")
        if np.any(np.diff(arr) <= 0):
            raise ValueError("grid points must be strictly increasing")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    @property
    def k(self):
        return int(self.points.size)

    def __len__(self):
        return self.k


def ecdf_eval(dist, t):
    """Return ``#{samples <= t} / count``."""
    return float(dist.cdf(t))


def resample(dist, size, rng=None):
    """Draw ``size`` values uniformly with replacement from ``dist``."""
    size = check_positive_int(size, "size")
    rng = check_random_state(rng)
    return EmpiricalDistribution(dist.draw(size, rng))


def uniform_grid(lo, hi, k):
    """``k`` equally spaced points on ``[lo, hi]``, both endpoints included."""
    if not lo < hi:
        raise ValueError(f"need lo < hi, got lo={lo}, hi={hi}")
    k = check_positive_int(k, "k", minimum=2)
    return Grid(np.linspace(lo, hi, k))


def step_sup_distance(a, b):
    """Exact ``sup_t |F_a(t) - F_b(t)|`` for two empirical CDFs.

    Both functions are constant between consecutive jump points, so the
    supremum is attained at a jump point or in its left limit.
    """
    jumps = np.union1d(a.samples, b.samples)
    at = np.abs(a.cdf(jumps) - b.cdf(jumps))
    left_a = np.searchsorted(a.samples, jumps, side="left") / a.count
    left_b = np.searchsorted(b.samples, jumps, side="left") / b.count
    return float(max(at.max(), np.abs(left_a - left_b).max()))


def left_inverse(dist, level):
    """``inf{t : F(t) >= level}`` for the ECDF of ``dist``.

    Returns ``-inf`` for ``level <= 0`` and ``+inf`` when ``level > 1``.
    """
    if level <= 0.0:
        return -np.inf
    if level > 1.0:
        return np.inf
    counts = np.arange(1, dist.count + 1) / dist.count
    j = int(np.searchsorted(counts, level, side="left"))
    if j >= dist.count:
        return np.inf
    return float(dist.samples[j])


def save_ecdf(dist, path):
    path = Path(path)
    lines = [f"# ecdf count={dist.count}"] + [repr(float(x)) for x in dist.samples]
    path.write_text("\n".join(lines) + "\n")


def load_ecdf(path):
    values = []
    declared = None
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "count=" in line:
                declared = int(line.split("count=", 1)[1].split()[0])
            continue
        values.append(float(line))
    if declared is not None and declared != len(values):
        raise ValueError(f"header declares {declared} samples, file holds {len(values)}")
    return EmpiricalDistribution(np.array(values))
