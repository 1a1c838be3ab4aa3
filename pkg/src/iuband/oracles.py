"""Brute-force and closed-form references for checking the estimators."""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_random_state
from .models import simulate_batch

__all__ = [
    "EnumerationBudget",
    "EnumerationRefused",
    "exact_output_cdf",
    "analytic_identity_cov",
    "mc_output_cdf",
]


class EnumerationRefused(ValueError):
    def __init__(self, required, budget):
        super().__init__(f"enumeration needs {required} tuples, budget is {budget}")
        self.required = required
        self.budget = budget


@dataclass(frozen=True)
class EnumerationBudget:
    max_combinations: int = 10**7


def exact_output_cdf(model, data, t, budget=EnumerationBudget()):
    """Exact ``P(Y <= t)`` under the empirical inputs by full enumeration.

    Every index tuple (with replacement) is equally likely, so the result is
    the V-statistic average of ``I(h(...) <= t)``. Tuples are visited in
    lexicographic index order, in chunks so memory stays bounded.
    """
    if data.m != model.m:
        raise ValueError(f"model {model.name!r} has {model.m} sources, data has {data.m}")
    required = math.prod(n_i**t_i for n_i, t_i in zip(data.sizes, model.draw_counts))
    if required > budget.max_combinations:
        raise EnumerationRefused(required, budget.max_combinations)

    ranges = [range(n_i) for n_i, t_i in zip(data.sizes, model.draw_counts) for _ in range(t_i)]
    tuples = itertools.product(*ranges)
    hits = 0
    chunk = 65536
    while True:
        block = np.array(list(itertools.islice(tuples, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        draws, col = [], 0
        for src, t_i in zip(data, model.draw_counts):
            draws.append(src.samples[block[:, col : col + t_i]])
            col += t_i
        hits += int(np.count_nonzero(np.asarray(model.output_map(draws)) <= t))
    return hits / required


def analytic_identity_cov(F_t, F_s, F_min=None, beta=1.0):
    """``(F(min(t, s)) - F(t) F(s)) / beta`` for the one-draw identity model.

    ``F_min`` defaults to ``min(F_t, F_s)``, which is the CDF at the smaller
    time point for any nondecreasing ``F``.
    """
    values = [F_t, F_s] + ([] if F_min is None else [F_min])
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise ValueError("CDF values must lie in [0, 1]")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if F_min is None:
        F_min = min(F_t, F_s)
    return (F_min - F_t * F_s) / beta


def mc_output_cdf(model, data, t, runs, rng=None):
    """Monte Carlo estimate of ``P(Y <= t)`` under the empirical inputs."""
    runs = check_positive_int(runs, "runs")
    y = simulate_batch(model, data, runs, check_random_state(rng))
    return float(np.count_nonzero(y <= t)) / runs
