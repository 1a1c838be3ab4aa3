"""Finite-horizon simulation models and their input distributions.

A model consumes a fixed number of i.i.d. draws from each input source and
maps them deterministically to one real output. Every output map here is
vectorized over runs: it receives one ``(runs, T_i)`` array per source and
returns ``runs`` outputs.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import check_positive_int, check_random_state
from .empirical import EmpiricalDistribution

__all__ = [
    "FiniteHorizonModel",
    "InputDataset",
    "ExponentialInput",
    "UniformInput",
    "simulate",
    "simulate_batch",
    "mm1_output",
    "builtin_model",
    "true_input_distributions",
    "instrument",
    "BUILTIN_MODELS",
]


@dataclass(frozen=True)
class FiniteHorizonModel:
    name: str
    draw_counts: tuple
    output_map: object

    def __post_init__(self):
        counts = tuple(check_positive_int(t, "draw count") for t in self.draw_counts)
        if not counts:
            raise ValueError("a model needs at least one input source")
        object.__setattr__(self, "draw_counts", counts)

    @property
    def m(self):
        return len(self.draw_counts)


class InputDataset:
    """One empirical distribution per input source."""

    def __init__(self, sources):
        dists = []
        for s in sources:
            dists.append(s if isinstance(s, EmpiricalDistribution) else EmpiricalDistribution(s))
        if not dists:
            raise ValueError("an input dataset needs at least one source")
        self.sources = tuple(dists)

    @property
    def m(self):
        return len(self.sources)

    @property
    def sizes(self):
        return tuple(d.count for d in self.sources)

    @property
    def n(self):
        """Average data size ``sum(n_i) / m``."""
        return sum(self.sizes) / self.m

    def __iter__(self):
        return iter(self.sources)

    def __len__(self):
        return self.m

    def __getitem__(self, i):
        return self.sources[i]

    def save(self, directory):
        """Write ``input_<i>.txt`` (1-based) with one sample per line."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for i, d in enumerate(self.sources, start=1):
            (directory / f"input_{i}.txt").write_text(
                "\n".join(repr(float(x)) for x in d.samples) + "\n"
            )

    @classmethod
    def load(cls, directory, m=None):
        directory = Path(directory)
        if m is None:
            m = len(list(directory.glob("input_*.txt")))
        sources = []
        for i in range(1, m + 1):
            path = directory / f"input_{i}.txt"
            if not path.exists():
                raise FileNotFoundError(f"missing input file {path}")
            values = [float(x) for x in path.read_text().split() if not x.startswith("#")]
            sources.append(np.array(values))
        return cls(sources)


@dataclass(frozen=True)
class ExponentialInput:
    rate: float

    def draw(self, size, rng):
        return rng.exponential(1.0 / self.rate, size=size)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, -np.expm1(-self.rate * np.maximum(t, 0)), 0.0)


@dataclass(frozen=True)
class UniformInput:
    low: float = 0.0
    high: float = 1.0

    def draw(self, size, rng):
        return rng.uniform(self.low, self.high, size=size)

    def cdf(self, t):
        return np.clip((np.asarray(t, dtype=float) - self.low) / (self.high - self.low), 0, 1)


def _check_inputs(model, inputs):
    inputs = tuple(inputs)
    if len(inputs) != model.m:
        raise ValueError(f"model {model.name!r} has {model.m} input sources, got {len(inputs)}")
    return inputs


def simulate_batch(model, inputs, runs, rng=None):
    """Run ``model`` ``runs`` times under ``inputs``.

    Draw order is fixed: source 1 first, as a ``(runs, T_1)`` row-major block,
    then source 2, and so on. With ``runs=1`` this is source order, then index
    order within each source.
    """
    inputs = _check_inputs(model, inputs)
    runs = check_positive_int(runs, "runs")
    rng = check_random_state(rng)
    draws = [src.draw((runs, t), rng) for src, t in zip(inputs, model.draw_counts)]
    return np.asarray(model.output_map(draws), dtype=float).reshape(runs)


def simulate(model, inputs, rng=None):
    """One output ``Y = h(X_1, ..., X_m)``."""
    return float(simulate_batch(model, inputs, 1, rng)[0])


class _CountingMap:
    def __init__(self, inner):
        self.inner = inner
        self.runs = 0

    def __call__(self, draws):
        self.runs += draws[0].shape[0]
        return self.inner(draws)


def instrument(model):
    """Copy of ``model`` whose ``output_map.runs`` counts every simulated run."""
    return FiniteHorizonModel(model.name, model.draw_counts, _CountingMap(model.output_map))


# -- M/M/1 -------------------------------------------------------------------

def _lindley_mean_sojourn(arrivals, services):
    waits = np.zeros_like(services)
    for j in range(1, services.shape[1]):
        waits[:, j] = np.maximum(waits[:, j - 1] + services[:, j - 1] - arrivals[:, j], 0.0)
    return (waits + services).mean(axis=1)


def mm1_output(interarrivals, services):
    """Average sojourn time of the first 10 customers of an initially empty queue.

    ``interarrivals[0]`` is drawn but unused since the first customer finds the
    system empty.
    """
    a = np.asarray(interarrivals, dtype=float)
    s = np.asarray(services, dtype=float)
    if a.shape != (10,) or s.shape != (10,):
        raise ValueError("mm1_output needs exactly 10 interarrival and 10 service times")
    if np.any(a < 0) or np.any(s < 0):
        raise ValueError("interarrival and service times must be nonnegative")
    return float(_lindley_mean_sojourn(a[None, :], s[None, :])[0])


def _mm1_map(draws):
    return _lindley_mean_sojourn(draws[0], draws[1])


# -- toy models ----------------------------------------------------------------

def _identity_map(draws):
    return draws[0][:, 0]


def _max2_map(draws):
    return draws[0].max(axis=1)


def _sum2_map(draws):
    return draws[0][:, 0] + draws[1][:, 0]


def _network_model():
    from .network import NETWORK_MODEL

    return NETWORK_MODEL


BUILTIN_MODELS = ("identity", "max2", "sum2", "mm1", "network")


def builtin_model(name):
    if name == "identity":
        return FiniteHorizonModel("identity", (1,), _identity_map)
    if name == "max2":
        return FiniteHorizonModel("max2", (2,), _max2_map)
    if name == "sum2":
        return FiniteHorizonModel("sum2", (1, 1), _sum2_map)
    if name == "mm1":
        return FiniteHorizonModel("mm1", (10, 10), _mm1_map)
    if name == "network":
        return _network_model()
    raise ValueError(f"unknown model {name!r}; choose from {', '.join(BUILTIN_MODELS)}")


def true_input_distributions(name):
    """Ground-truth samplers used to generate data and truth proxies.

    The toy models use Uniform(0, 1) inputs by convention.
    """
    if name == "identity":
        return (UniformInput(),)
    if name == "max2":
        return (UniformInput(),)
    if name == "sum2":
        return (UniformInput(), UniformInput())
    if name == "mm1":
        return (ExponentialInput(0.5), ExponentialInput(1.0))
    if name == "network":
        from .network import ARRIVAL_RATES, MEAN_MESSAGE_LENGTH, STREAMS

        rates = [ExponentialInput(float(ARRIVAL_RATES[i - 1, j - 1])) for i, j in STREAMS]
        return tuple(rates) + (ExponentialInput(1.0 / MEAN_MESSAGE_LENGTH),)
    raise ValueError(f"unknown model {name!r}; choose from {', '.join(BUILTIN_MODELS)}")
