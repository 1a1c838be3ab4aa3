"""Input validation helpers shared by the estimators and free functions."""

import numbers

import numpy as np


class ConfigurationError(ValueError):
    """Raised when an algorithm configuration is invalid for the given data."""


def check_random_state(seed):
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    Accepts ``None``, an integer, a :class:`numpy.random.SeedSequence` or an
    existing Generator (returned as is, so the caller keeps ownership).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_open_probability(value, name):
    """Require ``0 < value < 1``."""
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value


def check_probability_array(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.size and (np.any(~np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return arr


def check_1d_finite(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr
