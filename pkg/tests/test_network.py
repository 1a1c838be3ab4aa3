import csv

import numpy as np
import pytest

from iuband.models import builtin_model, simulate_batch, true_input_distributions
from iuband.network import (
    ARRIVAL_RATES,
    DEFAULT_CONFIG,
    STREAMS,
    InsufficientDraws,
    NetworkConfig,
    export_parameters,
    minimal_path_cost,
    network_deliveries,
    network_output,
    ring_routes,
)


def _draws(seed):
    rng = np.random.default_rng(seed)
    inputs = true_input_distributions("network")
    model = builtin_model("network")
    return [src.draw((1, t), rng)[0] for src, t in zip(inputs, model.draw_counts)]


def test_routes_frozen():
    routes, channels = ring_routes()
    assert channels == {1: (1, 2), 2: (2, 3), 3: (3, 4), 4: (4, 1)}
    assert routes[(1, 2)] == (1,)
    assert routes[(1, 3)] == (1, 2)
    assert routes[(2, 4)] == (1, 4)
    assert routes[(4, 2)] == (4, 1)
    assert routes[(3, 1)] == (2, 1)
    assert all(len(r) <= 2 for r in routes.values())


def test_arrival_table():
    assert ARRIVAL_RATES[0, 1] == 40 and ARRIVAL_RATES[2, 0] == 60 and ARRIVAL_RATES[3, 2] == 40
    assert len(STREAMS) == 12


def test_single_message_hand_value():
    config = NetworkConfig(
        channel_lengths=(0.0, 0.0, 0.0, 0.0), channel_storage=np.inf, n_messages=1
    )
    streams = [[np.inf, np.inf] for _ in STREAMS]
    streams[0] = [0.0, np.inf]  # one message 1 -> 2, one hop on channel 1
    lengths = np.zeros(2 * len(STREAMS))
    lengths[0] = 300.0
    delay = network_output(streams, lengths, config)
    assert delay == pytest.approx(2 * 0.001 + 300 / 275000, rel=1e-12)
    assert delay == pytest.approx(0.0030909090909, rel=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_delays_bounded_below_by_path_cost(seed):
    draws = _draws(seed)
    deliveries = network_deliveries(draws[:-1], draws[-1])
    assert len(deliveries) == 30
    for delay, src, dst, length in deliveries:
        assert np.isfinite(delay) and delay >= 0
        assert delay >= minimal_path_cost(src, dst, length) - 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_doubling_lengths_does_not_reduce_mean_delay(seed):
    draws = _draws(seed)
    base = network_output(draws[:-1], draws[-1])
    doubled = network_output(draws[:-1], 2 * draws[-1])
    assert doubled >= base


def test_batch_outputs_positive():
    y = simulate_batch(
        builtin_model("network"), true_input_distributions("network"), 20,
        np.random.default_rng(0),
    )
    assert np.all(y > 0) and np.all(np.isfinite(y))


def test_insufficient_draws():
    streams = [[0.01, 0.01] for _ in STREAMS]
    with pytest.raises(InsufficientDraws):
        network_output(streams, np.full(24, 300.0))


def test_malformed_inputs():
    with pytest.raises(ValueError):
        network_output([[0.1]] * 11, [300.0] * 11)
    with pytest.raises(ValueError):
        network_output([[-0.1, 1.0]] * 12, [300.0] * 24)


def test_storage_blocking_delays_messages():
    tight = NetworkConfig(channel_storage=3000.0)
    draws = _draws(3)
    assert network_output(draws[:-1], draws[-1], tight) >= network_output(
        draws[:-1], draws[-1], DEFAULT_CONFIG
    )


def test_export_parameters(tmp_path):
    path = tmp_path / "net.csv"
    export_parameters(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["source", "destination", "arrival_rate", "route_channels"]
    assert rows[1] == ["1", "2", "40.0", "1"]
    assert len([r for r in rows if r and r[0] in "1234" and len(r) == 4]) == 16
