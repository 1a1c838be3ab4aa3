import numpy as np
import pytest
from conftest import within_binomial
from hypothesis import given
from hypothesis import strategies as st

from iuband.empirical import EmpiricalDistribution
from iuband.models import (
    ExponentialInput,
    FiniteHorizonModel,
    InputDataset,
    UniformInput,
    builtin_model,
    instrument,
    mm1_output,
    simulate,
    simulate_batch,
    true_input_distributions,
)


def test_identity_model():
    model = builtin_model("identity")
    assert simulate(model, [EmpiricalDistribution([7.0])], np.random.default_rng(0)) == 7.0


def test_max2_frequency(rng):
    model = builtin_model("max2")
    y = simulate_batch(model, [EmpiricalDistribution([1.0, 2.0])], 10_000, rng)
    assert within_binomial(np.count_nonzero(y == 2.0), 10_000, 0.75)


def test_degenerate_mm1_inputs():
    model = builtin_model("mm1")
    inputs = [EmpiricalDistribution([2.0]), EmpiricalDistribution([1.0])]
    assert simulate(model, inputs, np.random.default_rng(1)) == pytest.approx(1.0)


@pytest.mark.parametrize("a, s, expected", [(2.0, 1.0, 1.0), (0.5, 1.0, 3.25), (1.0, 1.0, 1.0)])
def test_mm1_output_hand_values(a, s, expected):
    assert mm1_output([a] * 10, [s] * 10) == pytest.approx(expected)


def test_mm1_output_rejects_bad_input():
    with pytest.raises(ValueError):
        mm1_output([-1.0] + [1.0] * 9, [1.0] * 10)
    with pytest.raises(ValueError):
        mm1_output([1.0] * 9, [1.0] * 10)


@given(
    st.lists(st.floats(0, 10), min_size=10, max_size=10),
    st.lists(st.floats(0, 10), min_size=10, max_size=10),
)
def test_sojourn_at_least_service(a, s):
    assert mm1_output(a, s) >= np.mean(s) - 1e-12


def test_builtin_model_shapes():
    assert builtin_model("mm1").draw_counts == (10, 10)
    assert builtin_model("network").m == 13
    assert builtin_model("identity").draw_counts == (1,)
    with pytest.raises(ValueError):
        builtin_model("nope")


def test_true_inputs():
    mm1 = true_input_distributions("mm1")
    assert mm1 == (ExponentialInput(0.5), ExponentialInput(1.0))
    net = true_input_distributions("network")
    assert len(net) == 13
    assert [d.rate for d in net[:12]] == [40, 30, 35, 50, 45, 15, 60, 15, 20, 25, 30, 40]
    assert net[12].rate == pytest.approx(1 / 300)
    assert true_input_distributions("identity") == (UniformInput(0.0, 1.0),)
    with pytest.raises(ValueError):
        true_input_distributions("nope")


def test_simulate_input_count_mismatch(rng):
    with pytest.raises(ValueError):
        simulate(builtin_model("mm1"), [EmpiricalDistribution([1.0])], rng)


def test_simulate_is_reproducible_and_pins_draw_order():
    model = builtin_model("mm1")
    data = InputDataset([np.arange(1.0, 6.0), np.arange(10.0, 20.0)])
    y1 = simulate(model, data, np.random.default_rng(5))
    y2 = simulate(model, data, np.random.default_rng(5))
    assert y1 == y2
    # source 1 takes 10 index draws, then source 2 takes 10
    rng = np.random.default_rng(5)
    a = data[0].samples[rng.integers(0, 5, size=(1, 10))][0]
    s = data[1].samples[rng.integers(0, 10, size=(1, 10))][0]
    assert y1 == mm1_output(a, s)


def test_batch_of_one_equals_single_run():
    model = builtin_model("sum2")
    inputs = true_input_distributions("sum2")
    single = simulate(model, inputs, np.random.default_rng(11))
    batch = simulate_batch(model, inputs, 1, np.random.default_rng(11))
    assert batch[0] == single


def test_instrument_counts_runs(rng):
    model = instrument(builtin_model("mm1"))
    inputs = true_input_distributions("mm1")
    simulate_batch(model, inputs, 17, rng)
    simulate(model, inputs, rng)
    assert model.output_map.runs == 18


def test_model_requires_sources():
    with pytest.raises(ValueError):
        FiniteHorizonModel("empty", (), lambda d: d)


def test_input_dataset_average_and_files(tmp_path):
    data = InputDataset([[1.0, 2.0], [1.0, 2.0, 3.0, 4.0]])
    assert data.n == 3.0
    data.save(tmp_path)
    assert (tmp_path / "input_1.txt").exists() and (tmp_path / "input_2.txt").exists()
    loaded = InputDataset.load(tmp_path)
    assert loaded.sizes == (2, 4)
    assert all(a == b for a, b in zip(loaded, data))
