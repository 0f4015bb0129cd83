from __future__ import annotations

import io
import math

import numpy as np
import pytest

from calculators.experiment import (
    ExperimentRequest,
    SpacetimeEvent,
    TrialDataset,
    TrialRecord,
    calculate,
    dump_dataset,
    estimate,
    lightcone_ordered,
    read_dataset,
    sample_table,
    simulate,
    simulate_shard,
    spacelike_separated,
    wilson_interval,
    write_dataset,
)
from calculators.quantum_core import (
    ChainedMeasurementFamily,
    born_table,
    entangled_state,
    i_n_analytic,
    measurement_from_angle,
)
from core.errors import DatasetParseError, InsufficientDataError, InvalidParameterError


def dataset(n, rows):
    return TrialDataset.from_records(n, 1.0, 0, [TrialRecord(i, *row) for i, row in enumerate(rows)])


# -- spacetime -----------------------------------------------------------------


def test_lightcone_examples():
    origin = SpacetimeEvent.at(0.0)
    assert lightcone_ordered(origin, SpacetimeEvent.at(1.0, 0.5))
    assert lightcone_ordered(origin, SpacetimeEvent.at(1.0, 1.0))  # on the cone
    assert not lightcone_ordered(origin, SpacetimeEvent.at(1.0, 2.0))
    assert not lightcone_ordered(SpacetimeEvent.at(1.0, 0.5), origin)
    assert lightcone_ordered(origin, origin)


def test_lightcone_is_a_partial_order(rng):
    events = [SpacetimeEvent.at(*rng.uniform(-2.0, 2.0, size=4)) for _ in range(40)]
    for e1 in events:
        for e2 in events:
            if e1 is not e2 and lightcone_ordered(e1, e2):
                assert not lightcone_ordered(e2, e1)
            for e3 in events:
                if lightcone_ordered(e1, e2) and lightcone_ordered(e2, e3):
                    assert lightcone_ordered(e1, e3)


def test_event_coordinates_must_be_finite():
    with pytest.raises(InvalidParameterError, match="finite"):
        SpacetimeEvent.at(0.0, math.inf)
    with pytest.raises(InvalidParameterError, match="3 spatial"):
        SpacetimeEvent(0.0, (1.0, 2.0))


def test_spacelike_separation():
    alice = (SpacetimeEvent.at(0.0), SpacetimeEvent.at(1.0))
    far_bob = (SpacetimeEvent.at(0.0, 10.0), SpacetimeEvent.at(1.0, 10.0))
    near_bob = (SpacetimeEvent.at(0.0, 0.5), SpacetimeEvent.at(1.0, 0.5))
    assert spacelike_separated(alice, far_bob)
    assert not spacelike_separated(alice, near_bob)


def test_spacelike_rejects_output_before_input():
    backwards = (SpacetimeEvent.at(1.0), SpacetimeEvent.at(0.0))
    other = (SpacetimeEvent.at(0.0, 10.0), SpacetimeEvent.at(1.0, 10.0))
    with pytest.raises(InvalidParameterError, match="not time-ordered"):
        spacelike_separated(backwards, other)
    with pytest.raises(InvalidParameterError, match="second pair"):
        spacelike_separated(other, backwards)


# -- simulation -----------------------------------------------------------------


def test_simulation_is_deterministic():
    first = simulate(2, 1.0, 1000, 7)
    assert first == simulate(2, 1.0, 1000, 7)
    assert first != simulate(2, 1.0, 1000, 8)
    assert len(first) == 1000
    assert set(first.a.tolist()) <= {0, 2}
    assert set(first.b.tolist()) <= {1, 3}
    assert set(first.x.tolist()) <= {1, -1}


def test_sharded_simulation_equals_sequential():
    sequential = simulate(3, 0.9, 10001, 11)
    assert simulate(3, 0.9, 10001, 11, workers=4) == sequential
    shard = simulate_shard(3, 0.9, 11, 500, 100)
    assert np.array_equal(shard.trial, np.arange(500, 600))
    assert np.array_equal(shard.x, sequential.x[500:600])
    assert np.array_equal(shard.a, sequential.a[500:600])


def test_simulation_rejects_bad_arguments():
    with pytest.raises(InvalidParameterError, match="seed"):
        simulate(2, 1.0, 10, -1)
    with pytest.raises(InvalidParameterError, match="seed"):
        simulate(2, 1.0, 10, 2**64)
    with pytest.raises(InvalidParameterError, match="trials"):
        simulate(2, 1.0, 0, 1)
    with pytest.raises(InvalidParameterError, match="workers"):
        simulate(2, 1.0, 10, 1, workers=0)


def test_equal_angles_give_equal_outcomes():
    m = measurement_from_angle(0.3)
    table = born_table(entangled_state(1.0), ChainedMeasurementFamily(1, {0: m}, {1: m}))
    _, _, x, y = sample_table(table, 5, 0, 20000)
    assert np.array_equal(x, y)


def test_sampled_frequency_matches_born_rule():
    data = simulate(2, 1.0, 10**6, 20240521)
    term = estimate(data).per_term[("differ", 0, 1)]
    p = math.sin(math.pi / 8) ** 2
    sigma = math.sqrt(p * (1 - p) / term.count)
    assert abs(term.point - p) <= 4 * sigma


def test_dataset_is_read_only():
    data = simulate(2, 1.0, 10, 1)
    with pytest.raises(ValueError):
        data.x[0] = 1


def test_dataset_validates_labels():
    with pytest.raises(InvalidParameterError, match="Alice"):
        dataset(2, [(1, 1, 1, 1)])
    with pytest.raises(InvalidParameterError, match="Bob"):
        dataset(2, [(0, 5, 1, 1)])
    with pytest.raises(InvalidParameterError, match="outcome x"):
        dataset(2, [(0, 1, 0, 1)])


# -- estimation -----------------------------------------------------------------


def test_estimate_all_terms_zero():
    # every differ term sees x == y, the wrap term sees x != y
    data = dataset(2, [(0, 1, 1, 1), (2, 1, -1, -1), (2, 3, 1, 1), (0, 3, 1, -1)])
    est = estimate(data)
    assert est.i_n_hat == 0.0
    assert est.confidence_low == pytest.approx(0.0, abs=1e-12)
    assert est.confidence_high > 0.0
    assert len(est.per_term) == 4
    assert est.trials == 4


def test_estimate_empty_cell():
    data = dataset(2, [(0, 1, 1, 1), (2, 1, -1, -1), (0, 3, 1, -1)])
    with pytest.raises(InsufficientDataError, match=r"\(2, 3\)") as info:
        estimate(data)
    assert info.value.cell == (2, 3)


def test_estimate_empty_dataset():
    with pytest.raises(InsufficientDataError, match="empty"):
        estimate(dataset(2, []))


def test_estimate_interval_contains_closed_form():
    est = estimate(simulate(4, 0.95, 200000, 3))
    assert est.confidence_low <= i_n_analytic(4, 0.95) <= est.confidence_high
    assert est.confidence_low <= est.i_n_hat <= est.confidence_high


def test_estimate_rejects_bad_level():
    with pytest.raises(InvalidParameterError, match="confidence_level"):
        estimate(simulate(2, 1.0, 100, 1), confidence_level=1.0)


def test_wilson_interval_examples(rng):
    low, high = wilson_interval(0, 10, 0.95)
    assert low == pytest.approx(0.0, abs=1e-12) and 0.0 < high < 0.35
    low, high = wilson_interval(10, 10, 0.95)
    assert high == pytest.approx(1.0) and 0.65 < low < 1.0
    for _ in range(200):
        m = int(rng.integers(1, 500))
        s = int(rng.integers(0, m + 1))
        low, high = wilson_interval(s, m, 0.9)
        assert low - 1e-12 <= s / m <= high + 1e-12


@pytest.mark.slow
def test_summed_interval_coverage():
    truth = i_n_analytic(2, 1.0)
    covered = 0
    for seed in range(200):
        est = estimate(simulate(2, 1.0, 10**5, seed))
        covered += est.confidence_low <= truth <= est.confidence_high
    assert covered >= 180


@pytest.mark.slow
def test_chsh_value_inside_interval_for_most_seeds():
    truth = 2 - math.sqrt(2)
    assert i_n_analytic(2, 1.0) == pytest.approx(truth, abs=1e-10)
    covered = 0
    for seed in range(20):
        est = estimate(simulate(2, 1.0, 10**6, seed, workers=4), confidence_level=0.95)
        covered += est.confidence_low <= truth <= est.confidence_high
    assert covered >= 18


@pytest.mark.slow
@pytest.mark.parametrize("trials", [10**4, 10**5])
def test_estimate_error_shrinks_with_trials(trials):
    n = 2
    truth = i_n_analytic(n, 1.0)
    for seed in range(20):
        est = estimate(simulate(n, 1.0, trials, seed))
        assert abs(est.i_n_hat - truth) < 5 * math.sqrt(2 * n / trials)


@pytest.mark.slow
@pytest.mark.parametrize(
    "n, visibility, expected, within",
    [
        (2, 1.0, 0.585786, 0.01),
        (8, 0.98, 0.310643, 0.02),
    ],
)
def test_estimate_at_ten_million_trials(n, visibility, expected, within):
    est = estimate(simulate(n, visibility, 10**7, 42, workers=4))
    assert abs(est.i_n_hat - expected) <= within


# -- CSV -------------------------------------------------------------------------


def test_csv_round_trip(tmp_path):
    data = simulate(2, 0.5, 500, 5)
    path = tmp_path / "trials.csv"
    write_dataset(data, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# n=2 visibility=0.5 seed=5"
    assert lines[1] == "trial,a,b,x,y"
    assert len(lines) == 502
    assert read_dataset(path) == data


def test_dump_to_stream():
    buf = io.StringIO()
    dump_dataset(dataset(1, [(0, 1, 1, -1)]), buf)
    assert buf.getvalue() == "# n=1 visibility=1 seed=0\ntrial,a,b,x,y\n0,0,1,1,-1\n"


@pytest.mark.parametrize(
    "body, line, message",
    [
        ("trial,a,b,x,y\n0,0,1,1,1\n", 1, "metadata"),
        ("# n=2 visibility=1 seed=0\ntrial,a,b\n", 2, "header"),
        ("# n=2 visibility=1 seed=0\ntrial,a,b,x,y\n0,0,1,1,1\n1,0,1,0,1\n", 4, "outcomes"),
        ("# n=2 visibility=1 seed=0\ntrial,a,b,x,y\n0,0,1,1\n", 3, "5 fields"),
        ("# n=2 visibility=1 seed=0\ntrial,a,b,x,y\n0,0,one,1,1\n", 3, "non-integer"),
        ("# n=2 visibility=1 seed=0\ntrial,a,b,x,y\n0,4,1,1,1\n", 3, "label sets"),
        ("# n=2 seed=0\ntrial,a,b,x,y\n", 1, "visibility"),
        ("# n=2 visibility=1 seed=-1\ntrial,a,b,x,y\n", 1, "seed -1 outside"),
        ("# n=2 visibility=1 seed=18446744073709551616\ntrial,a,b,x,y\n", 1, "outside"),
    ],
)
def test_read_dataset_errors(tmp_path, body, line, message):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(DatasetParseError, match=message) as info:
        read_dataset(path)
    assert info.value.line == line
    assert info.value.path == str(path)


def test_calculate():
    resp = calculate(ExperimentRequest(n=8, visibility=0.98, trials=50000, seed=42, workers=2))
    assert resp.working["trials"] == 50000
    assert len(resp.working["terms"]) == 16
    assert resp.working["confidence_low"] <= resp.result <= resp.working["confidence_high"]
    assert resp.metadata["calculator_name"] == "experiment"
    with pytest.raises(ValueError):
        calculate({"n": 2, "visibility": 1.0, "trials": 10, "seed": -3})
