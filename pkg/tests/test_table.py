from __future__ import annotations

import numpy as np
import pytest

from calculators.quantum_core import born_table, chained_family, entangled_state
from core.errors import DatasetParseError, InvalidParameterError
from core.table import ConditionalTable, axis, read_table, write_table


def small_table():
    p = np.array(
        [
            [[0.1, 0.2], [0.3, 0.4]],
            [[0.25, 0.25], [0.0, 0.5]],
        ]
    )
    return ConditionalTable.from_array([axis("A", (0, 1))], [axis("X", ("u", "d")), axis("Y", (1, -1))], p)


def test_from_array_shape_and_names():
    t = small_table()
    assert t.shape == (2, 2, 2)
    assert t.input_names == ("A",)
    assert t.output_names == ("X", "Y")
    assert t.normalization_violation <= 1e-15


def test_from_array_rejects_out_of_range():
    with pytest.raises(InvalidParameterError, match=r"\[0, 1\]"):
        ConditionalTable.from_array([axis("A", (0,))], [axis("X", (0, 1))], [[1.5, -0.5]])


def test_from_array_names_unnormalised_slice():
    with pytest.raises(InvalidParameterError, match="'A': 1"):
        ConditionalTable.from_array([axis("A", (0, 1))], [axis("X", (0, 1))], [[0.5, 0.5], [0.5, 0.4]])


def test_from_array_rejects_bad_axes():
    with pytest.raises(InvalidParameterError, match="distinct"):
        ConditionalTable.from_array([axis("A", (0,))], [axis("A", (0, 1))], [0.5, 0.5])
    with pytest.raises(InvalidParameterError, match="entries"):
        ConditionalTable.from_array([axis("A", (0,))], [axis("X", (0, 1))], [0.2, 0.3, 0.5])
    with pytest.raises(InvalidParameterError, match="duplicate"):
        axis("X", (0, 0))


def test_small_violation_is_recorded_and_normalised_away():
    t = ConditionalTable.from_array([axis("A", (0,))], [axis("X", (0, 1))], [[0.5, 0.5 + 5e-10]])
    assert t.normalization_violation == pytest.approx(5e-10, rel=1e-3)
    assert t.normalized().probabilities.sum() == pytest.approx(1.0, abs=1e-15)


def test_marginal_keeps_requested_order():
    t = small_table()
    y = t.marginal(["Y"]).probabilities
    assert np.allclose(y, [[0.4, 0.6], [0.25, 0.75]])
    swapped = t.marginal(["Y", "X"])
    assert swapped.output_names == ("Y", "X")
    assert swapped.probabilities[0, 0, 1] == pytest.approx(0.3)
    with pytest.raises(InvalidParameterError, match="duplicate"):
        t.marginal(["X", "X"])
    with pytest.raises(InvalidParameterError, match="no output axis"):
        t.marginal(["Z"])


def test_fix_input_and_conditional():
    t = small_table()
    fixed = t.fix_input("A", 1)
    assert fixed.input_names == ()
    assert np.array_equal(fixed.probabilities, t.conditional({"A": 1}))
    with pytest.raises(InvalidParameterError, match="not on axis"):
        t.conditional({"A": 7})
    with pytest.raises(InvalidParameterError, match="missing"):
        t.conditional({})


def test_json_round_trip_is_exact():
    q = born_table(entangled_state(0.93), chained_family(3))
    back = ConditionalTable.from_json(q.to_json())
    assert back == q
    assert back.input_axes[0].labels == (0, 2, 4)


def test_from_json_reports_line():
    with pytest.raises(DatasetParseError) as info:
        ConditionalTable.from_json('{\n  "input_axes": [,\n}')
    assert info.value.line == 2


def test_from_json_missing_field():
    with pytest.raises(DatasetParseError, match="missing field"):
        ConditionalTable.from_json('{"input_axes": []}')


def test_read_and_write_table(tmp_path):
    q = born_table(entangled_state(1.0), chained_family(2))
    path = tmp_path / "q.json"
    write_table(q, path)
    assert read_table(path) == q

    csv_path = tmp_path / "q.csv"
    write_table(q, csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "A,B,X,Y,probability"
    assert len(lines) == 1 + 16


def test_read_table_errors_carry_path(tmp_path):
    missing = tmp_path / "nope.json"
    with pytest.raises(DatasetParseError, match="nope.json"):
        read_table(missing)
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(DatasetParseError, match="must be an object") as info:
        read_table(bad)
    assert info.value.path == str(bad)
