from __future__ import annotations

import pytest

from core.errors import CalculatorNotFoundError
from core.loader import (
    InputField,
    available_calculators,
    load_calculator,
    parse_inputs,
    read_header,
    section_lines,
)

HEADER = """# Toy

[Description]
First line.
Second line.

## Configuration

[inputs]
  - name: n
    type: integer
    required: true
    min: 1
    description: Settings per party

  - name: mode
    type: string
    enum: ["single", "scan"]

[result]
  type: number
"""


def test_every_calculator_is_listed_with_its_title():
    calcs = available_calculators()
    assert set(calcs) == {"analysis", "experiment", "lp_adversary", "nonlocality", "quantum_core"}
    assert calcs["quantum_core"] == "Chained Bell Correlations"
    assert all(title for title in calcs.values())


def test_headers_declare_inputs_and_outputs():
    for name in available_calculators():
        header = read_header(name)
        assert header.description
        assert header.inputs
        assert {"inputs", "result", "working", "reference"} <= set(header.sections)


def test_experiment_inputs_in_declaration_order():
    fields = read_header("experiment").inputs
    assert [f.name for f in fields] == ["n", "visibility", "trials", "seed", "confidence_level", "workers"]
    visibility = fields[1]
    assert visibility.required is True
    assert (visibility.minimum, visibility.maximum) == (0.0, 1.0)
    assert visibility.summary()["max"] == 1.0


def test_parse_inputs():
    fields = parse_inputs(HEADER)
    assert fields == [
        InputField(name="n", type="integer", required=True, min=1, description="Settings per party"),
        InputField(name="mode", type="string", enum=["single", "scan"]),
    ]
    assert fields[1].summary() == {
        "name": "mode",
        "type": "string",
        "required": False,
        "enum": ["single", "scan"],
        "description": "",
    }


def test_section_lines_stop_at_next_heading():
    assert [line for line in section_lines(HEADER, "description") if line] == ["First line.", "Second line."]
    assert section_lines(HEADER, "result") == ["type: number"]
    assert section_lines(HEADER, "missing") == []


def test_unknown_header_key_is_rejected():
    with pytest.raises(ValueError, match="unit"):
        parse_inputs("[inputs]\n- name: n\n  unit: kg\n")


def test_load_calculator():
    module = load_calculator("analysis")
    assert module.calculate({"visibility": 0.98}).result["optimal_n"] == 8


@pytest.mark.parametrize("name", ["no_such_calculator", "../core/loader", ""])
def test_unknown_calculator(name):
    with pytest.raises(CalculatorNotFoundError, match="not found") as info:
        load_calculator(name)
    assert info.value.name == name
    with pytest.raises(CalculatorNotFoundError):
        read_header(name)
