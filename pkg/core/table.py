"""Finite conditional distributions P(outputs | inputs) over labelled axes.

A ``ConditionalTable`` is the carrier for every behaviour the package
handles: P_{X|A}, P_{XY|AB} and the extended P_{XYZ|ABC}. Probabilities are a
dense numpy array indexed ``(inputs..., outputs...)`` in axis order.

Tables are stored exactly as ingested (after range and normalisation checks
at ``NORMALIZATION_TOL``) so that serialisation round-trips bit for bit;
analysis code works on :meth:`ConditionalTable.normalized`, which clips to
[0, 1] and renormalises every input slice.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from core.errors import DatasetParseError, InvalidParameterError
from core.serialize import dumps, format_real

Label = Union[int, str]

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class Axis:
    name: str
    labels: Tuple[Label, ...]

    def __post_init__(self) -> None:
        if not self.labels:
            raise InvalidParameterError(f"axis {self.name!r} has no labels")
        if len(set(self.labels)) != len(self.labels):
            raise InvalidParameterError(f"axis {self.name!r} has duplicate labels {self.labels}")

    @property
    def cardinality(self) -> int:
        return len(self.labels)

    def index(self, label: Label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InvalidParameterError(
                f"label {label!r} is not on axis {self.name!r} (labels {list(self.labels)})"
            ) from None

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "labels": list(self.labels)}


def axis(name: str, labels: Iterable[Label]) -> Axis:
    return Axis(name, tuple(labels))


@dataclass(frozen=True, eq=False)
class ConditionalTable:
    input_axes: Tuple[Axis, ...]
    output_axes: Tuple[Axis, ...]
    probabilities: np.ndarray
    normalization_violation: float = field(default=0.0)

    @classmethod
    def from_array(
        cls,
        input_axes: Sequence[Axis],
        output_axes: Sequence[Axis],
        probabilities: Any,
        tol: float = NORMALIZATION_TOL,
    ) -> "ConditionalTable":
        input_axes = tuple(input_axes)
        output_axes = tuple(output_axes)
        names = [a.name for a in input_axes + output_axes]
        if len(set(names)) != len(names):
            raise InvalidParameterError(f"axis names must be distinct, got {names}")
        shape = tuple(a.cardinality for a in input_axes + output_axes)
        p = np.array(probabilities, dtype=float)
        if p.size != int(np.prod(shape)):
            raise InvalidParameterError(
                f"probabilities have {p.size} entries, axes require {int(np.prod(shape))}"
            )
        p = p.reshape(shape)
        if not np.all(np.isfinite(p)):
            raise InvalidParameterError("probabilities must be finite")
        if p.min() < -tol or p.max() > 1 + tol:
            raise InvalidParameterError(
                f"probabilities must lie in [0, 1]; found range [{p.min()!r}, {p.max()!r}]"
            )
        out_axes = tuple(range(len(input_axes), p.ndim))
        sums = p.sum(axis=out_axes) if out_axes else np.ones(())
        violation = float(np.max(np.abs(sums - 1.0))) if np.size(sums) else 0.0
        if violation > tol:
            worst = np.unravel_index(int(np.argmax(np.abs(sums - 1.0))), np.shape(sums))
            where = {a.name: a.labels[i] for a, i in zip(input_axes, worst)}
            raise InvalidParameterError(
                f"slice {where} sums to {float(np.asarray(sums)[worst])!r}, expected 1 within {tol}"
            )
        p.setflags(write=False)
        return cls(input_axes, output_axes, p, violation)

    # -- structure -------------------------------------------------------

    @property
    def input_names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.input_axes)

    @property
    def output_names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.output_axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.probabilities.shape

    def input_axis(self, name: str) -> Axis:
        for a in self.input_axes:
            if a.name == name:
                return a
        raise InvalidParameterError(f"no input axis {name!r} (inputs {list(self.input_names)})")

    def output_axis(self, name: str) -> Axis:
        for a in self.output_axes:
            if a.name == name:
                return a
        raise InvalidParameterError(f"no output axis {name!r} (outputs {list(self.output_names)})")

    def normalized(self) -> "ConditionalTable":
        """Copy clipped to [0, 1] with every input slice summing to exactly 1."""
        p = np.clip(np.array(self.probabilities, dtype=float), 0.0, 1.0)
        out_axes = tuple(range(len(self.input_axes), p.ndim))
        if out_axes:
            p = p / p.sum(axis=out_axes, keepdims=True)
        p.setflags(write=False)
        return ConditionalTable(self.input_axes, self.output_axes, p, self.normalization_violation)

    def conditional(self, inputs: Mapping[str, Label]) -> np.ndarray:
        """Distribution over all outputs for one full input assignment."""
        missing = set(self.input_names) - set(inputs)
        if missing:
            raise InvalidParameterError(f"missing input labels for {sorted(missing)}")
        idx = tuple(a.index(inputs[a.name]) for a in self.input_axes)
        return self.probabilities[idx]

    def marginal(self, outputs: Sequence[str]) -> "ConditionalTable":
        """Sum out every output axis not listed in ``outputs`` (order as given)."""
        keep = [self.output_names.index(self.output_axis(name).name) for name in outputs]
        if len(set(keep)) != len(keep):
            raise InvalidParameterError(f"duplicate output axes in {list(outputs)}")
        n_in = len(self.input_axes)
        drop = tuple(n_in + i for i in range(len(self.output_axes)) if i not in keep)
        p = self.probabilities.sum(axis=drop) if drop else np.array(self.probabilities)
        # remaining output axes are in original order; permute to the requested one
        remaining = sorted(keep)
        perm = list(range(n_in)) + [n_in + remaining.index(i) for i in keep]
        p = np.transpose(p, perm)
        axes = tuple(self.output_axes[i] for i in keep)
        p.setflags(write=False)
        return ConditionalTable(self.input_axes, axes, p, self.normalization_violation)

    def fix_input(self, name: str, label: Label) -> "ConditionalTable":
        """Restrict to one label of an input axis and drop that axis."""
        pos = self.input_names.index(self.input_axis(name).name)
        p = np.take(self.probabilities, self.input_axes[pos].index(label), axis=pos)
        p.setflags(write=False)
        axes = self.input_axes[:pos] + self.input_axes[pos + 1:]
        return ConditionalTable(axes, self.output_axes, p, self.normalization_violation)

    def allclose(self, other: "ConditionalTable", atol: float = 1e-12) -> bool:
        return (
            self.input_axes == other.input_axes
            and self.output_axes == other.output_axes
            and bool(np.allclose(self.probabilities, other.probabilities, rtol=0.0, atol=atol))
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConditionalTable):
            return NotImplemented
        return (
            self.input_axes == other.input_axes
            and self.output_axes == other.output_axes
            and bool(np.array_equal(self.probabilities, other.probabilities))
        )

    __hash__ = None  # type: ignore[assignment]

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "input_axes": [a.to_dict() for a in self.input_axes],
            "output_axes": [a.to_dict() for a in self.output_axes],
            "probabilities": [float(v) for v in self.probabilities.ravel()],
        }

    def to_json(self, indent: int | None = None) -> str:
        return dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "ConditionalTable":
        try:
            ins = [axis(str(a["name"]), a["labels"]) for a in payload["input_axes"]]
            outs = [axis(str(a["name"]), a["labels"]) for a in payload["output_axes"]]
            probs = payload["probabilities"]
        except (KeyError, TypeError) as e:
            raise DatasetParseError(f"table JSON is missing field {e}") from None
        return cls.from_array(ins, outs, probs)

    @classmethod
    def from_json(cls, text: str) -> "ConditionalTable":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            raise DatasetParseError(f"invalid JSON: {e.msg}", line=e.lineno) from None
        if not isinstance(payload, dict):
            raise DatasetParseError("table JSON must be an object")
        return cls.from_dict(payload)

    def to_csv(self) -> str:
        """One row per full index tuple: input labels, output labels, probability."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([*self.input_names, *self.output_names, "probability"])
        axes = self.input_axes + self.output_axes
        for idx in itertools.product(*(range(a.cardinality) for a in axes)):
            labels: List[Any] = [a.labels[i] for a, i in zip(axes, idx)]
            writer.writerow([*labels, format_real(self.probabilities[idx])])
        return buf.getvalue()


def read_table(path: Union[str, Path]) -> ConditionalTable:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DatasetParseError(f"cannot read table: {e.strerror}", path=str(path)) from None
    try:
        return ConditionalTable.from_json(text)
    except DatasetParseError as e:
        raise DatasetParseError(e.message, line=e.line, path=str(path)) from None


def write_table(table: ConditionalTable, path: Union[str, Path]) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_text(table.to_csv(), encoding="utf-8")
    else:
        path.write_text(table.to_json(indent=2) + "\n", encoding="utf-8")
