"""
# Chained Bell Experiment Simulator

## 📂 Description

[Description]
Seeded Monte Carlo simulation of the chained Bell experiment and estimation of
I_N from the recorded trials.
Each trial draws Alice's setting a and Bob's setting b uniformly and
independently, then samples outcomes (x, y) from the Born-rule table of the
Werner pair. I_N is estimated term by term with Wilson score intervals whose
endpoints are summed into a conservative interval for the total.
Also provides the lightcone relation between spacetime events (signal speed 1)
used to decide whether the two measurements are spacelike separated.

## 📂 Configuration

### Inputs

[inputs]
  - name: n
    type: integer
    required: true
    min: 1
    description: Number of measurement settings per party (N)

  - name: visibility
    type: number
    required: true
    min: 0.0
    max: 1.0
    description: Werner visibility of the simulated pair

  - name: trials
    type: integer
    required: true
    min: 1
    description: Number of simulated trials

  - name: seed
    type: integer
    required: true
    min: 0
    description: 64-bit generator seed

  - name: confidence_level
    type: number
    required: false
    description: Nominal level of the per-term Wilson intervals (default 0.95)

  - name: workers
    type: integer
    required: false
    min: 1
    description: Number of threads simulating trial-index shards (default 1)

### Outputs

[result]
  type: number
  description: Estimated I_N

[working]
  type: object
  description: Interval endpoints and per-term counts, successes and frequencies

[interpretation]
  type: string
  description: Whether the interval lies below the local bound of 1

[reference]
  type: string
  default: "Wilson score interval per term, endpoints summed"

[metadata]
  type: object
  fields:
    timestamp: string (ISO8601)
    version: string
    calculator_name: string

## 📂 Validation Rules
- seed must be in [0, 2^64)
- confidence_level must be in (0, 1)
- every I_N cell must contain at least one trial

## 📂 Usage (CLI)

>**CLI**:
  ```console
    chained-bell simulate --n 2 --visibility 1 --trials 100000 --seed 7 --out trials.csv
    chained-bell estimate --in trials.csv --confidence 0.95
  ```
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, TextIO, Tuple, Union

import numpy as np
from pydantic import Field
from scipy.stats import norm

from calculators.nonlocality import chain_terms
from calculators.quantum_core import (
  OUTCOMES,
  _check_n,
  _check_visibility,
  born_table,
  chained_family,
  entangled_state,
)
from core.errors import DatasetParseError, InsufficientDataError, InvalidParameterError
from core.metadata import build_metadata
from core.request.request import CalculatorRequest
from core.response.response import CalculationResponse
from core.serialize import format_real
from core.table import ConditionalTable

logger = logging.getLogger(__name__)

SEED_LIMIT = 2**64
DRAWS_PER_TRIAL = 3
CSV_HEADER = "trial,a,b,x,y"
_UNIT = 2.0**-53


class ExperimentRequest(CalculatorRequest):
  n: int = Field(..., ge=1, description="Settings per party (N)")
  visibility: float = Field(..., ge=0.0, le=1.0, description="Werner visibility v")
  trials: int = Field(..., ge=1, description="Number of trials")
  seed: int = Field(..., ge=0, lt=SEED_LIMIT, description="64-bit seed")
  confidence_level: float = Field(0.95, gt=0.0, lt=1.0, description="Wilson interval level")
  workers: int = Field(1, ge=1, description="Simulation threads")


# -- spacetime -----------------------------------------------------------------


@dataclass(frozen=True)
class SpacetimeEvent:
  t: float
  r: Tuple[float, float, float]

  def __post_init__(self) -> None:
    if len(self.r) != 3:
      raise InvalidParameterError(f"r must have 3 spatial coordinates, got {len(self.r)}")
    if not all(math.isfinite(c) for c in (self.t, *self.r)):
      raise InvalidParameterError(f"event coordinates must be finite: t={self.t}, r={self.r}")

  @classmethod
  def at(cls, t: float, r1: float = 0.0, r2: float = 0.0, r3: float = 0.0) -> "SpacetimeEvent":
    return cls(float(t), (float(r1), float(r2), float(r3)))


def lightcone_ordered(e1: SpacetimeEvent, e2: SpacetimeEvent) -> bool:
  """e1 ⇝ e2: e1 lies in the backward lightcone of e2."""
  dt = e2.t - e1.t
  dr2 = sum((a - b) ** 2 for a, b in zip(e2.r, e1.r))
  return dt >= 0 and dt * dt >= dr2


def spacelike_separated(
  pair_a: Tuple[SpacetimeEvent, SpacetimeEvent],
  pair_b: Tuple[SpacetimeEvent, SpacetimeEvent],
) -> bool:
  """Each pair is (input, output); neither input reaches the other side's output."""
  a_in, x_out = pair_a
  b_in, y_out = pair_b
  if not lightcone_ordered(a_in, x_out):
    raise InvalidParameterError("first pair is not time-ordered: input must precede its output")
  if not lightcone_ordered(b_in, y_out):
    raise InvalidParameterError("second pair is not time-ordered: input must precede its output")
  return not lightcone_ordered(a_in, y_out) and not lightcone_ordered(b_in, x_out)


# -- datasets -----------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
  trial_index: int
  a: int
  b: int
  x: int
  y: int


@dataclass(frozen=True, eq=False)
class TrialDataset:
  """Trial columns as int64 arrays; ``records()`` yields them row by row."""

  n: int
  visibility: float
  seed: int
  trial: np.ndarray
  a: np.ndarray
  b: np.ndarray
  x: np.ndarray
  y: np.ndarray

  def __post_init__(self) -> None:
    _check_n(self.n)
    _check_visibility(self.visibility)
    lengths = {len(c) for c in (self.trial, self.a, self.b, self.x, self.y)}
    if len(lengths) != 1:
      raise InvalidParameterError(f"trial columns have different lengths {sorted(lengths)}")
    if self.a.size and (np.any(self.a % 2 != 0) or self.a.min() < 0 or self.a.max() > 2 * self.n - 2):
      raise InvalidParameterError(f"Alice's settings must be in {{0,2,...,{2 * self.n - 2}}}")
    if self.b.size and (np.any(self.b % 2 != 1) or self.b.min() < 1 or self.b.max() > 2 * self.n - 1):
      raise InvalidParameterError(f"Bob's settings must be in {{1,3,...,{2 * self.n - 1}}}")
    for name in ("x", "y"):
      col = getattr(self, name)
      if not np.all(np.isin(col, OUTCOMES)):
        raise InvalidParameterError(f"outcome {name} must be +1 or -1")
    for col in (self.trial, self.a, self.b, self.x, self.y):
      col.setflags(write=False)

  def __len__(self) -> int:
    return int(self.trial.size)

  def __eq__(self, other: object) -> bool:
    if not isinstance(other, TrialDataset):
      return NotImplemented
    return (
      self.n == other.n
      and self.visibility == other.visibility
      and self.seed == other.seed
      and all(
        np.array_equal(getattr(self, c), getattr(other, c)) for c in ("trial", "a", "b", "x", "y")
      )
    )

  def records(self) -> Iterator[TrialRecord]:
    for row in zip(self.trial.tolist(), self.a.tolist(), self.b.tolist(), self.x.tolist(), self.y.tolist()):
      yield TrialRecord(*row)

  @classmethod
  def from_records(cls, n: int, visibility: float, seed: int, records: List[TrialRecord]) -> "TrialDataset":
    cols = np.array(
      [(r.trial_index, r.a, r.b, r.x, r.y) for r in records], dtype=np.int64
    ).reshape(-1, 5)
    return cls(n, visibility, seed, *(np.ascontiguousarray(cols[:, i]) for i in range(5)))


# -- simulation -----------------------------------------------------------------


def _check_seed(seed: int) -> None:
  if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or not 0 <= seed < SEED_LIMIT:
    raise InvalidParameterError(f"seed must be an integer in [0, 2^64), got {seed!r}")


def _stream(seed: int, start: int) -> np.random.PCG64:
  # trial t consumes raw draws 3t, 3t+1, 3t+2 of one PCG64 stream
  bitgen = np.random.PCG64(np.random.SeedSequence(int(seed)))
  return bitgen.advance(DRAWS_PER_TRIAL * start)


def sample_table(
  table: ConditionalTable,
  seed: int,
  start: int,
  count: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
  """Index columns (a, b, x, y) for trials [start, start+count) of a bipartite table.

  Inputs are drawn uniformly by raw % cardinality and the joint outcome by
  inverting the (x, y) CDF with a 53-bit uniform, so the result depends only
  on integer arithmetic of the generator output.
  """
  if len(table.input_axes) != 2 or len(table.output_axes) != 2:
    raise InvalidParameterError("sampling needs an (A,B)->(X,Y) table")
  _check_seed(seed)
  if start < 0 or count < 0:
    raise InvalidParameterError(f"shard must have start >= 0 and count >= 0, got ({start}, {count})")
  na, nb, dx, dy = table.shape
  raw = _stream(seed, start).random_raw(DRAWS_PER_TRIAL * count).reshape(count, DRAWS_PER_TRIAL)
  a_idx = (raw[:, 0] % np.uint64(na)).astype(np.int64)
  b_idx = (raw[:, 1] % np.uint64(nb)).astype(np.int64)
  u = (raw[:, 2] >> np.uint64(11)).astype(np.float64) * _UNIT
  cdf = np.cumsum(table.normalized().probabilities.reshape(na, nb, dx * dy), axis=-1)
  cell_cdf = cdf[a_idx, b_idx]
  outcome = np.minimum((cell_cdf <= u[:, None]).sum(axis=1), dx * dy - 1)
  return a_idx, b_idx, outcome // dy, outcome % dy


def simulate_shard(n: int, visibility: float, seed: int, start: int, count: int) -> TrialDataset:
  """Trials [start, start+count) of the sequential stream for (n, visibility, seed)."""
  _check_n(n)
  _check_visibility(visibility)
  family = chained_family(n)
  table = born_table(entangled_state(visibility), family)
  a_idx, b_idx, x_idx, y_idx = sample_table(table, seed, start, count)
  outcomes = np.asarray(OUTCOMES, dtype=np.int64)
  return TrialDataset(
    n=int(n),
    visibility=float(visibility),
    seed=int(seed),
    trial=np.arange(start, start + count, dtype=np.int64),
    a=2 * a_idx,
    b=2 * b_idx + 1,
    x=outcomes[x_idx],
    y=outcomes[y_idx],
  )


def _shards(trials: int, workers: int) -> List[Tuple[int, int]]:
  size = -(-trials // workers)
  return [(s, min(size, trials - s)) for s in range(0, trials, size)]


def simulate(n: int, visibility: float, trials: int, seed: int, workers: int = 1) -> TrialDataset:
  _check_n(n)
  _check_visibility(visibility)
  _check_seed(seed)
  if isinstance(trials, bool) or not isinstance(trials, (int, np.integer)) or trials < 1:
    raise InvalidParameterError(f"trials must be an integer >= 1, got {trials!r}")
  if workers < 1:
    raise InvalidParameterError(f"workers must be >= 1, got {workers!r}")
  if workers == 1:
    return simulate_shard(n, visibility, seed, 0, trials)
  shards = _shards(int(trials), int(workers))
  logger.debug("simulating %d trials in %d shards", trials, len(shards))
  with ThreadPoolExecutor(max_workers=workers) as pool:
    parts = list(pool.map(lambda s: simulate_shard(n, visibility, seed, *s), shards))
  return TrialDataset(
    int(n),
    float(visibility),
    int(seed),
    *(np.concatenate([getattr(p, c) for p in parts]) for c in ("trial", "a", "b", "x", "y")),
  )


# -- estimation -----------------------------------------------------------------


@dataclass(frozen=True)
class TermEstimate:
  count: int
  successes: int
  point: float
  low: float
  high: float


@dataclass(frozen=True)
class ChainedEstimate:
  i_n_hat: float
  per_term: Dict[Tuple[str, int, int], TermEstimate]
  confidence_low: float
  confidence_high: float
  confidence_level: float
  trials: int

  def to_dict(self) -> Dict[str, Any]:
    return {
      "i_n_hat": self.i_n_hat,
      "confidence_low": self.confidence_low,
      "confidence_high": self.confidence_high,
      "confidence_level": self.confidence_level,
      "trials": self.trials,
      "terms": [
        {"kind": kind, "a": a, "b": b, **vars(term)} for (kind, a, b), term in self.per_term.items()
      ],
    }


def wilson_interval(successes: int, count: int, confidence_level: float) -> Tuple[float, float]:
  if count < 1:
    raise InvalidParameterError("Wilson interval needs at least one trial")
  z = float(norm.ppf(1.0 - (1.0 - confidence_level) / 2.0))
  p = successes / count
  z2n = z * z / count
  centre = (p + z2n / 2.0) / (1.0 + z2n)
  half = z / (1.0 + z2n) * math.sqrt(p * (1.0 - p) / count + z2n / (4.0 * count))
  return max(0.0, centre - half), min(1.0, centre + half)


def estimate(dataset: TrialDataset, confidence_level: float = 0.95) -> ChainedEstimate:
  """Per-term frequencies of I_N with Wilson intervals; interval endpoints are summed."""
  if not (0.0 < confidence_level < 1.0):
    raise InvalidParameterError(f"confidence_level must be in (0, 1), got {confidence_level!r}")
  if len(dataset) == 0:
    raise InsufficientDataError(None, "the dataset is empty")
  n = dataset.n
  cell = (dataset.a // 2) * n + (dataset.b - 1) // 2
  counts = np.bincount(cell, minlength=n * n)
  equal = np.bincount(cell, weights=(dataset.x == dataset.y), minlength=n * n).astype(np.int64)
  per_term: Dict[Tuple[str, int, int], TermEstimate] = {}
  total = low = high = 0.0
  for kind, a, b in chain_terms(n):
    k = (a // 2) * n + (b - 1) // 2
    m = int(counts[k])
    if m == 0:
      raise InsufficientDataError((a, b))
    s = int(equal[k]) if kind == "equal" else m - int(equal[k])
    lo, hi = wilson_interval(s, m, confidence_level)
    point = s / m
    per_term[(kind, a, b)] = TermEstimate(m, s, point, lo, hi)
    total += point
    low += lo
    high += hi
  return ChainedEstimate(total, per_term, low, high, float(confidence_level), len(dataset))


# -- CSV -------------------------------------------------------------------------


def dataset_csv_header(dataset: TrialDataset) -> str:
  return (
    f"# n={dataset.n} visibility={format_real(dataset.visibility)} seed={dataset.seed}\n"
    f"{CSV_HEADER}\n"
  )


def dump_dataset(dataset: TrialDataset, fh: TextIO) -> None:
  columns = np.column_stack([dataset.trial, dataset.a, dataset.b, dataset.x, dataset.y])
  fh.write(dataset_csv_header(dataset))
  np.savetxt(fh, columns, fmt="%d", delimiter=",")


def write_dataset(dataset: TrialDataset, path: Union[str, Path]) -> None:
  with open(path, "w", encoding="utf-8", newline="\n") as fh:
    dump_dataset(dataset, fh)


def _parse_metadata(line: str, path: str) -> Tuple[int, float, int]:
  if not line.startswith("#"):
    raise DatasetParseError("missing '# n=... visibility=... seed=...' metadata line", line=1, path=path)
  fields: Dict[str, str] = {}
  for token in line[1:].split():
    key, sep, value = token.partition("=")
    if not sep:
      raise DatasetParseError(f"metadata token {token!r} is not key=value", line=1, path=path)
    fields[key] = value
  missing = [k for k in ("n", "visibility", "seed") if k not in fields]
  if missing:
    raise DatasetParseError(f"metadata line lacks {', '.join(missing)}", line=1, path=path)
  try:
    n, visibility, seed = int(fields["n"]), float(fields["visibility"]), int(fields["seed"])
  except ValueError as e:
    raise DatasetParseError(f"bad metadata value: {e}", line=1, path=path) from None
  if not 0 <= seed < SEED_LIMIT:
    raise DatasetParseError(f"seed {seed} outside [0, 2^64)", line=1, path=path)
  return n, visibility, seed


def read_dataset(path: Union[str, Path]) -> TrialDataset:
  where = str(path)
  with open(path, encoding="utf-8") as fh:
    lines = fh.read().splitlines()
  if not lines:
    raise DatasetParseError("empty dataset file", line=1, path=where)
  n, visibility, seed = _parse_metadata(lines[0].strip(), where)
  if len(lines) < 2 or lines[1].strip() != CSV_HEADER:
    raise DatasetParseError(f"expected header {CSV_HEADER!r}", line=2, path=where)
  rows: List[Tuple[int, ...]] = []
  for lineno, raw in enumerate(lines[2:], start=3):
    if not raw.strip():
      continue
    parts = raw.split(",")
    if len(parts) != 5:
      raise DatasetParseError(f"expected 5 fields, got {len(parts)}", line=lineno, path=where)
    try:
      row = tuple(int(p) for p in parts)
    except ValueError:
      raise DatasetParseError(f"non-integer field in {raw!r}", line=lineno, path=where) from None
    if row[3] not in OUTCOMES or row[4] not in OUTCOMES:
      raise DatasetParseError(f"outcomes must be +1 or -1, got {raw!r}", line=lineno, path=where)
    if row[1] not in range(0, 2 * n, 2) or row[2] not in range(1, 2 * n, 2):
      raise DatasetParseError(f"setting outside the N={n} label sets in {raw!r}", line=lineno, path=where)
    rows.append(row)
  cols = np.array(rows, dtype=np.int64).reshape(-1, 5)
  try:
    return TrialDataset(n, visibility, seed, *(np.ascontiguousarray(cols[:, i]) for i in range(5)))
  except InvalidParameterError as e:
    raise DatasetParseError(str(e), line=1, path=where) from None


# -- calculator entry point ------------------------------------------------------


def calculate(params: ExperimentRequest | dict) -> CalculationResponse:
  """Simulate a dataset and estimate I_N from it."""
  req = params if isinstance(params, ExperimentRequest) else ExperimentRequest(**params)
  dataset = simulate(req.n, req.visibility, req.trials, req.seed, req.workers)
  est = estimate(dataset, req.confidence_level)
  if est.confidence_high < 1.0:
    interp = f"I_N interval [{est.confidence_low:.4g}, {est.confidence_high:.4g}] lies below the local bound 1"
  else:
    interp = f"I_N interval [{est.confidence_low:.4g}, {est.confidence_high:.4g}] does not exclude local models"
  return CalculationResponse(
    result=est.i_n_hat,
    working=est.to_dict(),
    interpretation=interp,
    reference="Wilson score interval per term, endpoints summed",
    metadata=build_metadata("experiment", seed=req.seed, trials=req.trials),
    tags=["monte carlo", "wilson interval", "chained bell", "seeded"],
  )
