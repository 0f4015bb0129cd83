"""
# Extension Adversary

## 📂 Description

[Description]
Search all non-signalling extensions P(x, y, z | a, b) of a bipartite
distribution q(x, y | a, b) for the one whose outcome Z best predicts Alice's
outcome X, by linear programming.
Maximises p_x·(P_{Z|a,x}(0) − P_{Z|a}(0)) for a target (a, x) with binary Z,
subject to Σ_z P = q and the non-signalling constraints on (X, Z) and (Y, Z).
Reports the extremal prediction distance D(P_{Z|ax}, P_{Z|a}), the optimal
extension table and a dual optimality certificate, and asserts the distance
stays within I_N(q).

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
    description: Werner visibility of the pair generating q

  - name: target_a
    type: integer
    required: true
    description: Alice's setting a ∈ {0, 2, …, 2N−2}

  - name: target_x
    type: integer
    enum: [1, -1]
    required: true
    description: Alice's outcome to predict

### Outputs

[result]
  type: number
  description: Maximal prediction distance D(P_Z|ax, P_Z|a)

[working]
  type: object
  description: I_N(q), p_x, LP size, primal/dual objectives and certificate gaps

[interpretation]
  type: string
  description: Distance compared with the I_N bound

[reference]
  type: string
  default: "D(P_Z|abcx, P_Z|abc) <= I_N(P_XY|AB)"

[metadata]
  type: object
  fields:
    timestamp: string (ISO8601)
    version: string
    calculator_name: string

## 📂 Validation Rules
- target_a must be one of Alice's labels for the given n
- target_x must be +1 or −1 and have positive probability under q
- q must be non-signalling within 1e-9

## 📂 Usage (CLI)

>**CLI**:
  ```console
    chained-bell adversary --n 4 --visibility 1 --target-a 0 --target-x 1
  ```
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import Field, root_validator

from calculators.nonlocality import check_nonsignalling, i_n_of_table
from calculators.quantum_core import OUTCOMES, born_table, chained_family, entangled_state
from core.errors import BoundViolationError, InvalidParameterError, PreconditionViolatedError
from core.metadata import build_metadata
from core.request.request import CalculatorRequest
from core.response.response import CalculationResponse
from core.simplex import (
  CERTIFICATE_TOL,
  DualCertificate,
  LinearProgram,
  SimplexOptions,
  check_certificate,
  solve,
)
from core.table import ConditionalTable, Label, axis

logger = logging.getLogger(__name__)

Z_CARDINALITY = 2
BOUND_SLACK = 1e-7
RESULT_NS_TOL = 1e-8
DEGENERATE_TARGET = 1e-12
NEGATIVE_OPTIMUM_TOL = 1e-9


class AdversaryRequest(CalculatorRequest):
  n: int = Field(..., ge=1, description="Settings per party (N)")
  visibility: float = Field(..., ge=0.0, le=1.0, description="Werner visibility v")
  target_a: int = Field(..., description="Alice's setting")
  target_x: int = Field(..., description="Alice's outcome, +1 or -1")
  all_targets: bool = Field(False, description="Sweep every (a, x) instead of one target")

  @root_validator(skip_on_failure=True)
  def validate_target(cls, values):
    n, a, x = values.get("n"), values.get("target_a"), values.get("target_x")
    if a not in range(0, 2 * n, 2):
      raise ValueError(f"target_a must be one of {list(range(0, 2 * n, 2))}")
    if x not in OUTCOMES:
      raise ValueError("target_x must be +1 or -1")
    return values


@dataclass(frozen=True, eq=False)
class AdversaryResult:
  optimal_table: ConditionalTable
  target: Tuple[Label, Label]
  prediction_distance: float
  certificate: DualCertificate
  p_x: float
  i_n: Optional[float]
  lp: LinearProgram
  solution: np.ndarray

  def summary(self) -> Dict[str, Any]:
    cert = self.certificate
    return {
      "target_a": self.target[0],
      "target_x": self.target[1],
      "prediction_distance": self.prediction_distance,
      "i_n": self.i_n,
      "p_x": self.p_x,
      "variables": self.lp.variable_count,
      "rows": self.lp.row_count,
      "iterations": cert.iterations,
      "primal_objective": cert.primal_objective,
      "dual_objective": cert.dual_objective,
      "duality_gap": cert.duality_gap,
      "complementary_slackness_gap": cert.complementary_slackness_gap,
      "dual_infeasibility": cert.dual_infeasibility,
    }


class _Indexer:
  """Flat variable index of P(x, y, z | a, b)."""

  def __init__(self, na: int, nb: int, dx: int, dy: int, dz: int):
    self.shape = (na, nb, dx, dy, dz)
    self.size = int(np.prod(self.shape))

  def __call__(self, a: int, b: int, x: int, y: int, z: int) -> int:
    return int(np.ravel_multi_index((a, b, x, y, z), self.shape))


def _prepare(q: ConditionalTable) -> ConditionalTable:
  if len(q.input_axes) != 2 or len(q.output_axes) != 2:
    raise InvalidParameterError("the adversary needs an (A,B)->(X,Y) table")
  report = check_nonsignalling(q, 1e-9)
  if not report.holds:
    raise PreconditionViolatedError(
      f"q is signalling (violation {report.max_violation:.3g}): {report.violating_constraint}",
      constraint=report.violating_constraint,
    )
  return q.normalized()


def _target_marginal(q: ConditionalTable, target_a: Label, target_x: Label) -> float:
  ai = q.input_axes[0].index(target_a)
  xi = q.output_axes[0].index(target_x)
  # b-independent by non-signalling; read at the first B label
  return float(q.probabilities[ai, 0, xi, :].sum())


def build_adversary_lp(
  q: ConditionalTable,
  z_cardinality: int,
  target_a: Label,
  target_x: Label,
) -> LinearProgram:
  """LP over the entries of P(x, y, z | a, b) with |C| = 1.

  Rows: normalisation per (a, b); Σ_z P = q; (X,Z) rows across b and (Y,Z)
  rows across a for the first Z outcome (the second follows from Σ_z P = q and
  q's own non-signalling).
  """
  if z_cardinality != Z_CARDINALITY:
    raise InvalidParameterError(f"the adversary LP supports z_cardinality=2 only, got {z_cardinality}")
  q = _prepare(q)
  p_x = _target_marginal(q, target_a, target_x)
  if p_x < DEGENERATE_TARGET:
    raise InvalidParameterError(
      f"target outcome {target_x!r} at a={target_a!r} has probability {p_x:.3g}; nothing to predict"
    )
  na, nb, dx, dy = q.shape
  dz = z_cardinality
  idx = _Indexer(na, nb, dx, dy, dz)
  rows: List[int] = []
  cols: List[int] = []
  vals: List[float] = []
  rhs: List[float] = []

  def add_row(entries: List[Tuple[int, float]], value: float) -> None:
    r = len(rhs)
    for col, coef in entries:
      rows.append(r)
      cols.append(col)
      vals.append(coef)
    rhs.append(value)

  for a in range(na):
    for b in range(nb):
      add_row([(idx(a, b, x, y, z), 1.0) for x in range(dx) for y in range(dy) for z in range(dz)], 1.0)
  for a in range(na):
    for b in range(nb):
      for x in range(dx):
        for y in range(dy):
          add_row([(idx(a, b, x, y, z), 1.0) for z in range(dz)], float(q.probabilities[a, b, x, y]))
  for a in range(na):
    for x in range(dx):
      for b in range(1, nb):
        add_row(
          [(idx(a, b, x, y, 0), 1.0) for y in range(dy)] + [(idx(a, 0, x, y, 0), -1.0) for y in range(dy)],
          0.0,
        )
  for b in range(nb):
    for y in range(dy):
      for a in range(1, na):
        add_row(
          [(idx(a, b, x, y, 0), 1.0) for x in range(dx)] + [(idx(0, b, x, y, 0), -1.0) for x in range(dx)],
          0.0,
        )

  ai = q.input_axes[0].index(target_a)
  xi = q.output_axes[0].index(target_x)
  objective = np.zeros(idx.size)
  for x in range(dx):
    for y in range(dy):
      objective[idx(ai, 0, x, y, 0)] -= p_x
  for y in range(dy):
    objective[idx(ai, 0, xi, y, 0)] += 1.0
  return LinearProgram.from_triplets(rows, cols, vals, (len(rhs), idx.size), objective, rhs)


def _reconstruct(q: ConditionalTable, solution: np.ndarray, dz: int) -> ConditionalTable:
  na, nb, dx, dy = q.shape
  p = np.clip(solution, 0.0, None).reshape(na, nb, dx, dy, dz)[:, :, None]
  a_axis, b_axis = q.input_axes
  x_axis, y_axis = q.output_axes
  return ConditionalTable.from_array(
    [a_axis, b_axis, axis("C", (0,))],
    [x_axis, y_axis, axis("Z", tuple(range(dz)))],
    p,
  )


def _chain_i_n(q: ConditionalTable) -> Optional[float]:
  try:
    return i_n_of_table(q)
  except InvalidParameterError:
    return None


def max_prediction_distance(
  q: ConditionalTable,
  target_a: Label,
  target_x: Label,
  options: Optional[SimplexOptions] = None,
) -> AdversaryResult:
  lp = build_adversary_lp(q, Z_CARDINALITY, target_a, target_x)
  qn = q.normalized()
  p_x = _target_marginal(qn, target_a, target_x)
  logger.info(
    "adversary LP for target (a=%s, x=%s): %d variables, %d rows",
    target_a, target_x, lp.variable_count, lp.row_count,
  )
  solution, certificate = solve(lp, options)
  check = check_certificate(lp, solution, certificate, CERTIFICATE_TOL)
  if not check.valid:
    raise BoundViolationError(f"optimality certificate rejected: {check}")
  table = _reconstruct(qn, solution, Z_CARDINALITY)
  ns = check_nonsignalling(table, RESULT_NS_TOL)
  if not ns.holds:
    raise BoundViolationError(
      f"optimal extension is signalling ({ns.max_violation:.3g}): {ns.violating_constraint}"
    )
  if certificate.primal_objective < -NEGATIVE_OPTIMUM_TOL:
    raise BoundViolationError(f"adversary optimum {certificate.primal_objective!r} is negative")
  distance = float(np.clip(certificate.primal_objective / p_x, 0.0, 1.0))
  i_n = _chain_i_n(qn)
  if i_n is not None and distance > i_n + BOUND_SLACK:
    raise BoundViolationError(f"prediction distance {distance!r} exceeds I_N = {i_n!r}")
  return AdversaryResult(table, (target_a, target_x), distance, certificate, p_x, i_n, lp, solution)


def adversary_sweep(q: ConditionalTable, options: Optional[SimplexOptions] = None) -> List[AdversaryResult]:
  """max_prediction_distance for every target (a, x) with P(x|a) > 0."""
  qn = q.normalized()
  results = []
  for a in qn.input_axes[0].labels:
    for x in qn.output_axes[0].labels:
      if _target_marginal(qn, a, x) >= DEGENERATE_TARGET:
        results.append(max_prediction_distance(q, a, x, options))
  return results


def calculate(params: AdversaryRequest | dict) -> CalculationResponse:
  """Extremal non-signalling extension for the chained Bell table at (n, visibility)."""
  req = params if isinstance(params, AdversaryRequest) else AdversaryRequest(**params)
  q = born_table(entangled_state(req.visibility), chained_family(req.n))
  if req.all_targets:
    results = adversary_sweep(q)
  else:
    results = [max_prediction_distance(q, req.target_a, req.target_x)]
  primary = next(
    (r for r in results if r.target == (req.target_a, req.target_x)),
    results[0],
  )
  worst = max(r.prediction_distance for r in results)
  working: Dict[str, Any] = primary.summary()
  if req.all_targets:
    working["sweep"] = [r.summary() for r in results]
    working["max_over_targets"] = worst
  interp = (
    f"no non-signalling extension predicts X better than D = {primary.prediction_distance:.6g} "
    f"(bound I_N = {primary.i_n:.6g})"
  )
  return CalculationResponse(
    result=primary.prediction_distance,
    working=working,
    interpretation=interp,
    reference="D(P_Z|abcx, P_Z|abc) <= I_N(P_XY|AB)",
    metadata=build_metadata("lp_adversary"),
    tags=["linear programming", "non-signalling", "extension", "dual certificate"],
  )
