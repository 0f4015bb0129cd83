"""
# Non-signalling Bound Check

## 📂 Description

[Description]
Check a conditional distribution P(x, y[, z] | a, b[, c]) against the
non-signalling constraints and evaluate how much an extension Z can know about X.
Reports the largest marginal shift (as a variational distance), the chained Bell
quantity I_N, the Markov distance max D(P_{Z|abcx}, P_{Z|abc}) and the gap to the
bound D(P_{Z|abcx}, P_{Z|abc}) ≤ I_N that holds for every non-signalling
extension with binary X and Y.

## 📂 Configuration

### Inputs

[inputs]
  - name: table
    type: object
    required: true
    description: ConditionalTable JSON ({"input_axes", "output_axes", "probabilities"})

  - name: tolerance
    type: number
    required: false
    min: 0.0
    description: Non-signalling and bound tolerance (default 1e-9)

### Outputs

[result]
  type: boolean
  description: Whether the table is non-signalling and satisfies D ≤ I_N

[working]
  type: object
  description: Non-signalling report, I_N, Markov distances, bias and product-distance checks

[interpretation]
  type: string
  description: Which check failed, or confirmation that the extension is useless up to I_N

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
- every entry in [0, 1]; every input slice sums to 1 within 1e-9
- 2 or 3 input axes, matched one-to-one with output axes
- A labels {0, 2, …, 2N−2}, B labels {1, 3, …, 2N−1}, binary X and Y for I_N

## 📂 Usage (CLI)

>**CLI**:
  ```console
    chained-bell bound --in-table table.json --tolerance 1e-9
  ```
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from pydantic import Field, validator

from core.errors import InvalidParameterError, PreconditionViolatedError
from core.metadata import build_metadata
from core.request.request import CalculatorRequest
from core.response.response import CalculationResponse
from core.table import NORMALIZATION_TOL, ConditionalTable, axis

ZERO_PROBABILITY = 1e-12
FREE_CHOICE_TOL = 1e-9
MAX_FLATTEN_RESOLUTION = 10_000_000


class BoundRequest(CalculatorRequest):
  table: Dict[str, Any] = Field(..., description="ConditionalTable JSON object")
  tolerance: float = Field(1e-9, ge=0.0, description="Non-signalling tolerance")

  @validator("table")
  def table_parses(cls, v):
    ConditionalTable.from_dict(v)
    return v


@dataclass(frozen=True)
class NonsignallingReport:
  max_violation: float
  violating_constraint: str
  tolerance: float

  @property
  def holds(self) -> bool:
    return self.max_violation <= self.tolerance


@dataclass(frozen=True)
class FreeChoiceCheck:
  premise_holds: bool
  conclusion_holds: bool
  premise_gap: float
  conclusion_gap: float

  @property
  def holds(self) -> bool:
    """The implication premise ⇒ conclusion."""
    return (not self.premise_holds) or self.conclusion_holds

  def __bool__(self) -> bool:
    return self.holds


@dataclass(frozen=True)
class Lemma1Check:
  holds: bool
  worst_gap: float
  max_distance: float
  i_n: float

  def __bool__(self) -> bool:
    return self.holds


@dataclass(frozen=True)
class MarkovCheck:
  max_distance: float
  tolerance: float

  @property
  def holds(self) -> bool:
    return self.max_distance <= self.tolerance


@dataclass(frozen=True)
class BiasCheck:
  max_bias: float
  bound: float

  @property
  def holds(self) -> bool:
    return self.max_bias <= self.bound + 1e-12


@dataclass(frozen=True)
class FlatteningScheme:
  split_counts: Dict[int, int]
  epsilon_achieved: float
  source: Tuple[float, ...]

  def refined(self) -> np.ndarray:
    """Each source probability split into ``k_i`` equal parts, in source order."""
    return np.concatenate(
      [np.full(self.split_counts[i], p / self.split_counts[i]) for i, p in enumerate(self.source)]
    )

  def distance_to_flat(self) -> float:
    refined = self.refined()
    return 0.5 * float(np.abs(refined - 1.0 / refined.size).sum())

  @property
  def total_outcomes(self) -> int:
    return sum(self.split_counts.values())


# -- distances --------------------------------------------------------------


def _as_distribution(p: Any, name: str) -> np.ndarray:
  arr = np.asarray(p, dtype=float)
  if arr.ndim == 0 or arr.size == 0:
    raise InvalidParameterError(f"{name} must be a non-empty distribution")
  if np.any(arr < -NORMALIZATION_TOL) or abs(arr.sum() - 1.0) > NORMALIZATION_TOL:
    raise InvalidParameterError(f"{name} is not normalised (sum {arr.sum()!r})")
  return arr


def variational_distance(p: Any, q: Any) -> float:
  """D(P, Q) = ½ Σ |P(z) − Q(z)| over a common alphabet."""
  pa, qa = _as_distribution(p, "p"), _as_distribution(q, "q")
  if pa.shape != qa.shape:
    raise InvalidParameterError(f"alphabet mismatch: {pa.shape} vs {qa.shape}")
  return float(min(1.0, 0.5 * np.abs(pa - qa).sum()))


def lemma2_distance_bound(joint: Any) -> Tuple[float, float]:
  """(D(P_X, P_Y), P(X ≠ Y)) for a joint over a shared alphabet."""
  j = np.asarray(joint, dtype=float)
  if j.ndim != 2 or j.shape[0] != j.shape[1]:
    raise InvalidParameterError(f"X and Y must share an alphabet, joint has shape {j.shape}")
  _as_distribution(j.ravel(), "joint")
  px, py = j.sum(axis=1), j.sum(axis=0)
  d = 0.5 * float(np.abs(px - py).sum())
  p_neq = float(max(0.0, 1.0 - np.trace(j)))
  return d, p_neq


# -- table structure ----------------------------------------------------------


def _parties(table: ConditionalTable) -> int:
  k = len(table.input_axes)
  if k not in (2, 3) or len(table.output_axes) != k:
    raise InvalidParameterError(
      f"expected 2 or 3 input axes matched to output axes, got inputs {list(table.input_names)} "
      f"and outputs {list(table.output_names)}"
    )
  return k


def _pair_distance(m: np.ndarray, j: int, out_axes: Tuple[int, ...]) -> Tuple[float, Tuple[int, ...]]:
  """Max over pairs of labels of input axis ``j`` of D between the slices."""
  moved = np.moveaxis(m, j, 0)
  card = moved.shape[0]
  if card < 2:
    return 0.0, ()
  diff = np.abs(moved[:, None] - moved[None, :])
  # pairing inserts one axis ahead of the outputs
  dist = 0.5 * diff.sum(axis=tuple(o + 1 for o in out_axes))
  # dist has shape (card, card, other inputs...)
  flat = int(np.argmax(dist))
  where = np.unravel_index(flat, dist.shape)
  return float(dist.ravel()[flat]), tuple(int(w) for w in where)


def check_nonsignalling(table: ConditionalTable, tolerance: float = NORMALIZATION_TOL) -> NonsignallingReport:
  """Largest dependence of any party subset's output marginal on an outside input."""
  k = _parties(table)
  t = table.normalized()
  worst = 0.0
  constraint = ""
  for size in range(1, k):
    for subset in itertools.combinations(range(k), size):
      outs = [t.output_names[i] for i in subset]
      m = t.marginal(outs).probabilities
      out_axes = tuple(range(k, k + size))
      for j in range(k):
        if j in subset:
          continue
        dist, where = _pair_distance(m, j, out_axes)
        if dist > worst:
          worst = dist
          in_axis = t.input_axes[j]
          others = [ax for i, ax in enumerate(t.input_axes) if i != j]
          at = ", ".join(f"{ax.name}={ax.labels[w]}" for ax, w in zip(others, where[2:]))
          constraint = (
            f"P({','.join(outs)}|{','.join(t.input_names)}) depends on {in_axis.name}: "
            f"{in_axis.name}={in_axis.labels[where[0]]} vs {in_axis.name}={in_axis.labels[where[1]]}"
            + (f" at {at}" if at else "")
          )
  return NonsignallingReport(worst, constraint, tolerance)


def _require_nonsignalling(table: ConditionalTable, tolerance: float) -> None:
  report = check_nonsignalling(table, tolerance)
  if not report.holds:
    raise PreconditionViolatedError(
      f"table is signalling (violation {report.max_violation:.3g} > {tolerance}): "
      f"{report.violating_constraint}",
      constraint=report.violating_constraint,
    )


def extend_trivially(table: ConditionalTable) -> ConditionalTable:
  """Append a single-valued input C and a single-valued output Z."""
  if len(table.input_axes) != 2 or len(table.output_axes) != 2:
    raise InvalidParameterError("only bipartite (A,B)->(X,Y) tables can be extended")
  a, b = table.input_axes
  x, y = table.output_axes
  p = np.asarray(table.probabilities)[:, :, None, :, :, None]
  return ConditionalTable.from_array([a, b, axis("C", (0,))], [x, y, axis("Z", (0,))], p)


def bipartite_marginal(table: ConditionalTable, c: Any = None) -> ConditionalTable:
  """(A,B)→(X,Y) marginal of a tripartite table at C=c (first C label by default)."""
  if _parties(table) == 2:
    return table
  c_axis = table.input_axes[2]
  label = c_axis.labels[0] if c is None else c
  return table.marginal(table.output_names[:2]).fix_input(c_axis.name, label)


# -- chained Bell quantity ---------------------------------------------------


def _chain_n(table: ConditionalTable) -> int:
  if len(table.input_axes) != 2 or len(table.output_axes) != 2:
    raise InvalidParameterError("I_N needs an (A,B)->(X,Y) table")
  a_axis, b_axis = table.input_axes
  n = a_axis.cardinality
  if tuple(a_axis.labels) != tuple(range(0, 2 * n, 2)) or tuple(b_axis.labels) != tuple(range(1, 2 * n, 2)):
    raise InvalidParameterError(
      f"I_N needs A labels {{0,2,...,2N-2}} and B labels {{1,3,...,2N-1}}; "
      f"got {list(a_axis.labels)} and {list(b_axis.labels)}"
    )
  for out in table.output_axes:
    if out.cardinality != 2:
      raise InvalidParameterError(f"I_N needs binary outputs; {out.name} has {out.cardinality} outcomes")
  if table.output_axes[0].labels != table.output_axes[1].labels:
    raise InvalidParameterError("X and Y must share their outcome labels")
  return n


def chain_terms(n: int) -> List[Tuple[str, int, int]]:
  """The 2N terms of I_N: the wrap-around pair first, then every |a−b| = 1 pair."""
  terms = [("equal", 0, 2 * n - 1)]
  for a in range(0, 2 * n, 2):
    for b in (a - 1, a + 1):
      if 1 <= b <= 2 * n - 1:
        terms.append(("differ", a, b))
  return terms


def i_n_of_table(table: ConditionalTable) -> float:
  """P(X=Y | 0, 2N−1) + Σ_{|a−b|=1} P(X≠Y | a, b)."""
  n = _chain_n(table)
  p = table.normalized().probabilities
  same = p[..., 0, 0] + p[..., 1, 1]
  total = 0.0
  for kind, a, b in chain_terms(n):
    s = float(same[a // 2, b // 2])
    total += s if kind == "equal" else 1.0 - s
  return total


# -- extension checks --------------------------------------------------------


def _tripartite(table: ConditionalTable) -> ConditionalTable:
  if len(table.input_axes) == 2 and len(table.output_axes) == 2:
    return extend_trivially(table)
  if _parties(table) != 3:
    raise InvalidParameterError("expected an (A,B,C)->(X,Y,Z) table")
  return table


def _conditional_distance(joint: np.ndarray, given: int, target: int) -> float:
  """max over conditioning value v with P(v)>0 of D(P_{target|v}, P_target).

  ``joint`` has inputs first and exactly two output axes at positions
  ``given`` and ``target`` (negative indices).
  """
  p_given = joint.sum(axis=target, keepdims=True)
  p_target = joint.sum(axis=given, keepdims=True)
  with np.errstate(invalid="ignore", divide="ignore"):
    cond = np.where(p_given > ZERO_PROBABILITY, joint / p_given, 0.0)
  dist = 0.5 * np.abs(cond - p_target).sum(axis=target)
  mask = np.squeeze(p_given, axis=target) > ZERO_PROBABILITY
  return float(dist[mask].max()) if mask.any() else 0.0


def markov_check(table: ConditionalTable, tolerance: float = 1e-7) -> MarkovCheck:
  """max D(P_{Z|…x}, P_{Z|…}) over inputs and x with P(x|…) > 0.

  Accepts (A,C)→(X,Z) or (A,B,C)→(X,Y,Z) tables; X is the first output and Z
  the last.
  """
  k = len(table.input_axes)
  if k not in (2, 3) or len(table.output_axes) != k:
    raise InvalidParameterError("markov_check needs (A,C)->(X,Z) or (A,B,C)->(X,Y,Z)")
  t = table.normalized()
  xz = t.marginal([t.output_names[0], t.output_names[-1]]).probabilities
  return MarkovCheck(_conditional_distance(xz, given=-2, target=-1), tolerance)


def reverse_markov_check(table: ConditionalTable, tolerance: float = 1e-7) -> MarkovCheck:
  """max D(P_{X|…z}, P_{X|…}): learning Z does not move the prediction of X."""
  k = len(table.input_axes)
  if k not in (2, 3) or len(table.output_axes) != k:
    raise InvalidParameterError("reverse_markov_check needs (A,C)->(X,Z) or (A,B,C)->(X,Y,Z)")
  t = table.normalized()
  xz = t.marginal([t.output_names[0], t.output_names[-1]]).probabilities
  return MarkovCheck(_conditional_distance(xz, given=-1, target=-2), tolerance)


def _i_n_per_c(table: ConditionalTable) -> np.ndarray:
  c_axis = table.input_axes[2]
  return np.array([i_n_of_table(bipartite_marginal(table, c)) for c in c_axis.labels])


def lemma1_check(table: ConditionalTable, tolerance: float = 1e-7) -> Lemma1Check:
  """max over (a,b,c,x) of D(P_{Z|abcx}, P_{Z|abc}) − I_N, for a non-signalling table."""
  t = _tripartite(table)
  _require_nonsignalling(t, max(tolerance, NORMALIZATION_TOL))
  for name in t.output_names[:2]:
    if t.output_axis(name).cardinality != 2:
      raise InvalidParameterError(f"lemma1_check needs binary X and Y; {name} is not binary")
  i_n = _i_n_per_c(t)
  n = t.normalized()
  xz = n.marginal([n.output_names[0], n.output_names[2]]).probabilities  # (a, b, c, x, z)
  worst_gap = -math.inf
  worst_distance = 0.0
  for ci in range(t.input_axes[2].cardinality):
    d = _conditional_distance(xz[:, :, ci : ci + 1], given=-2, target=-1)
    worst_distance = max(worst_distance, d)
    worst_gap = max(worst_gap, d - float(i_n[ci]))
  return Lemma1Check(worst_gap <= tolerance, worst_gap, worst_distance, float(i_n.min()))


def marginal_bias_check(table: ConditionalTable) -> BiasCheck:
  """max |P_{X|ab[c]}(x) − ½| against the bound I_N/2."""
  t = _tripartite(table)
  i_n = float(_i_n_per_c(t).min())
  px = t.normalized().marginal([t.output_names[0]]).probabilities
  return BiasCheck(float(np.abs(px - 0.5).max()), i_n / 2.0)


def product_distance_check(table: ConditionalTable) -> float:
  """max over (a,b,c) of 2·D(P_{XZ|abc}, U_X × P_{Z|abc})."""
  t = _tripartite(table).normalized()
  xz = t.marginal([t.output_names[0], t.output_names[2]]).probabilities
  pz = xz.sum(axis=-2, keepdims=True)
  uniform = pz / xz.shape[-2]
  return float((np.abs(xz - uniform).sum(axis=(-2, -1))).max())


def free_choice_implies_ns(table: ConditionalTable, prior: Sequence[float]) -> FreeChoiceCheck:
  """Build P_{YZA|BC} two ways and test free choice of A ⇒ P_{YZ|ABC} = P_{YZ|BC}.

  First way: P_A(a)·P_{YZ|ABC}. Second: P_{A|BCYZ}·P_{YZ|BC}, with both factors
  obtained from the joint. The premise is P_{A|BCYZ} = P_A wherever
  P_{YZ|BC} > 0; the conclusion is the non-signalling condition for (Y,Z).
  """
  t = _tripartite(table)
  pa = _as_distribution(prior, "prior")
  if pa.shape != (t.input_axes[0].cardinality,):
    raise InvalidParameterError(
      f"prior has {pa.size} entries but A has {t.input_axes[0].cardinality} labels"
    )
  yz = t.normalized().marginal(t.output_names[1:]).probabilities  # (a, b, c, y, z)
  joint = pa[:, None, None, None, None] * yz  # P(y, z, a | b, c)
  p_yz = joint.sum(axis=0)  # P(y, z | b, c)
  with np.errstate(invalid="ignore", divide="ignore"):
    p_a_given = np.where(p_yz > ZERO_PROBABILITY, joint / p_yz, pa[:, None, None, None, None])
  support = np.broadcast_to(p_yz > ZERO_PROBABILITY, joint.shape)
  premise_gap = float(np.abs(p_a_given - pa[:, None, None, None, None])[support].max(initial=0.0))
  active = pa > ZERO_PROBABILITY
  conclusion_gap = float(np.abs(yz[active] - p_yz[None]).max(initial=0.0))
  # a premise gap g allows a conclusion gap of order g / P(a)
  conclusion_tol = FREE_CHOICE_TOL / float(pa[active].min())
  return FreeChoiceCheck(
    premise_holds=premise_gap <= FREE_CHOICE_TOL,
    conclusion_holds=conclusion_gap <= conclusion_tol,
    premise_gap=premise_gap,
    conclusion_gap=conclusion_gap,
  )


# -- flattening ----------------------------------------------------------------


def _flat_distance(p: np.ndarray, k: np.ndarray) -> float:
  # refined entries p_i/k_i (k_i copies) against 1/K: ½ Σ_i |p_i − k_i/K|
  return 0.5 * float(np.abs(p - k / k.sum()).sum())


def flatten(p: Sequence[float], epsilon: float) -> FlatteningScheme:
  """Split counts k_i = round(p_i·M) (ties up, at least 1) for the smallest M within ε of flat."""
  if not (isinstance(epsilon, (int, float)) and epsilon > 0 and math.isfinite(epsilon)):
    raise InvalidParameterError(f"epsilon must be > 0, got {epsilon!r}")
  arr = np.clip(_as_distribution(p, "p"), 0.0, None)
  arr = arr / arr.sum()
  for m in range(1, MAX_FLATTEN_RESOLUTION + 1):
    k = np.maximum(np.floor(arr * m + 0.5), 1.0)
    dist = _flat_distance(arr, k)
    if dist <= epsilon:
      counts = {i: int(v) for i, v in enumerate(k)}
      return FlatteningScheme(counts, dist, tuple(float(v) for v in arr))
  raise InvalidParameterError(
    f"no resolution up to {MAX_FLATTEN_RESOLUTION} reaches epsilon={epsilon}"
  )


# -- calculator entry point ------------------------------------------------


def bound_report(table: ConditionalTable, tolerance: float = NORMALIZATION_TOL) -> Dict[str, Any]:
  """Full bound report for a non-signalling table; raises if it signals."""
  t = _tripartite(table)
  ns = check_nonsignalling(t, tolerance)
  if not ns.holds:
    raise PreconditionViolatedError(
      f"table is signalling (violation {ns.max_violation:.3g} > {tolerance}): {ns.violating_constraint}",
      constraint=ns.violating_constraint,
    )
  lemma = lemma1_check(t, max(tolerance, 1e-7))
  markov = markov_check(t, max(tolerance, 1e-7))
  bias = marginal_bias_check(t)
  return {
    "nonsignalling": {
      "max_violation": ns.max_violation,
      "violating_constraint": ns.violating_constraint,
      "tolerance": ns.tolerance,
    },
    "normalization_violation": table.normalization_violation,
    "i_n": lemma.i_n,
    "lemma1": {"holds": lemma.holds, "worst_gap": lemma.worst_gap, "max_distance": lemma.max_distance},
    "markov": {"max_distance": markov.max_distance, "holds": markov.holds},
    "reverse_markov": {"max_distance": reverse_markov_check(t).max_distance},
    "bias": {"max_bias": bias.max_bias, "bound": bias.bound, "holds": bias.holds},
    "product_distance": product_distance_check(t),
  }


def calculate(params: BoundRequest | dict) -> CalculationResponse:
  """Non-signalling check plus the D ≤ I_N bound report for one table."""
  req = params if isinstance(params, BoundRequest) else BoundRequest(**params)
  table = ConditionalTable.from_dict(req.table)
  report = bound_report(table, req.tolerance)
  holds = report["lemma1"]["holds"]
  if holds:
    interp = (
      f"non-signalling; max D(P_Z|abcx, P_Z|abc) = {report['lemma1']['max_distance']:.6g} "
      f"<= I_N = {report['i_n']:.6g}"
    )
  else:
    interp = f"bound violated by {report['lemma1']['worst_gap']:.3g}"
  return CalculationResponse(
    result=holds,
    working=report,
    interpretation=interp,
    reference="D(P_Z|abcx, P_Z|abc) <= I_N(P_XY|AB)",
    metadata=build_metadata("nonlocality", tolerance=req.tolerance),
    tags=["non-signalling", "markov chain", "variational distance", "chained bell"],
  )
