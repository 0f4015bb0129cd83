"""
# Chained Bell Correlations

## 📂 Description

[Description]
Evaluate the chained Bell quantity I_N for 2N projective qubit measurements on a
(noisy) maximally entangled pair.
Alice measures at angles θ^a = πa/(2N) for a ∈ {0, 2, …, 2N−2}, Bob at θ^b for
b ∈ {1, 3, …, 2N−1}; the pair is in the Werner state v·|φ⁺⟩⟨φ⁺| + (1−v)·I/4.
Uses the closed form I_N = 2N·[v·sin²(π/(4N)) + (1−v)/2] and cross-checks it
against the Born-rule table P(x, y | a, b) = tr[(E^a_x ⊗ F^b_y) ρ].

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
    description: Werner visibility v of the shared pair

### Outputs

[result]
  type: number
  description: I_N from the closed form

[working]
  type: object
  description: Table-derived I_N, the agreement gap and the measurement angles

[interpretation]
  type: string
  description: Comparison of I_N with its local (classical) minimum of 1

[reference]
  type: string
  default: "I_N = 2N[v sin^2(pi/4N) + (1-v)/2]"

[metadata]
  type: object
  fields:
    timestamp: string (ISO8601)
    version: string
    calculator_name: string

## 📂 Validation Rules
- n must be an integer ≥ 1
- visibility must be in [0, 1]

## 📂 Usage (CLI)

>**CLI**:
  ```console
    chained-bell run quantum_core --params '{"n": 8, "visibility": 0.98}'
  ```
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterator, Tuple

import numpy as np
from pydantic import Field

from core.errors import InvalidParameterError
from core.linalg import ComplexMatrix, is_density_matrix, outer
from core.metadata import build_metadata
from core.request.request import CalculatorRequest
from core.response.response import CalculationResponse
from core.table import ConditionalTable, axis

# table index 0 <-> outcome +1, index 1 <-> outcome -1
OUTCOMES: Tuple[int, int] = (1, -1)
CLAMP_TOL = 1e-14

PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0], dtype=np.complex128) / math.sqrt(2.0)


class QuantumCoreRequest(CalculatorRequest):
  n: int = Field(..., ge=1, description="Settings per party (N)")
  visibility: float = Field(..., ge=0.0, le=1.0, description="Werner visibility v")


@dataclass(frozen=True, eq=False)
class ProjectiveQubitMeasurement:
  angle: float
  effect_plus: ComplexMatrix
  effect_minus: ComplexMatrix

  @property
  def effects(self) -> Tuple[ComplexMatrix, ComplexMatrix]:
    return self.effect_plus, self.effect_minus


@dataclass(frozen=True, eq=False)
class TwoQubitState:
  density: ComplexMatrix
  visibility: float


@dataclass(frozen=True, eq=False)
class ChainedMeasurementFamily:
  n: int
  alice: Dict[int, ProjectiveQubitMeasurement]
  bob: Dict[int, ProjectiveQubitMeasurement]

  @property
  def alice_labels(self) -> Tuple[int, ...]:
    return tuple(self.alice)

  @property
  def bob_labels(self) -> Tuple[int, ...]:
    return tuple(self.bob)

  def __iter__(self) -> Iterator[Tuple[int, ProjectiveQubitMeasurement]]:
    yield from self.alice.items()
    yield from self.bob.items()


def _check_n(n: int) -> None:
  if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
    raise InvalidParameterError(f"n must be an integer >= 1, got {n!r}")


def _check_visibility(visibility: float) -> None:
  if not (isinstance(visibility, (int, float, np.floating)) and 0.0 <= visibility <= 1.0):
    raise InvalidParameterError(f"visibility must be in [0, 1], got {visibility!r}")


def chain_angle(label: int, n: int) -> float:
  return math.pi * label / (2 * n)


def measurement_from_angle(theta: float) -> ProjectiveQubitMeasurement:
  """Projectors onto cos(θ/2)|0⟩ + sin(θ/2)|1⟩ and sin(θ/2)|0⟩ − cos(θ/2)|1⟩."""
  if not math.isfinite(theta):
    raise InvalidParameterError(f"theta must be finite, got {theta!r}")
  c, s = math.cos(theta / 2), math.sin(theta / 2)
  plus = outer([c, s])
  minus = outer([s, -c])
  plus.setflags(write=False)
  minus.setflags(write=False)
  return ProjectiveQubitMeasurement(float(theta), plus, minus)


def chained_family(n: int) -> ChainedMeasurementFamily:
  _check_n(n)
  alice = {a: measurement_from_angle(chain_angle(a, n)) for a in range(0, 2 * n, 2)}
  bob = {b: measurement_from_angle(chain_angle(b, n)) for b in range(1, 2 * n, 2)}
  return ChainedMeasurementFamily(int(n), alice, bob)


def rotated_family(family: ChainedMeasurementFamily, offset: float) -> ChainedMeasurementFamily:
  """The same family with every angle shifted by ``offset``."""
  return ChainedMeasurementFamily(
    family.n,
    {a: measurement_from_angle(m.angle + offset) for a, m in family.alice.items()},
    {b: measurement_from_angle(m.angle + offset) for b, m in family.bob.items()},
  )


def entangled_state(visibility: float) -> TwoQubitState:
  """Werner mixture v·|φ⁺⟩⟨φ⁺| + (1−v)·I/4."""
  _check_visibility(visibility)
  v = float(visibility)
  rho = v * outer(PHI_PLUS) + (1.0 - v) * np.eye(4, dtype=np.complex128) / 4.0
  rho.setflags(write=False)
  return TwoQubitState(rho, v)


def born_table(state: TwoQubitState, family: ChainedMeasurementFamily) -> ConditionalTable:
  """P(x, y | a, b) = tr[(E^a_x ⊗ F^b_y) ρ] over inputs (A, B) and outputs (X, Y)."""
  if not is_density_matrix(state.density):
    raise InvalidParameterError("state density is not a valid density matrix")
  E = np.stack([np.stack(m.effects) for m in family.alice.values()])  # (a, x, 2, 2)
  F = np.stack([np.stack(m.effects) for m in family.bob.values()])  # (b, y, 2, 2)
  rho = state.density.reshape(2, 2, 2, 2)
  # tr[(E ⊗ F) ρ] = Σ E[i,k] F[j,l] ρ[(k,l),(i,j)]
  p = np.einsum("axik,byjl,klij->abxy", E, F, rho, optimize=True).real
  p[(p < 0) & (p >= -CLAMP_TOL)] = 0.0
  return ConditionalTable.from_array(
    [axis("A", family.alice_labels), axis("B", family.bob_labels)],
    [axis("X", OUTCOMES), axis("Y", OUTCOMES)],
    p,
  )


def i_n_analytic(n: int, visibility: float) -> float:
  _check_n(n)
  _check_visibility(visibility)
  v = float(visibility)
  return 2 * n * (v * math.sin(math.pi / (4 * n)) ** 2 + (1.0 - v) / 2.0)


def calculate(params: QuantumCoreRequest | dict) -> CalculationResponse:
  """Closed-form I_N cross-checked against the Born-rule table."""
  # imported here: nonlocality builds on the tables this module produces
  from calculators.nonlocality import i_n_of_table

  req = params if isinstance(params, QuantumCoreRequest) else QuantumCoreRequest(**params)
  family = chained_family(req.n)
  analytic = i_n_analytic(req.n, req.visibility)
  from_table = i_n_of_table(born_table(entangled_state(req.visibility), family))
  if analytic < 1.0:
    interp = f"I_{req.n} = {analytic:.6g} < 1: correlations are not reproducible by a local model"
  else:
    interp = f"I_{req.n} = {analytic:.6g} >= 1: no chained Bell violation"
  return CalculationResponse(
    result=analytic,
    working={
      "i_n_from_table": from_table,
      "agreement_gap": abs(analytic - from_table),
      "alice_angles": {str(a): m.angle for a, m in family.alice.items()},
      "bob_angles": {str(b): m.angle for b, m in family.bob.items()},
    },
    interpretation=interp,
    reference="I_N = 2N[v sin^2(pi/4N) + (1-v)/2]",
    metadata=build_metadata("quantum_core"),
    tags=["chained bell", "born rule", "werner state", "visibility"],
  )
