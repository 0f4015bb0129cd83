"""
# Optimal Chain Length

## 📂 Description

[Description]
Find the number of measurement settings N that minimises the chained Bell
quantity I_N at a given visibility, and scan that optimum over a range of
visibilities.
I_N = 2N·[v·sin²(π/(4N)) + (1−v)/2] balances the 1/N decay of the quantum
term against the linear growth of the noise term, so for v < 1 there is an
interior optimum; at v = 0.98 it is N = 8. The minimum is the smallest upper
bound on how well any non-signalling extension can predict the outcome at
that visibility. Rows also carry the CHSH value I_2 and I_8 for comparison.

## 📂 Configuration

### Inputs

[inputs]
  - name: visibility
    type: number
    required: false
    min: 0.0
    max: 1.0
    description: Single visibility to optimise (omit to scan)

  - name: v_min
    type: number
    required: false
    min: 0.0
    description: Lower end of the scan

  - name: v_max
    type: number
    required: false
    max: 0.999999999
    description: Upper end of the scan

  - name: steps
    type: integer
    required: false
    min: 2
    description: Number of scan points, endpoints included (default spacing 1e-3)

  - name: n_max
    type: integer
    required: false
    min: 2
    description: Largest N searched (default 256)

### Outputs

[result]
  type: object
  description: Optimal N and minimum I_N, or the scan rows

[working]
  type: object
  description: Grid and search cap

[interpretation]
  type: string
  description: Optimal N at the requested visibility or over the scan

[reference]
  type: string
  default: "min_N 2N[v sin^2(pi/4N) + (1-v)/2]"

[metadata]
  type: object
  fields:
    timestamp: string (ISO8601)
    version: string
    calculator_name: string

## 📂 Validation Rules
- either visibility, or v_min < v_max, must be given
- v_max must stay below 1 (no interior optimum at v = 1)

## 📂 Usage (CLI)

>**CLI**:
  ```console
    chained-bell scan --vmin 0.97 --vmax 0.99 --steps 3 --out scan.csv
  ```
"""

from __future__ import annotations

import io
import logging
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import Field, root_validator

from calculators.quantum_core import _check_visibility, i_n_analytic
from core.errors import InvalidParameterError, NeedsLargerCapError
from core.metadata import build_metadata
from core.request.request import CalculatorRequest
from core.response.response import CalculationResponse
from core.serialize import format_real

logger = logging.getLogger(__name__)

DEFAULT_N_MAX = 256
SCAN_STEP = 1e-3
VISIBILITY_CEILING = 1.0 - 1e-9
SCAN_HEADER = "visibility,optimal_n,min_i,i_n2,i_n8"


class AnalysisRequest(CalculatorRequest):
  visibility: Optional[float] = Field(None, ge=0.0, le=1.0, description="Single visibility")
  v_min: Optional[float] = Field(None, ge=0.0, description="Scan start")
  v_max: Optional[float] = Field(None, le=VISIBILITY_CEILING, description="Scan end")
  steps: Optional[int] = Field(None, ge=2, description="Scan points")
  n_max: int = Field(DEFAULT_N_MAX, ge=2, description="Largest N searched")

  @root_validator(skip_on_failure=True)
  def validate_mode(cls, values):
    single = values.get("visibility") is not None
    lo, hi = values.get("v_min"), values.get("v_max")
    if single and (lo is not None or hi is not None):
      raise ValueError("give either visibility or v_min/v_max, not both")
    if not single:
      if lo is None or hi is None:
        raise ValueError("a scan needs both v_min and v_max")
      if lo >= hi:
        raise ValueError(f"v_min ({lo}) must be < v_max ({hi})")
    return values


@dataclass(frozen=True)
class VisibilityScanRow:
  visibility: float
  optimal_n: int
  min_i: float
  i_at_n2: float
  i_at_n8: float


def _i_n_curve(visibility: float, n_max: int) -> np.ndarray:
  n = np.arange(1, n_max + 1, dtype=float)
  return 2 * n * (visibility * np.sin(np.pi / (4 * n)) ** 2 + (1.0 - visibility) / 2.0)


def optimal_n(visibility: float, n_max: int = DEFAULT_N_MAX) -> Tuple[int, float]:
  """argmin over 1 ≤ N ≤ n_max of I_N at ``visibility``; ties go to the smaller N."""
  _check_visibility(visibility)
  if isinstance(n_max, bool) or not isinstance(n_max, (int, np.integer)) or n_max < 2:
    raise InvalidParameterError(f"n_max must be an integer >= 2, got {n_max!r}")
  curve = _i_n_curve(float(visibility), int(n_max))
  n_star = int(np.argmin(curve)) + 1
  if n_star == n_max and curve[-1] < curve[-2]:
    raise NeedsLargerCapError(float(visibility), int(n_max))
  return n_star, i_n_analytic(n_star, visibility)


def default_steps(v_min: float, v_max: float) -> int:
  return max(2, int(round((v_max - v_min) / SCAN_STEP)) + 1)


def visibility_scan(
  v_min: float,
  v_max: float,
  steps: Optional[int] = None,
  n_max: int = DEFAULT_N_MAX,
) -> List[VisibilityScanRow]:
  if not (0.0 <= v_min < v_max <= VISIBILITY_CEILING):
    raise InvalidParameterError(
      f"scan needs 0 <= v_min < v_max <= 1-1e-9, got v_min={v_min!r} v_max={v_max!r}"
    )
  if steps is None:
    steps = default_steps(v_min, v_max)
  if steps < 2:
    raise InvalidParameterError(f"steps must be >= 2, got {steps!r}")
  grid = np.linspace(v_min, v_max, steps)
  logger.info("scanning %d visibilities in [%g, %g] with n_max=%d", steps, v_min, v_max, n_max)
  rows = []
  for v in grid.tolist():
    n_star, i_min = optimal_n(v, n_max)
    rows.append(VisibilityScanRow(v, n_star, i_min, i_n_analytic(2, v), i_n_analytic(8, v)))
  return rows


def scan_csv(rows: Sequence[VisibilityScanRow]) -> str:
  out = io.StringIO()
  out.write(SCAN_HEADER + "\n")
  for row in rows:
    v, n_star, i_min, i2, i8 = astuple(row)
    out.write(f"{format_real(v)},{n_star},{format_real(i_min)},{format_real(i2)},{format_real(i8)}\n")
  return out.getvalue()


def write_scan_csv(rows: Sequence[VisibilityScanRow], path: Union[str, Path]) -> None:
  Path(path).write_text(scan_csv(rows), encoding="utf-8")


def calculate(params: AnalysisRequest | dict) -> CalculationResponse:
  req = params if isinstance(params, AnalysisRequest) else AnalysisRequest(**params)
  if req.visibility is not None:
    n_star, i_min = optimal_n(req.visibility, req.n_max)
    return CalculationResponse(
      result={"optimal_n": n_star, "min_i": i_min},
      working={"n_max": req.n_max, "i_at_n2": i_n_analytic(2, req.visibility)},
      interpretation=(
        f"N = {n_star} minimises I_N at visibility {req.visibility:g} (I_N = {i_min:.6g}); "
        f"no extension predicts X with advantage above {i_min:.6g}"
      ),
      reference="min_N 2N[v sin^2(pi/4N) + (1-v)/2]",
      metadata=build_metadata("analysis"),
      tags=["chained bell", "visibility", "optimisation"],
    )
  rows = visibility_scan(req.v_min, req.v_max, req.steps, req.n_max)
  best = min(rows, key=lambda r: r.min_i)
  return CalculationResponse(
    result=[vars(r) for r in rows],
    working={"n_max": req.n_max, "steps": len(rows)},
    interpretation=(
      f"optimal N ranges from {rows[0].optimal_n} to {rows[-1].optimal_n}; "
      f"smallest I_N {best.min_i:.6g} at visibility {best.visibility:.6g}"
    ),
    reference="min_N 2N[v sin^2(pi/4N) + (1-v)/2]",
    metadata=build_metadata("analysis"),
    tags=["chained bell", "visibility", "optimisation"],
  )
