"""Dense two-phase simplex for equality-form linear programs.

    maximise    c . x
    subject to  A x = b,   x >= 0

Phase one minimises the sum of (implicit) artificial variables, one per row;
artificial columns are never stored because they are not allowed to re-enter.
Rows whose artificial cannot be pivoted out are linear combinations of other
rows and are dropped. Phase two runs on the remaining rows. Both phases use
Bland's rule (lowest-index entering column, lowest-index leaving variable on
ratio ties), so the pivot sequence is a deterministic function of the LP.

The optimal basis is re-solved directly against the original matrix to give
the reported primal point and dual values; :func:`check_certificate` verifies
them from the raw LP without touching any solver state.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field
from scipy import sparse

from core.errors import (
    DatasetParseError,
    InfeasibleError,
    InvalidParameterError,
    IterationLimitError,
    SolverError,
    UnboundedError,
)
from core.serialize import format_real

logger = logging.getLogger(__name__)

CERTIFICATE_TOL = 1e-8
DUALITY_GAP_TOL = 1e-7
# entries below this after an elimination step are treated as exact zeros
_ZERO = 1e-14


class SimplexOptions(BaseModel):
    pivot_tol: float = Field(1e-10, gt=0, description="Smallest admissible pivot element")
    feasibility_tol: float = Field(1e-9, gt=0, description="Equality residual / phase-one objective tolerance")
    optimality_tol: float = Field(1e-9, gt=0, description="Reduced-cost tolerance for entering columns")
    max_iterations: int = Field(1_000_000, ge=1, description="Pivot cap across both phases")


@dataclass(frozen=True, eq=False)
class LinearProgram:
    objective: np.ndarray
    equality_matrix: sparse.csr_matrix
    equality_rhs: np.ndarray

    def __post_init__(self) -> None:
        m, n = self.equality_matrix.shape
        if self.objective.shape != (n,):
            raise InvalidParameterError(
                f"objective has shape {self.objective.shape}, matrix has {n} columns"
            )
        if self.equality_rhs.shape != (m,):
            raise InvalidParameterError(
                f"rhs has shape {self.equality_rhs.shape}, matrix has {m} rows"
            )

    @classmethod
    def from_dense(cls, objective, matrix, rhs) -> "LinearProgram":
        return cls(
            np.asarray(objective, dtype=float),
            sparse.csr_matrix(np.asarray(matrix, dtype=float)),
            np.asarray(rhs, dtype=float),
        )

    @classmethod
    def from_triplets(
        cls,
        rows: List[int],
        cols: List[int],
        values: List[float],
        shape: Tuple[int, int],
        objective,
        rhs,
    ) -> "LinearProgram":
        matrix = sparse.coo_matrix((values, (rows, cols)), shape=shape).tocsr()
        matrix.sum_duplicates()
        return cls(np.asarray(objective, dtype=float), matrix, np.asarray(rhs, dtype=float))

    @property
    def variable_count(self) -> int:
        return self.equality_matrix.shape[1]

    @property
    def row_count(self) -> int:
        return self.equality_matrix.shape[0]


@dataclass(frozen=True, eq=False)
class DualCertificate:
    dual_values: np.ndarray
    primal_objective: float
    dual_objective: float
    complementary_slackness_gap: float
    dual_infeasibility: float
    iterations: int
    dropped_rows: Tuple[int, ...] = ()

    @property
    def duality_gap(self) -> float:
        return abs(self.primal_objective - self.dual_objective)


@dataclass(frozen=True)
class CertificateCheck:
    primal_residual: float
    min_variable: float
    dual_infeasibility: float
    duality_gap: float
    complementary_slackness_gap: float
    tolerance: float

    @property
    def valid(self) -> bool:
        return (
            self.primal_residual <= self.tolerance
            and self.min_variable >= -self.tolerance
            and self.dual_infeasibility <= self.tolerance
            and self.duality_gap <= self.tolerance
            and self.complementary_slackness_gap <= self.tolerance
        )

    def __bool__(self) -> bool:
        return self.valid


class _Tableau:
    """Working tableau owned by one solve; rows are basis positions."""

    def __init__(self, matrix: np.ndarray, rhs: np.ndarray, opts: SimplexOptions):
        m, n = matrix.shape
        sign = np.where(rhs < 0, -1.0, 1.0)
        self.n = n
        self.opts = opts
        self.T = np.empty((m, n + 1))
        self.T[:, :n] = matrix * sign[:, None]
        self.T[:, n] = rhs * sign
        # artificial for original row r is labelled n + r
        self.basis = np.arange(n, n + m)
        self.d = np.zeros(n + 1)
        self.iterations = 0
        self.dropped: List[int] = []

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        rows = np.flatnonzero(col)
        if rows.size:
            block = T[rows] - np.outer(col[rows], T[r])
            block[np.abs(block) < _ZERO] = 0.0
            T[rows] = block
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.d -= self.d[j] * T[r]
        self.d[j] = 0.0
        self.basis[r] = j
        # ratio test keeps rhs >= 0 up to rounding
        rhs = T[:, self.n]
        rhs[(rhs < 0) & (rhs > -self.opts.feasibility_tol)] = 0.0

    def entering(self) -> Optional[int]:
        candidates = np.flatnonzero(self.d[: self.n] < -self.opts.optimality_tol)
        return int(candidates[0]) if candidates.size else None

    def leaving(self, j: int) -> Optional[int]:
        col = self.T[:, j]
        rows = np.flatnonzero(col > self.opts.pivot_tol)
        if not rows.size:
            return None
        ratios = self.T[rows, self.n] / col[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        return int(ties[np.argmin(self.basis[ties])])

    def run(self, phase: int) -> None:
        while True:
            j = self.entering()
            if j is None:
                return
            r = self.leaving(j)
            if r is None:
                if phase == 1:
                    raise SolverError("phase one became unbounded; the tableau is corrupted")
                raise UnboundedError(f"objective is unbounded along column {j}")
            self.pivot(r, j)
            self.iterations += 1
            if self.iterations >= self.opts.max_iterations:
                raise IterationLimitError(self.opts.max_iterations)
            if self.iterations % 1000 == 0:
                logger.debug(
                    "phase %d: %d pivots, objective %.12g", phase, self.iterations, -self.d[self.n]
                )

    def phase_one(self, rhs_scale: float) -> None:
        art = self.basis >= self.n
        self.d[:] = -self.T[art].sum(axis=0)
        self.run(phase=1)
        infeasibility = self.T[self.basis >= self.n, self.n].sum()
        if infeasibility > self.opts.feasibility_tol * rhs_scale:
            raise InfeasibleError(
                f"equality constraints are unattainable: phase-one residual {infeasibility:.3g}"
            )
        self._drive_out_artificials()

    def _drive_out_artificials(self) -> None:
        redundant: List[int] = []
        for r in np.flatnonzero(self.basis >= self.n):
            self.T[r, self.n] = 0.0
            row = self.T[r, : self.n]
            cols = np.flatnonzero(np.abs(row) > self.opts.pivot_tol)
            if cols.size:
                self.pivot(int(r), int(cols[0]))
                self.iterations += 1
            else:
                redundant.append(int(r))
        if redundant:
            self.dropped.extend(int(self.basis[r] - self.n) for r in redundant)
            keep = np.setdiff1d(np.arange(self.T.shape[0]), redundant)
            self.T = self.T[keep]
            self.basis = self.basis[keep]
            logger.debug("dropped %d redundant equality rows", len(redundant))

    def phase_two(self, cost: np.ndarray) -> None:
        cb = cost[self.basis]
        self.d[: self.n] = cost - cb @ self.T[:, : self.n]
        self.d[self.n] = -cb @ self.T[:, self.n]
        self.d[self.basis] = 0.0
        self.run(phase=2)


def solve(lp: LinearProgram, options: Optional[SimplexOptions] = None) -> Tuple[np.ndarray, DualCertificate]:
    """Maximise ``lp``; return the optimal point and its dual certificate.

    Raises InfeasibleError, UnboundedError or IterationLimitError.
    """
    opts = options or SimplexOptions()
    A = lp.equality_matrix.toarray()
    b = np.asarray(lp.equality_rhs, dtype=float)
    c = np.asarray(lp.objective, dtype=float)
    m, n = A.shape
    logger.debug("solving LP with %d variables and %d equality rows", n, m)

    tab = _Tableau(A, b, opts)
    tab.phase_one(rhs_scale=max(1.0, float(np.abs(b).sum())))
    phase_one_iterations = tab.iterations
    tab.phase_two(-c)
    logger.info(
        "simplex finished: %d pivots (%d in phase one), %d redundant rows",
        tab.iterations, phase_one_iterations, len(tab.dropped),
    )

    kept = np.setdiff1d(np.arange(m), tab.dropped)
    basis = tab.basis
    B = A[np.ix_(kept, basis)]
    try:
        x_b = np.linalg.solve(B, b[kept])
        y_kept = np.linalg.solve(B.T, c[basis])
    except np.linalg.LinAlgError as e:
        raise SolverError(f"optimal basis is singular: {e}") from None
    x = np.zeros(n)
    x[basis] = x_b
    x[(x < 0) & (x >= -opts.pivot_tol)] = 0.0
    y = np.zeros(m)
    y[kept] = y_kept

    residual = float(np.max(np.abs(A @ x - b))) if m else 0.0
    if residual > opts.feasibility_tol:
        raise InfeasibleError(f"equality residual {residual:.3g} exceeds {opts.feasibility_tol}")
    reduced = A.T @ y - c
    certificate = DualCertificate(
        dual_values=y,
        primal_objective=float(c @ x),
        dual_objective=float(b @ y),
        complementary_slackness_gap=float(abs(x @ reduced)),
        dual_infeasibility=float(max(0.0, -reduced.min())) if n else 0.0,
        iterations=tab.iterations,
        dropped_rows=tuple(sorted(tab.dropped)),
    )
    if certificate.duality_gap > DUALITY_GAP_TOL:
        raise SolverError(
            f"duality gap {certificate.duality_gap:.3g} exceeds {DUALITY_GAP_TOL} at reported optimum"
        )
    return x, certificate


def check_certificate(
    lp: LinearProgram,
    solution: np.ndarray,
    certificate: DualCertificate,
    tolerance: float = CERTIFICATE_TOL,
) -> CertificateCheck:
    """Recompute every optimality condition from the raw LP."""
    A = lp.equality_matrix
    x = np.asarray(solution, dtype=float)
    y = np.asarray(certificate.dual_values, dtype=float)
    reduced = A.T @ y - lp.objective
    primal = float(lp.objective @ x)
    dual = float(lp.equality_rhs @ y)
    return CertificateCheck(
        primal_residual=float(np.max(np.abs(A @ x - lp.equality_rhs))) if lp.row_count else 0.0,
        min_variable=float(x.min()) if x.size else 0.0,
        dual_infeasibility=float(max(0.0, -reduced.min())) if x.size else 0.0,
        duality_gap=abs(primal - dual),
        complementary_slackness_gap=float(abs(x @ reduced)),
        tolerance=tolerance,
    )


def dump_lp(lp: LinearProgram) -> str:
    """Plain-text dump: comment header, objective line, rhs line, then 'row col value' triplets."""
    coo = lp.equality_matrix.tocoo()
    lines = [
        "# maximise objective . x subject to A x = rhs, x >= 0",
        f"# variables {lp.variable_count} rows {lp.row_count} nonzeros {coo.nnz}",
        "objective " + " ".join(format_real(v) for v in lp.objective),
        "rhs " + " ".join(format_real(v) for v in lp.equality_rhs),
    ]
    order = np.lexsort((coo.col, coo.row))
    lines.extend(
        f"{int(coo.row[k])} {int(coo.col[k])} {format_real(coo.data[k])}" for k in order
    )
    return "\n".join(lines) + "\n"


def load_lp(text: str) -> LinearProgram:
    objective: Optional[List[float]] = None
    rhs: Optional[List[float]] = None
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    n = m = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["variables"]:
                    n, m = int(parts[1]), int(parts[3])
            elif line.startswith("objective"):
                objective = [float(v) for v in line.split()[1:]]
            elif line.startswith("rhs"):
                rhs = [float(v) for v in line.split()[1:]]
            else:
                r, col, v = line.split()
                rows.append(int(r))
                cols.append(int(col))
                vals.append(float(v))
        except (ValueError, IndexError):
            raise DatasetParseError(f"malformed LP dump line {raw!r}", line=lineno) from None
    if objective is None or rhs is None:
        raise DatasetParseError("LP dump needs an objective line and an rhs line")
    shape = (m if m is not None else len(rhs), n if n is not None else len(objective))
    return LinearProgram.from_triplets(rows, cols, vals, shape, objective, rhs)


def write_lp(lp: LinearProgram, path: Union[str, Path]) -> None:
    Path(path).write_text(dump_lp(lp), encoding="utf-8")
