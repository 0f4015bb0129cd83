"""Predicates on small dense complex matrices.

Operators (density matrices, measurement effects) are plain numpy arrays of
dtype complex128; these helpers state the invariants the quantum calculators
rely on.
"""
from __future__ import annotations

from typing import Any

import numpy as np
import numpy.typing as npt

from core.errors import InvalidParameterError

ComplexMatrix = npt.NDArray[np.complex128]

STATE_TOL = 1e-10
EFFECT_TOL = 1e-12


def as_complex_matrix(entries: Any, rows: int | None = None, cols: int | None = None) -> ComplexMatrix:
    """Build a matrix from nested sequences or a flat row-major sequence."""
    m = np.asarray(entries, dtype=np.complex128)
    if m.ndim == 1:
        if rows is None or cols is None:
            raise InvalidParameterError("rows and cols are required for flat entries")
        if m.size != rows * cols:
            raise InvalidParameterError(f"entries length {m.size} != rows x cols = {rows * cols}")
        m = m.reshape(rows, cols)
    if m.ndim != 2:
        raise InvalidParameterError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def is_square(m: ComplexMatrix) -> bool:
    return m.ndim == 2 and m.shape[0] == m.shape[1]


def is_hermitian(m: ComplexMatrix, tol: float = STATE_TOL) -> bool:
    return is_square(m) and bool(np.all(np.abs(m - m.conj().T) <= tol))


def is_psd(m: ComplexMatrix, tol: float = STATE_TOL) -> bool:
    # eigvalsh assumes Hermitian input
    if not is_hermitian(m, tol):
        return False
    return bool(np.min(np.linalg.eigvalsh(m)) >= -tol)


def has_unit_trace(m: ComplexMatrix, tol: float = STATE_TOL) -> bool:
    return is_square(m) and abs(np.trace(m) - 1.0) <= tol


def is_density_matrix(m: ComplexMatrix, tol: float = STATE_TOL) -> bool:
    return is_psd(m, tol) and has_unit_trace(m, tol)


def is_projector(m: ComplexMatrix, tol: float = EFFECT_TOL) -> bool:
    """Hermitian and idempotent within ``tol`` entrywise."""
    return is_hermitian(m, tol) and bool(np.all(np.abs(m @ m - m) <= tol))


def outer(ket: npt.ArrayLike) -> ComplexMatrix:
    """|v><v| for a column vector given as a 1-d array."""
    v = np.asarray(ket, dtype=np.complex128)
    return np.outer(v, v.conj())
