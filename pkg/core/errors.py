from __future__ import annotations

from typing import Any, Optional


class NoExtensionError(Exception):
    """Base class for every error raised by the library."""


class InvalidParameterError(NoExtensionError, ValueError):
    """Raised when an argument violates an operation's domain."""


class PreconditionViolatedError(NoExtensionError, ValueError):
    """Raised when an input table fails a structural precondition.

    ``constraint`` names the violated condition, e.g. the marginal that signals.
    """

    def __init__(self, message: str, constraint: Optional[str] = None):
        self.constraint = constraint
        super().__init__(message)


class InsufficientDataError(NoExtensionError, ValueError):
    """Raised when an estimation cell has no trials."""

    def __init__(self, cell: Any, detail: Optional[str] = None):
        self.cell = cell
        msg = "no trials recorded" if cell is None else f"no trials recorded for cell (a, b) = {cell}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NeedsLargerCapError(NoExtensionError, ValueError):
    """Raised when I_N is still decreasing at the largest N searched."""

    def __init__(self, visibility: float, n_max: int):
        self.visibility = visibility
        self.n_max = n_max
        super().__init__(
            f"I_N is still decreasing at n_max={n_max} for visibility {visibility!r}; "
            "increase n_max"
        )


class DatasetParseError(NoExtensionError, ValueError):
    """Raised for malformed dataset or table files."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.message = message
        self.line = line
        self.path = path
        where = ""
        if path:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class SolverError(NoExtensionError, RuntimeError):
    """Base class for linear-programming failures."""


class InfeasibleError(SolverError):
    """Raised when phase one cannot drive the artificial objective to zero."""


class UnboundedError(SolverError):
    """Raised when the objective grows without bound along an edge."""


class IterationLimitError(SolverError):
    """Raised when the simplex exceeds its iteration cap."""

    def __init__(self, iterations: int):
        self.iterations = iterations
        super().__init__(f"simplex iteration cap of {iterations} exceeded")


class BoundViolationError(SolverError):
    """Raised when an LP optimum breaks the I_N bound or fails its certificate check."""


class CalculatorNotFoundError(NoExtensionError, ValueError):
    """Raised when no module under ``calculators`` has the requested name."""

    def __init__(self, name: str, detail: Optional[str] = None):
        self.name = name
        msg = f"calculator '{name}' not found"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
