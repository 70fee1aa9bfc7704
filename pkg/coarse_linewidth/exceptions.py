"""
Custom exceptions for the coarse line-width workbench.
"""

from typing import Optional


class CoarseWidthError(Exception):
    """Root of every error the library raises on purpose."""


class GraphFormatError(CoarseWidthError, ValueError):
    """Raised when a graph or payload document is malformed."""


class PreconditionError(CoarseWidthError, ValueError):
    """Raised when the inputs of an operation violate its preconditions."""

    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


class ScheduleError(PreconditionError):
    """Raised when a schedule table violates the space-requirement axioms."""


class OracleCapExceeded(PreconditionError):
    """Raised when an exact oracle is asked for an input above its cap."""


class SearchBudgetExhausted(CoarseWidthError):
    """Raised when a budgeted search stops before covering its space."""

    def __init__(self, explored: int, what: str = "search") -> None:
        super().__init__(f"{what} exhausted its budget after {explored} states")
        self.explored = explored


class RunCancelled(CoarseWidthError):
    """Raised inside a pipeline run once its cancellation flag is set."""

    def __init__(self, where: str) -> None:
        super().__init__(f"run cancelled during {where}")
        self.where = where


class InvariantViolation(CoarseWidthError, RuntimeError):
    """Raised when a self-check on an intermediate state fails."""

    def __init__(
        self, operation: str, bullet: str, century: Optional[int] = None, detail: str = ""
    ) -> None:
        where = f"century {century}, " if century is not None else ""
        message = f"{where}{operation}: violated '{bullet}'"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.operation = operation
        self.bullet = bullet
        self.century = century


class WorkerNotRunningError(CoarseWidthError, RuntimeError):
    """Raised when trying to use a worker that is not running."""
