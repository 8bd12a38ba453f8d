"""Exception taxonomy shared across the package.

Three failure families matter to callers (and map to distinct CLI exit
codes): bad inputs, requests beyond what a component supports, and
iterative procedures that fail to converge.
"""

from __future__ import annotations

__all__ = [
    "ValidationError",
    "CapabilityError",
    "ConvergenceError",
]


class ValidationError(ValueError):
    """Input violates a documented precondition (malformed graph, bad
    parameter range, matrix that fails a diagonal-dominance check, ...)."""


class CapabilityError(RuntimeError):
    """The request is well-formed but outside what this component is
    designed to handle (e.g. dense verification oracles past their size
    cap)."""


class ConvergenceError(RuntimeError):
    """An iterative routine exhausted its iteration budget before
    reaching the requested tolerance."""

    def __init__(self, message: str, *, iterations: int | None = None,
                 residual: float | None = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual
