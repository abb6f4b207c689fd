"""Shared error types."""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """A numerical result failed its convergence gate (truncation, step size, norm)."""


class CollapseMappingError(RuntimeError):
    """Cross-solver check at the collapse point disagreed beyond tolerance.

    Carries the full comparison report for inspection.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
