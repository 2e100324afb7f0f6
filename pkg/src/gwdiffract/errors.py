"""Exception types carrying structured, machine-readable reports."""

from __future__ import annotations

__all__ = ["SolverError", "BlowupError", "NonConvergenceError", "StabilityError"]


class SolverError(RuntimeError):
    """Base class; ``report`` is a JSON-serializable dict."""

    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = dict(report or {})
        self.report.setdefault("message", message)


class BlowupError(SolverError):
    """A field or gradient exceeded its cap; ``report['cell']`` locates it."""


class NonConvergenceError(SolverError):
    """The corner fixed-point iteration failed on a v-level."""


class StabilityError(SolverError):
    """The explicit diffraction step bound ``k|D|/h_eta^2 <= 1/2`` is violated."""
