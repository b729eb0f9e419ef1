"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SemmesError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(SemmesError, ValueError):
    """An argument lies outside the domain where the formula applies."""


class BudgetError(SemmesError):
    """A computation would exceed the configured node budget."""


class SpaceError(SemmesError, ValueError):
    """A space definition is malformed or refers to an unknown builtin."""


class DegenerateConfiguration(SemmesError):
    """Geometry is too close to a non-generic position to decide reliably."""


class ConstructionError(SemmesError):
    """A geometric construction failed its own verification."""

    def __init__(self, message: str, failure=None):
        super().__init__(message)
        self.failure = failure


class ConvergenceError(SemmesError):
    """An iterative solver ran out of budget before meeting its tolerances."""

    def __init__(self, message: str, residuals: dict | None = None):
        super().__init__(message)
        self.residuals = residuals or {}


class BilipschitzViolation(SemmesError):
    """A pair of tree nodes breaks the embedding sandwich."""

    def __init__(self, message: str, pair=None):
        super().__init__(message)
        self.pair = pair
