"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract, so new error types should
subclass one of the existing families rather than ``Exception`` directly.
"""
from __future__ import annotations


class IetkitError(Exception):
    """Base class for all package errors."""


class UsageError(IetkitError):
    """Bad arguments or malformed input (CLI exit code 1)."""


class BudgetExceededError(IetkitError):
    """A configured step/vertex budget ran out (CLI exit code 2)."""


class InductionUndefinedError(IetkitError):
    """Rauzy induction hit the equality case x_i = x_j (CLI exit code 3).

    ``steps_completed`` counts the steps that did succeed, and ``partial``
    carries whatever trace was accumulated before the equality.
    """

    def __init__(self, message: str, steps_completed: int = 0, partial=None):
        super().__init__(message)
        self.steps_completed = steps_completed
        self.partial = partial


class StageError(IetkitError):
    """A construction stage failed (CLI exit code 4); carries partial trace."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class ScheduleError(IetkitError):
    """Schedule windows collapsed or were otherwise invalid."""


class ScheduleOverflowError(ScheduleError):
    """A window bound would need an astronomically large integer.

    Raised by design when a schedule built from the unscaled exponent maps is
    asked for concrete numbers; such schedules exist for symbolic inspection
    only.
    """


class DegeneracyError(IetkitError):
    """Geometric degeneracy: singular matrix, dependent plane directions, ..."""


class CalibrationError(IetkitError):
    """A numerically verified containment missed its target radius."""

    def __init__(self, message: str, achieved_radius: float | None = None):
        super().__init__(message)
        self.achieved_radius = achieved_radius
