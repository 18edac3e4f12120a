"""Exception hierarchy shared by the laboratory modules.

Every failure the CLI maps onto an exit code derives from ``LabError``;
``DomainError`` is also a ``ValueError`` so plain callers can catch it the
usual way.
"""

from __future__ import annotations


class LabError(Exception):
    """Base class for all laboratory failures."""

    exit_code = 3


class DomainError(LabError, ValueError):
    """An argument lies outside the domain of an operation."""

    exit_code = 2


class InsufficientDepth(DomainError):
    pass


class NumericalFailure(LabError):
    """Generic numerical failure (exit code 3)."""


class RationalLock(NumericalFailure):
    """The critical orbit returned to the critical point: rotation number is rational."""


class InsufficientBudget(NumericalFailure):
    pass


class BranchAmbiguity(NumericalFailure):
    """Newton continuation of an inverse branch stalled or jumped.

    ``index`` is the position along a backward orbit where tracking failed,
    when known.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class LevelTooDeep(NumericalFailure):
    pass


class DomainExhausted(NumericalFailure):
    pass


class NoAdmissibleSamples(NumericalFailure):
    pass


class NotConverged(NumericalFailure):
    pass
