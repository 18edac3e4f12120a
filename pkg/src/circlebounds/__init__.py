"""Numerical laboratory for complex a priori bounds of critical circle maps."""

from .circlemap import (
    CriticalCircleMap,
    CriticalOrbit,
    blaschke_circle_map,
    closest_returns,
    rotation_number,
    solve_parameter,
    standard_map,
)
from .errors import (
    BranchAmbiguity,
    DomainError,
    InsufficientBudget,
    LabError,
    NoAdmissibleSamples,
    NumericalFailure,
    RationalLock,
)
from .numbertheory import RotationNumber, continued_fraction, gauss_map, parse_rotation

__version__ = "0.1.0"

__all__ = [
    "BranchAmbiguity", "CriticalCircleMap", "CriticalOrbit", "DomainError", "InsufficientBudget",
    "LabError", "NoAdmissibleSamples", "NumericalFailure", "RationalLock", "RotationNumber",
    "blaschke_circle_map", "closest_returns", "continued_fraction", "gauss_map",
    "parse_rotation", "rotation_number", "solve_parameter", "standard_map",
]
