"""MIMO channel capacity under joint total and per-antenna power constraints."""

from .core import (ChannelMatrix, CovarianceMatrix, DiagonalMultiplier,
                   PowerConstraints, SolveReport, SolverKind,
                   mutual_information)
from .dispatch import SolveMode, cross_validate, solve
from .errors import (ConvergenceError, DomainError, InputError, MimoCapError,
                     RoutingError, StepError)
from .optim import OptimSettings
from .waterfill import waterfill_tp

__version__ = "0.1.0"

__all__ = [
    "ChannelMatrix",
    "ConvergenceError",
    "CovarianceMatrix",
    "DiagonalMultiplier",
    "DomainError",
    "InputError",
    "MimoCapError",
    "OptimSettings",
    "PowerConstraints",
    "RoutingError",
    "SolveMode",
    "SolveReport",
    "SolverKind",
    "StepError",
    "cross_validate",
    "mutual_information",
    "solve",
    "waterfill_tp",
]
