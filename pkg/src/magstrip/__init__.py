"""Spectral toolkit for a 2D magnetic Schrodinger operator on a strip:
fiber eigenproblems, band functions and thresholds, Mourre constants,
effective 1D Hamiltonians, and spectral shift functions with their
threshold asymptotics."""

from .errors import (
    ConvergenceError,
    DecayViolationError,
    DomainError,
    FitError,
    InvalidSpecError,
    MagstripError,
)
from .fiber import Eigenpair, FiberSpec, GridFunction1D, assemble_fiber, eigen_lowest

__all__ = [
    "MagstripError",
    "InvalidSpecError",
    "DomainError",
    "DecayViolationError",
    "ConvergenceError",
    "FitError",
    "FiberSpec",
    "GridFunction1D",
    "Eigenpair",
    "assemble_fiber",
    "eigen_lowest",
]
