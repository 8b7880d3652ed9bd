"""Numerical lab for holomorphic correspondences on the Riemann sphere."""

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    ConfigValidationError,
    CorrlabError,
    DegeneratePolynomialError,
    GridRefinementError,
    RootSolverError,
    SupportError,
)
from .polynomial import BihomogeneousPolynomial
from .correspondence import Correspondence, adjoint, compose, iterate
from .catalog import builtin

__all__ = [
    "__version__",
    "BihomogeneousPolynomial",
    "Correspondence",
    "adjoint",
    "compose",
    "iterate",
    "builtin",
    "CorrlabError",
    "DegeneratePolynomialError",
    "RootSolverError",
    "BudgetExceededError",
    "SupportError",
    "GridRefinementError",
    "ConfigValidationError",
]
