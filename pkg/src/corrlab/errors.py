"""
Exception and warning types shared across corrlab.

Validation problems subclass ValueError and internal numerical failures subclass
RuntimeError, so callers that only know the builtin types keep working. The CLI maps
each family onto an exit code (see ``corrlab.cli``).
"""
from __future__ import annotations

from typing import List, Optional, Sequence


class CorrlabError(Exception):
    """Base class for every error raised by corrlab."""


class DegeneratePolynomialError(CorrlabError, ValueError):
    """Zero polynomial, zero fiber polynomial, ill-posed elimination or diagonal component."""


class RootSolverError(CorrlabError, RuntimeError):
    """Simultaneous iteration and companion fallback both failed to meet the residual test."""

    def __init__(
        self,
        message: str,
        partial_roots: Optional[Sequence[complex]] = None,
        residuals: Optional[Sequence[float]] = None,
    ) -> None:
        super().__init__(message)
        self.partial_roots = list(partial_roots) if partial_roots is not None else []
        self.residuals = list(residuals) if residuals is not None else []


class BudgetExceededError(CorrlabError, ValueError):
    """A degree, leaf or node budget would be exceeded. The message names the fallback."""


class SupportError(CorrlabError, ValueError):
    """A localized test function leaks outside the inner chart square."""


class GridRefinementError(CorrlabError, RuntimeError):
    """Too many quadrature nodes were flagged (ramification, points at infinity)."""


class ConfigValidationError(CorrlabError, ValueError):
    """Experiment configuration failed validation; ``errors`` lists every field problem."""

    def __init__(self, errors: List[str]) -> None:
        super().__init__("invalid configuration: " + "; ".join(errors))
        self.errors = list(errors)


class ExtraneousFactorWarning(UserWarning):
    """Resultant still exceeds the expected bidegree after fiber stripping."""


class NumericalWarning(UserWarning):
    """Recoverable numerical event: re-drawn seed, flagged nodes, unstable ratio."""


__all__ = [
    "CorrlabError",
    "DegeneratePolynomialError",
    "RootSolverError",
    "BudgetExceededError",
    "SupportError",
    "GridRefinementError",
    "ConfigValidationError",
    "ExtraneousFactorWarning",
    "NumericalWarning",
]
