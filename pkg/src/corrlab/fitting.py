"""
Exponential rate fits for error sequences.

An error sequence e_n ~ C * lambda**n is a line in (n, log e_n); the slope is fitted by
ordinary least squares and the rate reported as exp(slope). Rows at or below the
quadrature noise floor are ignored so that discretization error is not read as dynamics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats

MIN_FIT_ROWS = 3
NOISE_FACTOR = 10.0  # rows need error > NOISE_FACTOR * noise


@dataclass
class RateFit:
    rate: Optional[float] = None  # None means indeterminate
    r_squared: Optional[float] = None
    slope: Optional[float] = None
    intercept: Optional[float] = None
    used: List[int] = field(default_factory=list)

    @property
    def indeterminate(self) -> bool:
        return self.rate is None

    def describe(self) -> str:
        if self.rate is None:
            return "indeterminate"
        return f"{self.rate:.4f} (R²={self.r_squared:.4f}, {len(self.used)} rows)"


def fit_exponential_rate(
    ns: Sequence[int],
    errors: Sequence[float],
    noise: Optional[Sequence[float]] = None,
    noise_factor: float = NOISE_FACTOR,
    min_rows: int = MIN_FIT_ROWS,
) -> RateFit:
    ns_arr = np.asarray(ns, dtype=float)
    err = np.asarray(errors, dtype=float)
    usable = np.isfinite(err) & (err > 0.0)
    if noise is not None:
        usable &= err > noise_factor * np.asarray(noise, dtype=float)
    if int(usable.sum()) < min_rows or np.unique(ns_arr[usable]).size < 2:
        return RateFit(used=[int(n) for n in ns_arr[usable]])
    res = stats.linregress(ns_arr[usable], np.log(err[usable]))
    return RateFit(
        rate=float(np.exp(res.slope)),
        r_squared=float(res.rvalue**2),
        slope=float(res.slope),
        intercept=float(res.intercept),
        used=[int(n) for n in ns_arr[usable]],
    )


def predicted_rate(d1: int, d2: int, alpha: float = 5.0) -> float:
    """
    Rate envelope (d1/d2)**(alpha/5) for C^alpha test forms of an unbalanced correspondence.

    Any constant strictly above this value is an admissible rate; balanced correspondences
    have no closed-form prediction and return 1.0.
    """
    if d1 >= d2:
        return 1.0
    return float((d1 / d2) ** (alpha / 5.0))


__all__ = ["MIN_FIT_ROWS", "NOISE_FACTOR", "RateFit", "fit_exponential_rate", "predicted_rate"]
