"""
Points of the Riemann sphere P¹ and its two affine charts.

A projective point is stored as a complex scalar; the point at infinity is the
complex value ``INFINITY``. Chart 0 is the affine coordinate z, chart 1 is w = 1/z.
Numerical work switches to chart 1 as soon as |z| > 1.
"""
from __future__ import annotations

from typing import Tuple, Union

import numpy as np

INFINITY = complex(np.inf, 0.0)

ArrayLike = Union[complex, float, np.ndarray]


def is_infinite(z: ArrayLike) -> np.ndarray:
    return np.isinf(np.asarray(z, dtype=complex))


def invert(z: ArrayLike) -> np.ndarray:
    """Projective inversion z -> 1/z with 0 <-> infinity."""
    arr = np.asarray(z, dtype=complex)
    out = np.empty_like(arr)
    inf = np.isinf(arr)
    zero = arr == 0
    regular = ~(inf | zero)
    out[inf] = 0.0
    out[zero] = INFINITY
    with np.errstate(over="ignore", invalid="ignore"):
        out[regular] = 1.0 / arr[regular]
    return out


def chart_index(z: ArrayLike) -> np.ndarray:
    """0 where |z| <= 1, 1 elsewhere (infinity included)."""
    arr = np.asarray(z, dtype=complex)
    return np.where(np.isinf(arr) | (np.abs(arr) > 1.0), 1, 0)


def to_chart(z: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """Return (coordinate, chart) with |coordinate| <= 1."""
    arr = np.asarray(z, dtype=complex)
    chart = chart_index(arr)
    coords = np.where(chart == 1, invert(arr), arr)
    return coords, chart


def from_chart(coords: ArrayLike, chart: ArrayLike) -> np.ndarray:
    coords = np.asarray(coords, dtype=complex)
    chart = np.asarray(chart)
    return np.where(chart == 1, invert(coords), coords)


def sphere_embedding(z: ArrayLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Unit-sphere model of P¹: z -> (2 Re z, 2 Im z, |z|² - 1) / (1 + |z|²).

    Evaluated in the chart containing z, so infinity maps to (0, 0, 1) without
    overflow. Polynomials in these coordinates are smooth functions on P¹.
    """
    coords, chart = to_chart(z)
    r2 = np.abs(coords) ** 2
    denom = 1.0 + r2
    s1 = 2.0 * coords.real / denom
    s2 = np.where(chart == 1, -2.0 * coords.imag, 2.0 * coords.imag) / denom
    s3 = np.where(chart == 1, 1.0 - r2, r2 - 1.0) / denom
    return s1, s2, s3


def fs_density(z: ArrayLike) -> np.ndarray:
    """Fubini-Study density (1/π)(1+|z|²)⁻² against Lebesgue area; zero at infinity."""
    arr = np.asarray(z, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        dens = 1.0 / (np.pi * (1.0 + np.abs(arr) ** 2) ** 2)
    return np.where(np.isinf(arr), 0.0, dens)


def area_jacobian(z: ArrayLike) -> np.ndarray:
    """dA/dω = π(1+|z|²)²: converts a probability-grid weight into Lebesgue area."""
    arr = np.asarray(z, dtype=complex)
    return np.pi * (1.0 + np.abs(arr) ** 2) ** 2


def fs_random_points(rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw points distributed by the normalized Fubini-Study measure."""
    t = rng.uniform(-1.0, 1.0, size=size)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=size)
    return np.sqrt((1.0 + t) / (1.0 - t)) * np.exp(1j * phi)


def parse_point(text: str) -> complex:
    """Parse "inf", "2", "0.3+0.1j" or "0.3+0.1i" into a projective point."""
    cleaned = text.strip().lower().replace(" ", "")
    if cleaned in ("inf", "infinity", "∞"):
        return INFINITY
    cleaned = cleaned.replace("i", "j")
    try:
        return complex(cleaned)
    except ValueError as exc:
        raise ValueError(f"Not a projective point: {text!r}") from exc


def format_point(z: complex) -> str:
    if np.isinf(z):
        return "inf"
    return f"{z.real:.17g}{z.imag:+.17g}j"


__all__ = [
    "INFINITY",
    "is_infinite",
    "invert",
    "chart_index",
    "to_chart",
    "from_chart",
    "sphere_embedding",
    "fs_density",
    "area_jacobian",
    "fs_random_points",
    "parse_point",
    "format_point",
]
