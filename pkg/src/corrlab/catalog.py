"""
Built-in correspondences and random graph generators.
"""
from __future__ import annotations

from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .correspondence import Correspondence
from .polynomial import BihomogeneousPolynomial

NWM22_SEED = 20240917


def _from_terms(shape: Tuple[int, int], terms: Dict[Tuple[int, int], complex]) -> BihomogeneousPolynomial:
    coeffs = np.zeros((shape[0] + 1, shape[1] + 1), dtype=complex)
    for (i, j), c in terms.items():
        coeffs[i, j] = c
    return BihomogeneousPolynomial(coeffs)


def square() -> Correspondence:
    """y = x²: a rational map, (d1, d2) = (1, 2)."""
    return Correspondence(_from_terms((2, 1), {(0, 1): 1.0, (2, 0): -1.0}), name="square")


def sqrt() -> Correspondence:
    """y² = x: the adjoint of ``square``, (d1, d2) = (2, 1)."""
    return Correspondence(_from_terms((1, 2), {(0, 2): 1.0, (1, 0): -1.0}), name="sqrt")


def chebyshev() -> Correspondence:
    """y = x² - 2, whose Julia set is the interval [-2, 2]."""
    return Correspondence(
        _from_terms((2, 1), {(0, 1): 1.0, (2, 0): -1.0, (0, 0): 2.0}), name="chebyshev"
    )


def moebius_pair() -> Correspondence:
    """y² = x²: the union of the graphs of z -> z and z -> -z."""
    return Correspondence(_from_terms((2, 2), {(0, 2): 1.0, (2, 0): -1.0}), name="moebius-pair")


def quadric() -> Correspondence:
    """y² - x² - 1: a smooth balanced (2, 2) correspondence."""
    return Correspondence(
        _from_terms((2, 2), {(0, 2): 1.0, (2, 0): -1.0, (0, 0): -1.0}), name="quadric"
    )


def identity() -> Correspondence:
    return Correspondence(_from_terms((1, 1), {(0, 1): 1.0, (1, 0): -1.0}), name="identity")


def random_correspondence(
    d1: int, d2: int, rng: Optional[np.random.Generator] = None, name: Optional[str] = None
) -> Correspondence:
    """Graph with i.i.d. complex Gaussian coefficients: generically smooth and irreducible."""
    if d1 < 1 or d2 < 1:
        raise ValueError(f"degrees must be positive, got d1={d1}, d2={d2}")
    rng = rng if rng is not None else np.random.default_rng()
    shape = (d2 + 1, d1 + 1)
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return Correspondence(BihomogeneousPolynomial(coeffs), name=name or f"random-{d1}-{d2}")


def nwm22_seeded(seed: int = NWM22_SEED) -> Correspondence:
    """Random balanced (2, 2) correspondence from a fixed seed."""
    return random_correspondence(2, 2, np.random.default_rng(seed), name="nwm22-seeded")


BUILTINS: Dict[str, Callable[[], Correspondence]] = {
    "square": square,
    "sqrt": sqrt,
    "chebyshev": chebyshev,
    "moebius-pair": moebius_pair,
    "nwm22-seeded": nwm22_seeded,
    "quadric": quadric,
    "identity": identity,
}


def builtin(name: str) -> Correspondence:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"Unknown built-in correspondence {name!r} (available: {', '.join(sorted(BUILTINS))})"
        ) from None
    return factory()


__all__ = [
    "NWM22_SEED",
    "square",
    "sqrt",
    "chebyshev",
    "moebius_pair",
    "quadric",
    "identity",
    "random_correspondence",
    "nwm22_seeded",
    "BUILTINS",
    "builtin",
]
