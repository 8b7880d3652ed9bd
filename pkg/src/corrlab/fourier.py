"""
Fourier machinery on the 4-torus for localized test forms.

A chart of P¹ is mapped onto the unit square U = (0, 1)² (identified with complex
numbers s = s1 + i s2); products of two charts give the 4-torus. Test functions
supported in the inner square U0² = [1/4, 3/4]⁴ expand as sum a_I exp(2πi I·s), and a
C^k function has |a_I| <= ||phi||_{C^k} / |I|^k with |I| the sup norm of the index.
Derivatives and C^k norms are taken in angular coordinates theta = 2π s.

The cutoff chi(s) = eta(s1) eta(s2) is 1 on a neighborhood of U0 and vanishes near the
boundary of U.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import expit

Index = Tuple[int, int, int, int]
TorusFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]

INNER_SQUARE = (0.25, 0.75)
CUTOFF_RAMP = (0.01, 0.24)  # eta rises on this interval and falls on its mirror image
FOURIER_GRID = 32
TRUNCATION_CONSTANT = 80.0
INDEX_COUNT_CONSTANT = 90.0


# ---------------------------------------------------------------------------
# Cutoff
# ---------------------------------------------------------------------------


def smooth_step(u: np.ndarray, derivative: int = 0) -> np.ndarray:
    """
    C-infinity step: 0 for u <= 0, 1 for u >= 1, exp(-1/u) / (exp(-1/u) + exp(-1/(1-u))) between.

    ``derivative`` selects the value (0) or the first/second derivative in u.
    """
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    v = np.where(inside, u, 0.5)
    g = 1.0 / (1.0 - v) - 1.0 / v
    s = expit(g)
    if derivative == 0:
        return np.where(inside, s, np.where(u >= 1.0, 1.0, 0.0))
    g1 = 1.0 / (1.0 - v) ** 2 + 1.0 / v**2
    if derivative == 1:
        return np.where(inside, s * (1.0 - s) * g1, 0.0)
    if derivative == 2:
        g2 = 2.0 / (1.0 - v) ** 3 - 2.0 / v**3
        return np.where(inside, s * (1.0 - s) * ((1.0 - 2.0 * s) * g1**2 + g2), 0.0)
    raise ValueError(f"smooth_step derivatives are available up to order 2, got {derivative}")


def eta(t: np.ndarray, derivative: int = 0) -> np.ndarray:
    """One-dimensional cutoff on [0, 1] and its derivatives in t."""
    lo, hi = CUTOFF_RAMP
    width = hi - lo
    t = np.asarray(t, dtype=float)
    u_rise = (t - lo) / width
    u_fall = (1.0 - lo - t) / width
    rise = [smooth_step(u_rise, k) / width**k for k in range(derivative + 1)]
    fall = [smooth_step(u_fall, k) * (-1.0 / width) ** k for k in range(derivative + 1)]
    if derivative == 0:
        return rise[0] * fall[0]
    if derivative == 1:
        return rise[1] * fall[0] + rise[0] * fall[1]
    return rise[2] * fall[0] + 2.0 * rise[1] * fall[1] + rise[0] * fall[2]


def cutoff(s: np.ndarray) -> np.ndarray:
    """chi(s) = eta(Re s) eta(Im s) on the unit square."""
    s = np.asarray(s, dtype=complex)
    return eta(s.real) * eta(s.imag)


def cutoff_c2_norm(samples: int = 4001) -> float:
    """
    max over |alpha| <= 2 of sup |d^alpha chi| in angular coordinates, on a grid.

    chi is separable, so each mixed derivative is a product of one-dimensional sups.
    """
    t = np.linspace(0.0, 1.0, samples)
    sups = [float(np.max(np.abs(eta(t, k)))) / (2.0 * np.pi) ** k for k in range(3)]
    candidates = [sups[i] * sups[j] for i in range(3) for j in range(3) if i + j <= 2]
    return max(candidates)


# ---------------------------------------------------------------------------
# C^5 bump
# ---------------------------------------------------------------------------


def _bump_profile() -> Polynomial:
    """(1 - r²)^6 with r = 4 (t - 1/2): C^5 across the edges of [1/4, 3/4]."""
    r = Polynomial([-2.0, 4.0])
    return (1.0 - r**2) ** 6


def _polynomial_sup(p: Polynomial, lo: float, hi: float) -> float:
    crit = p.deriv().roots()
    crit = crit[np.isreal(crit)].real
    crit = crit[(crit >= lo) & (crit <= hi)]
    pts = np.concatenate([[lo, hi], crit])
    return float(np.max(np.abs(p(pts))))


def bump_normalization(order: int = 5) -> float:
    """
    max(sup |B|, max_k sup |d^order B / d theta_k^order|) for the separable bump B.

    Dividing by it gives a function whose coefficients satisfy |a_I| <= |I|^-order.
    """
    profile = _bump_profile()
    lo, hi = INNER_SQUARE
    sup0 = _polynomial_sup(profile, lo, hi)
    sup_k = _polynomial_sup(profile.deriv(order), lo, hi) / (2.0 * np.pi) ** order
    return max(sup0**4, sup_k * sup0**3)


def bump_function(normalized: bool = True, order: int = 5) -> TorusFunction:
    """Separable C^5 bump supported in the inner square U0² (in both chart factors)."""
    profile = _bump_profile()
    lo, hi = INNER_SQUARE
    scale = bump_normalization(order) if normalized else 1.0

    def beta(t: np.ndarray) -> np.ndarray:
        return np.where((t > lo) & (t < hi), profile(t), 0.0)

    def phi(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        y = np.asarray(y, dtype=complex)
        return beta(x.real) * beta(x.imag) * beta(y.real) * beta(y.imag) / scale

    return phi


# ---------------------------------------------------------------------------
# Coefficients and bounds
# ---------------------------------------------------------------------------


def fourier_coefficients(
    phi: TorusFunction, N: int, grid: int = FOURIER_GRID
) -> Dict[Index, complex]:
    """a_I for |I| <= N by the product trapezoid rule (a 4-D FFT) on a grid⁴ lattice."""
    if N < 0:
        raise ValueError(f"N must be >= 0, got {N}")
    if 2 * N >= grid:
        raise ValueError(f"N = {N} needs a grid larger than {2 * N} points per axis")
    s = np.arange(grid) / grid
    S1, S2, S3, S4 = np.meshgrid(s, s, s, s, indexing="ij")
    values = phi(S1 + 1j * S2, S3 + 1j * S4)
    spectrum = np.fft.fftn(values) / grid**4
    out: Dict[Index, complex] = {}
    rng = range(-N, N + 1)
    for index in itertools.product(rng, rng, rng, rng):
        out[index] = complex(spectrum[tuple(i % grid for i in index)])
    return out


def index_norm(index: Index) -> int:
    return max(abs(i) for i in index)


def decay_ratio(coeffs: Dict[Index, complex], order: int = 5, n_min: int = 1) -> float:
    """max |a_I| |I|^order over the indices with |I| >= n_min."""
    ratios = [abs(a) * index_norm(I) ** order for I, a in coeffs.items() if index_norm(I) >= n_min]
    return max(ratios) if ratios else 0.0


def fourier_partial_sum(coeffs: Dict[Index, complex], x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    total = np.zeros(np.broadcast(x, y).shape, dtype=complex)
    for (i1, i2, i3, i4), a in coeffs.items():
        if a == 0:
            continue
        phase = i1 * x.real + i2 * x.imag + i3 * y.real + i4 * y.imag
        total = total + a * np.exp(2j * np.pi * phase)
    return total


def partial_sum_error(
    phi: TorusFunction, coeffs: Dict[Index, complex], points: int = 4
) -> float:
    """sup |phi - S_N phi| over the midpoint lattice ((j + 1/2) / points)⁴."""
    if points < 1:
        raise ValueError(f"points must be >= 1, got {points}")
    s = (np.arange(points) + 0.5) / points
    S1, S2, S3, S4 = np.meshgrid(s, s, s, s, indexing="ij")
    x, y = S1 + 1j * S2, S3 + 1j * S4
    return float(np.max(np.abs(phi(x, y) - fourier_partial_sum(coeffs, x, y))))


def cutoff_defect(phi: TorusFunction, points: int = 16) -> float:
    """sup |phi - chi(x) chi(y) phi| on the midpoint lattice; zero when chi = 1 on supp phi."""
    s = (np.arange(points) + 0.5) / points
    S1, S2, S3, S4 = np.meshgrid(s, s, s, s, indexing="ij")
    x, y = S1 + 1j * S2, S3 + 1j * S4
    values = phi(x, y)
    return float(np.max(np.abs(values * (1.0 - cutoff(x) * cutoff(y)))))


def shell_count(m: int) -> int:
    """Number of I in Z⁴ with |I| = m."""
    if m < 0:
        raise ValueError(f"shell radius must be >= 0, got {m}")
    if m == 0:
        return 1
    return (2 * m + 1) ** 4 - (2 * m - 1) ** 4


def index_count(N: int) -> int:
    """Number of I in Z⁴ with |I| <= N."""
    return (2 * N + 1) ** 4


def index_count_bound(N: int) -> float:
    return INDEX_COUNT_CONSTANT * float(N) ** 4


@dataclass
class TruncationBound:
    N: int
    bound: float  # 80 / N
    direct_tail: float  # sum of |I|^-5 over N < |I| <= n_big
    n_big: int


def truncation_error_bound(N: int, n_big: int = 100_000) -> TruncationBound:
    """The tail bound 80/N next to the shell-by-shell sum of |I|^-5 beyond N."""
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    m = np.arange(N + 1, n_big + 1, dtype=float)
    shells = (2.0 * m + 1.0) ** 4 - (2.0 * m - 1.0) ** 4
    tail = float(np.sum(shells / m**5))
    return TruncationBound(N=N, bound=TRUNCATION_CONSTANT / N, direct_tail=tail, n_big=n_big)


__all__ = [
    "Index",
    "TorusFunction",
    "INNER_SQUARE",
    "CUTOFF_RAMP",
    "FOURIER_GRID",
    "smooth_step",
    "eta",
    "cutoff",
    "cutoff_c2_norm",
    "bump_normalization",
    "bump_function",
    "fourier_coefficients",
    "index_norm",
    "decay_ratio",
    "fourier_partial_sum",
    "partial_sum_error",
    "cutoff_defect",
    "shell_count",
    "index_count",
    "index_count_bound",
    "TruncationBound",
    "truncation_error_bound",
]
