"""
Test 2-forms on P¹ x P¹.

A TestForm stores coefficient functions against the six basis 2-forms in the standard
affine coordinates (x, y):

    a: dx^dx̄   b: dy^dȳ   c: dx^dȳ   e: dy^dx̄   p: dx^dy   q: dx̄^dȳ

with the real-pairing convention that every basis form carries the factor i/2, so
(i/2) dz^dz̄ is the Lebesgue area element. Under this convention the Fubini-Study form
is omega = (i/2) rho dz^dz̄ with rho = (1/π)(1+|z|²)^-2 and the product form is
Omega = (pi_1^* omega + pi_2^* omega) / sqrt(2).

Localized forms come from a product atlas: chart 0 is z, chart 1 is w = 1/z, and the
chart square map tau(X) = X / L + (1+i)/2 sends the chart coordinate onto the torus
square used by the Fourier machinery.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import SupportError
from .fourier import INNER_SQUARE, TorusFunction, smooth_step
from .projective import fs_density, fs_random_points, invert, sphere_embedding

Coefficient = Callable[[np.ndarray, np.ndarray], np.ndarray]
Chart = Tuple[int, int]

COMPONENTS = ("a", "b", "c", "e", "p", "q")
COMPONENT_BASIS: Dict[str, Tuple[str, str]] = {
    "a": ("dx", "dxbar"),
    "b": ("dy", "dybar"),
    "c": ("dx", "dybar"),
    "e": ("dy", "dxbar"),
    "p": ("dx", "dy"),
    "q": ("dxbar", "dybar"),
}
# powers of (1+|x|²), (1+|y|²) that make a coefficient chart-invariant in size
_COMPONENT_WEIGHT: Dict[str, Tuple[int, int]] = {
    "a": (2, 0),
    "b": (0, 2),
    "c": (1, 1),
    "e": (1, 1),
    "p": (1, 1),
    "q": (1, 1),
}

CHART_SCALE = 4.4  # L in tau(X) = X / L + (1+i)/2
PARTITION_RADII = (0.91, 1.1)  # chart-0 weight falls from 1 to 0 between these moduli


@dataclass(frozen=True)
class TestForm:
    """Smooth (or C^alpha) 2-form on P¹ x P¹ given by standard-coordinate coefficients."""

    __test__ = False

    name: str
    coefficients: Mapping[str, Coefficient] = field(default_factory=dict)
    alpha: float = 5.0
    norm_bound: float = 1.0
    support: str = "global"  # "global" or "chart"
    chart: Optional[Chart] = None

    def __post_init__(self) -> None:
        unknown = set(self.coefficients) - set(COMPONENTS)
        if unknown:
            raise ValueError(f"unknown form components {sorted(unknown)} (allowed: {COMPONENTS})")
        if self.support not in ("global", "chart"):
            raise ValueError(f"support must be 'global' or 'chart', got {self.support!r}")
        if self.support == "chart" and self.chart is None:
            raise ValueError("chart-supported forms need a chart pair")

    def has(self, key: str) -> bool:
        return key in self.coefficients

    @property
    def keys(self) -> Tuple[str, ...]:
        return tuple(k for k in COMPONENTS if k in self.coefficients)

    def component(self, key: str, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
        if key not in self.coefficients:
            return np.zeros(x.shape, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.asarray(self.coefficients[key](x, y), dtype=complex) * np.ones(x.shape)

    def scaled(self, factor: complex, name: Optional[str] = None) -> "TestForm":
        coeffs = {k: _scale(fn, factor) for k, fn in self.coefficients.items()}
        return TestForm(
            name or f"{factor}*{self.name}",
            coeffs,
            self.alpha,
            self.norm_bound * abs(factor),
            self.support,
            self.chart,
        )

    def __add__(self, other: "TestForm") -> "TestForm":
        keys = set(self.coefficients) | set(other.coefficients)
        coeffs = {k: _sum(self, other, k) for k in keys}
        same_chart = self.support == other.support == "chart" and self.chart == other.chart
        return TestForm(
            f"{self.name}+{other.name}",
            coeffs,
            min(self.alpha, other.alpha),
            self.norm_bound + other.norm_bound,
            "chart" if same_chart else "global",
            self.chart if same_chart else None,
        )

    def with_components(self, name: Optional[str] = None, **extra: Coefficient) -> "TestForm":
        coeffs = dict(self.coefficients)
        coeffs.update(extra)
        return TestForm(
            name or self.name, coeffs, self.alpha, self.norm_bound, self.support, self.chart
        )

    def pointwise_norm(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Largest coefficient measured against Fubini-Study unit basis forms."""
        x, y = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
        wx = 1.0 + np.abs(x) ** 2
        wy = 1.0 + np.abs(y) ** 2
        out = np.zeros(x.shape)
        for key in self.keys:
            px, py = _COMPONENT_WEIGHT[key]
            with np.errstate(over="ignore", invalid="ignore"):
                size = np.pi * np.abs(self.component(key, x, y)) * wx**px * wy**py
            out = np.maximum(out, np.nan_to_num(size, nan=0.0, posinf=0.0))
        return out

    def check_bound(self, rng: np.random.Generator, samples: int = 1000) -> bool:
        x = fs_random_points(rng, samples)
        y = fs_random_points(rng, samples)
        return bool(np.max(self.pointwise_norm(x, y)) <= self.norm_bound * (1.0 + 1e-9))


def _scale(fn: Coefficient, factor: complex) -> Coefficient:
    return lambda x, y: factor * fn(x, y)


def _sum(first: TestForm, second: TestForm, key: str) -> Coefficient:
    return lambda x, y: first.component(key, x, y) + second.component(key, x, y)


# ---------------------------------------------------------------------------
# Global forms
# ---------------------------------------------------------------------------


def fubini_study_density(z: np.ndarray) -> np.ndarray:
    """rho(z) = (1/π)(1+|z|²)^-2, the density of omega against Lebesgue area."""
    return fs_density(z)


def _height(z: np.ndarray) -> np.ndarray:
    return sphere_embedding(z)[2]


def fubini_study_form() -> TestForm:
    """Omega = (pi_1^* omega + pi_2^* omega) / sqrt(2)."""
    root2 = np.sqrt(2.0)
    return TestForm(
        "Omega",
        {
            "a": lambda x, y: fs_density(x) / root2,
            "b": lambda x, y: fs_density(y) / root2,
        },
        alpha=np.inf,
        norm_bound=1.0 / root2,
    )


def horizontal_form() -> TestForm:
    """a = rho(x) (1 + S3(x) S3(y)): smooth, seen only by the x-direction of a graph."""
    return TestForm(
        "horizontal",
        {"a": lambda x, y: fs_density(x) * (1.0 + _height(x) * _height(y))},
        alpha=np.inf,
        norm_bound=2.0,
    )


def vertical_form() -> TestForm:
    """b = rho(y) (1 + S3(x)) (1 + S3(y))."""
    return TestForm(
        "vertical",
        {"b": lambda x, y: fs_density(y) * (1.0 + _height(x)) * (1.0 + _height(y))},
        alpha=np.inf,
        norm_bound=4.0,
    )


def cross_form(strength: float = 1.0) -> TestForm:
    """
    Real mixed form with c = e = strength (1+|x|²)^-2 (1+|y|²)^-2.

    The (1+|.|²)^-2 decay keeps the coefficients bounded in every chart pair.
    """

    def coefficient(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return strength * np.pi**2 * fs_density(x) * fs_density(y)

    return TestForm(
        "cross",
        {"c": coefficient, "e": coefficient},
        alpha=np.inf,
        norm_bound=np.pi * abs(strength),
    )


def holomorphic_2form(strength: float = 1.0) -> Dict[str, Coefficient]:
    """(2,0) and (0,2) components that a holomorphic curve never sees."""

    def coefficient(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return strength * np.pi**2 * fs_density(x) * fs_density(y)

    return {"p": coefficient, "q": coefficient}


DEFAULT_FORMS: Dict[str, Callable[[], TestForm]] = {
    "Omega": fubini_study_form,
    "horizontal": horizontal_form,
    "vertical": vertical_form,
    "cross": cross_form,
}


# ---------------------------------------------------------------------------
# Atlas and localization
# ---------------------------------------------------------------------------


def chart_coordinate(z: np.ndarray, chart: int) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return invert(z) if chart else z


def chart_derivative(z: np.ndarray, chart: int) -> np.ndarray:
    """dZ/dz for the chart coordinate Z (1 or -1/z²); zero at infinity in chart 1."""
    z = np.asarray(z, dtype=complex)
    if not chart:
        return np.ones(z.shape, dtype=complex)
    w = invert(z)
    return -(w**2)


def chart_square(X: np.ndarray) -> np.ndarray:
    """tau(X) = X / L + (1+i)/2."""
    return np.asarray(X, dtype=complex) / CHART_SCALE + (0.5 + 0.5j)


def chart_square_inverse(s: np.ndarray) -> np.ndarray:
    return (np.asarray(s, dtype=complex) - (0.5 + 0.5j)) * CHART_SCALE


def partition_weight(z: np.ndarray, chart: int) -> np.ndarray:
    """Smooth partition of unity on P¹ subordinate to the two charts."""
    modulus = np.abs(np.asarray(z, dtype=complex))
    lo, hi = PARTITION_RADII
    w0 = 1.0 - smooth_step((modulus - lo) / (hi - lo))
    return w0 if chart == 0 else 1.0 - w0


PRODUCT_CHARTS: Tuple[Chart, ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


def localize(form: TestForm) -> List[TestForm]:
    """Chart-supported pieces psi_cx(x) psi_cy(y) form; their pairings sum to the global one."""
    pieces = []
    for chart in PRODUCT_CHARTS:
        coeffs = {key: _localized(form, key, chart) for key in form.keys}
        pieces.append(
            TestForm(
                f"{form.name}@{chart[0]}{chart[1]}",
                coeffs,
                form.alpha,
                form.norm_bound,
                support="chart",
                chart=chart,
            )
        )
    return pieces


def _localized(form: TestForm, key: str, chart: Chart) -> Coefficient:
    def coefficient(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        weight = partition_weight(x, chart[0]) * partition_weight(y, chart[1])
        return weight * form.component(key, x, y)

    return coefficient


# ---------------------------------------------------------------------------
# Case forms
# ---------------------------------------------------------------------------

_CASE_KEYS = {1: "a", 2: "b", 3: "c"}


def check_inner_support(phi: TorusFunction, samples: int = 12, tolerance: float = 1e-12) -> None:
    """Raise SupportError when phi is nonzero somewhere in U² outside U0²."""
    s = (np.arange(samples) + 0.5) / samples
    S1, S2, S3, S4 = np.meshgrid(s, s, s, s, indexing="ij")
    lo, hi = INNER_SQUARE
    inside = np.ones(S1.shape, dtype=bool)
    for comp in (S1, S2, S3, S4):
        inside &= (comp >= lo) & (comp <= hi)
    values = np.abs(phi(S1 + 1j * S2, S3 + 1j * S4))
    outside_max = float(np.max(np.where(inside, 0.0, values)))
    if outside_max > tolerance:
        raise SupportError(
            f"test function is not supported in the inner square: |phi| = {outside_max:.3e} "
            "outside U0²"
        )


def build_case_test_form(
    case: int,
    phi: TorusFunction,
    chart: Chart = (0, 0),
    conjugate: bool = False,
    name: Optional[str] = None,
    norm_bound: float = 1.0,
) -> TestForm:
    """
    Local form phi(tau X, tau Y) times one basis form of the chart pair.

    Case 1 is phi dX^dX̄, case 2 phi dY^dȲ, case 3 phi dX^dȲ (phi dY^dX̄ when
    ``conjugate``), all in torus-square coordinates and converted to the standard
    affine coordinates through the chart Jacobians.
    """
    if case not in _CASE_KEYS:
        raise ValueError(f"case must be 1, 2 or 3, got {case}")
    if tuple(chart) not in PRODUCT_CHARTS:
        raise ValueError(f"invalid chart pair {chart!r}")
    check_inner_support(phi)
    cx, cy = chart
    key = "e" if (case == 3 and conjugate) else _CASE_KEYS[case]

    def local(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        sx = chart_square(chart_coordinate(x, cx))
        sy = chart_square(chart_coordinate(y, cy))
        in_square = _in_unit_square(sx) & _in_unit_square(sy)
        safe_x = np.where(in_square, sx, 0.5 + 0.5j)
        safe_y = np.where(in_square, sy, 0.5 + 0.5j)
        return np.where(in_square, phi(safe_x, safe_y), 0.0) / CHART_SCALE**2

    def coefficient(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        jx = chart_derivative(x, cx)
        jy = chart_derivative(y, cy)
        jx = np.where(np.isfinite(jx), jx, 0.0)
        jy = np.where(np.isfinite(jy), jy, 0.0)
        value = local(x, y)
        if key == "a":
            return value * np.abs(jx) ** 2
        if key == "b":
            return value * np.abs(jy) ** 2
        if key == "c":
            return value * jx * np.conj(jy)
        return value * jy * np.conj(jx)

    return TestForm(
        name or f"case{case}{'*' if conjugate else ''}@{cx}{cy}",
        {key: coefficient},
        alpha=5.0,
        norm_bound=norm_bound,
        support="chart",
        chart=(cx, cy),
    )


def _in_unit_square(s: np.ndarray) -> np.ndarray:
    return (s.real > 0.0) & (s.real < 1.0) & (s.imag > 0.0) & (s.imag < 1.0)


__all__ = [
    "Coefficient",
    "COMPONENTS",
    "COMPONENT_BASIS",
    "CHART_SCALE",
    "PARTITION_RADII",
    "TestForm",
    "fubini_study_density",
    "fubini_study_form",
    "horizontal_form",
    "vertical_form",
    "cross_form",
    "holomorphic_2form",
    "DEFAULT_FORMS",
    "chart_coordinate",
    "chart_derivative",
    "chart_square",
    "chart_square_inverse",
    "partition_weight",
    "PRODUCT_CHARTS",
    "localize",
    "check_inner_support",
    "build_case_test_form",
]
