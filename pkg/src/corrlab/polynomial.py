"""
Complex polynomial arithmetic for correspondences on P¹.

This module covers:
- Univariate root extraction with projective completion and multiplicities
  (batched Aberth-Ehrlich simultaneous iteration, companion-matrix fallback).
- Bihomogeneous graph polynomials of bidegree (m, n) = (d2, d1), their affine charts
  and exact partial derivatives.
- Sylvester resultants by evaluation on roots-of-unity grids and FFT interpolation.
- Fiber-factor stripping and the "bidegree m n" text format.

Every bihomogeneous result is renormalized to maximum coefficient modulus 1.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DegeneratePolynomialError, ExtraneousFactorWarning, RootSolverError
from .projective import INFINITY, invert

Chart = Tuple[int, int]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class RootConfig:
    tolerance: float = 1e-8  # residual bound relative to the coefficient scale
    cluster_radius: float = 1e-6  # scaled by max(1, |root|)
    max_iter: int = 500
    step_tolerance: float = 1e-13  # Aberth correction, relative to 1 + |z|
    zero_tolerance: float = 1e-14  # coefficients below this times the max count as zero


DEFAULT_ROOT_CONFIG = RootConfig()


@dataclass(frozen=True)
class Root:
    point: complex
    multiplicity: int = 1

    @property
    def is_infinite(self) -> bool:
        return bool(np.isinf(self.point))


@dataclass(frozen=True, eq=False)
class UnivariatePoly:
    """Polynomial with ascending complex coefficients."""

    coefficients: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.coefficients, dtype=complex).ravel()
        if arr.size == 0:
            arr = np.zeros(1, dtype=complex)
        arr.setflags(write=False)
        object.__setattr__(self, "coefficients", arr)

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coefficients)))

    @property
    def degree(self) -> int:
        """Index of the last nonzero coefficient; -1 for the zero polynomial."""
        scale = self.scale
        if scale == 0.0:
            return -1
        nonzero = np.flatnonzero(np.abs(self.coefficients) > DEFAULT_ROOT_CONFIG.zero_tolerance * scale)
        return int(nonzero[-1])

    @property
    def is_zero(self) -> bool:
        return self.degree < 0

    def trimmed(self) -> "UnivariatePoly":
        return UnivariatePoly(self.coefficients[: max(self.degree, 0) + 1])

    def derivative(self) -> "UnivariatePoly":
        return UnivariatePoly(npoly.polyder(self.coefficients))

    def __call__(self, z: complex | np.ndarray) -> complex | np.ndarray:
        return npoly.polyval(z, self.coefficients)


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------


def _horner(coeffs: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate rows of ascending ``coeffs`` (B, d+1) and their derivatives at z (B, k)."""
    p = np.repeat(coeffs[:, -1:], z.shape[1], axis=1).astype(complex)
    dp = np.zeros_like(p)
    for k in range(coeffs.shape[1] - 2, -1, -1):
        dp = dp * z + p
        p = p * z + coeffs[:, k : k + 1]
    return p, dp


def relative_residuals(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """
    |p(z)| relative to the coefficient scale, measured in the chart where |z| <= 1.

    ``coeffs`` is (B, d+1) ascending, ``z`` is (B, k) finite roots.
    """
    scale = np.sum(np.abs(coeffs), axis=1, keepdims=True)
    scale = np.where(scale == 0.0, 1.0, scale)
    inside = np.abs(z) <= 1.0
    z_in = np.where(inside, z, 0.0)
    w_out = np.where(inside, 0.0, 1.0 / np.where(inside, 1.0, z))
    p_in, _ = _horner(coeffs, z_in)
    p_out, _ = _horner(coeffs[:, ::-1], w_out)
    return np.where(inside, np.abs(p_in), np.abs(p_out)) / scale


def _linear_roots(coeffs: np.ndarray) -> np.ndarray:
    return (-coeffs[:, 0] / coeffs[:, 1])[:, None]


def _quadratic_roots(coeffs: np.ndarray) -> np.ndarray:
    c, b, a = coeffs[:, 0], coeffs[:, 1], coeffs[:, 2]
    disc = np.sqrt(b * b - 4.0 * a * c)
    sign = np.where((np.conj(b) * disc).real >= 0.0, 1.0, -1.0)
    q = -0.5 * (b + sign * disc)
    safe_q = np.where(q == 0.0, 1.0, q)
    r1 = np.where(q == 0.0, 0.0, q / a)
    r2 = np.where(q == 0.0, 0.0, c / safe_q)
    return np.stack([r1, r2], axis=1)


def _aberth(coeffs: np.ndarray, config: RootConfig) -> np.ndarray:
    """Batched Aberth-Ehrlich iteration on rows with nonzero leading coefficient."""
    batch, d = coeffs.shape[0], coeffs.shape[1] - 1
    monic = coeffs / coeffs[:, -1:]
    abs_monic = np.abs(monic)
    radius = abs_monic[:, 0] ** (1.0 / d)
    radius = np.where(radius > 0.0, radius, 1.0)
    angles = 2.0 * np.pi * np.arange(d) / d + 0.4
    z = radius[:, None] * np.exp(1j * angles)[None, :]
    active = np.ones(batch, dtype=bool)
    off_diag = ~np.eye(d, dtype=bool)
    for _ in range(config.max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        zi = z[idx]
        p, dp = _horner(monic[idx], zi)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = np.where(dp != 0.0, p / dp, p)
            diff = zi[:, :, None] - zi[:, None, :]
            inv = np.where(off_diag, 1.0 / np.where(off_diag, diff, 1.0), 0.0)
            step = ratio / (1.0 - ratio * inv.sum(axis=2))
        step = np.where(np.isfinite(step), step, 0.0)
        zi = zi - step
        z[idx] = zi
        scale, _ = _horner(abs_monic[idx], np.maximum(np.abs(zi), 1.0))
        small_step = np.abs(step) <= config.step_tolerance * (1.0 + np.abs(zi))
        tiny_residual = np.abs(p) <= 8.0 * _EPS * scale.real
        done = np.all(small_step | tiny_residual, axis=1)
        active[idx[done]] = False
    return z


def _finite_roots(coeffs: np.ndarray, config: RootConfig) -> np.ndarray:
    d = coeffs.shape[1] - 1
    if d == 1:
        return _linear_roots(coeffs)
    if d == 2:
        return _quadratic_roots(coeffs)
    chunk = max(1, 2_000_000 // (d * d))
    roots = np.concatenate(
        [_aberth(coeffs[s : s + chunk], config) for s in range(0, coeffs.shape[0], chunk)]
    )
    residual = relative_residuals(coeffs, roots)
    bad_rows = np.flatnonzero(~np.all(np.isfinite(roots) & (residual <= config.tolerance), axis=1))
    for row in bad_rows:
        fallback = np.roots(coeffs[row, ::-1])
        if fallback.size != d:
            raise RootSolverError(
                "companion fallback lost roots", partial_roots=roots[row], residuals=residual[row]
            )
        fb_res = relative_residuals(coeffs[row : row + 1], fallback[None, :])[0]
        if not np.all(fb_res <= config.tolerance):
            raise RootSolverError(
                f"root iteration did not converge (max residual {float(np.max(fb_res)):.3e})",
                partial_roots=fallback,
                residuals=fb_res,
            )
        roots[row] = fallback
    return roots


def roots_batch(coeffs: np.ndarray, config: RootConfig = DEFAULT_ROOT_CONFIG) -> np.ndarray:
    """
    Projective roots of many polynomials of the same nominal degree.

    Args:
        coeffs: (B, n+1) ascending coefficients; n is the nominal degree.

    Returns:
        (B, n) complex array; missing degree is completed by ``INFINITY`` entries.

    Raises:
        DegeneratePolynomialError: a row is identically zero.
        RootSolverError: iteration and fallback both fail on some row.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    batch, n = coeffs.shape[0], coeffs.shape[1] - 1
    out = np.full((batch, n), INFINITY, dtype=complex)
    if n == 0:
        return out
    mags = np.abs(coeffs)
    scale = mags.max(axis=1)
    if np.any(scale == 0.0) or not np.all(np.isfinite(scale)):
        raise DegeneratePolynomialError("degenerate: zero or non-finite polynomial in batch")
    significant = mags > config.zero_tolerance * scale[:, None]
    eff_deg = n - np.argmax(significant[:, ::-1], axis=1)
    for deg in np.unique(eff_deg):
        if deg == 0:
            continue
        rows = np.flatnonzero(eff_deg == deg)
        out[rows, :deg] = _finite_roots(coeffs[rows, : deg + 1], config)
    return out


def cluster_roots(points: np.ndarray, radius: float) -> List[Root]:
    """Group finite roots closer than radius*max(1,|r|) and count infinite ones."""
    points = np.asarray(points, dtype=complex).ravel()
    finite = points[np.isfinite(points)]
    n_inf = int(points.size - finite.size)
    order = np.argsort(np.abs(finite), kind="stable")
    finite = finite[order]
    used = np.zeros(finite.size, dtype=bool)
    clusters: List[Root] = []
    for i in range(finite.size):
        if used[i]:
            continue
        tol = radius * max(1.0, abs(finite[i]))
        members = (~used) & (np.abs(finite - finite[i]) <= tol)
        used |= members
        clusters.append(Root(complex(np.mean(finite[members])), int(members.sum())))
    if n_inf:
        clusters.append(Root(INFINITY, n_inf))
    return clusters


def roots(
    p: UnivariatePoly,
    tolerance: float = DEFAULT_ROOT_CONFIG.tolerance,
    nominal_degree: Optional[int] = None,
    config: RootConfig = DEFAULT_ROOT_CONFIG,
) -> List[Root]:
    """
    Roots of p as a projective multiset.

    Returns exactly ``nominal_degree`` roots counted with multiplicity (default: the
    degree of p); the missing degree sits at infinity.
    """
    if p.is_zero:
        raise DegeneratePolynomialError("degenerate: zero polynomial has no root multiset")
    deg = p.degree
    nominal = deg if nominal_degree is None else int(nominal_degree)
    if nominal < deg:
        raise ValueError(f"nominal degree {nominal} below actual degree {deg}")
    cfg = replace(config, tolerance=tolerance)
    coeffs = np.zeros(nominal + 1, dtype=complex)
    coeffs[: deg + 1] = p.coefficients[: deg + 1]
    pts = roots_batch(coeffs[None, :], cfg)[0]
    return cluster_roots(pts, cfg.cluster_radius)


def expand_roots(found: Sequence[Root]) -> np.ndarray:
    """Flatten a root multiset into an array with repetitions."""
    return np.array([r.point for r in found for _ in range(r.multiplicity)], dtype=complex)


# ---------------------------------------------------------------------------
# Bihomogeneous graph polynomials
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BihomogeneousPolynomial:
    """
    Form of bidegree (m, n) on P¹×P¹.

    ``coefficients[i, j]`` multiplies x0^(m-i) x1^i y0^(n-j) y1^j, so in the affine
    chart x = x1/x0, y = y1/y0 the polynomial reads sum C[i, j] x^i y^j. For a graph,
    m = d2 (preimage count) and n = d1 (image count).
    """

    coefficients: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.coefficients, dtype=complex)
        if arr.ndim != 2:
            raise ValueError(f"coefficient array must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficient array contains NaN or infinity")
        scale = float(np.max(np.abs(arr))) if arr.size else 0.0
        if scale == 0.0:
            raise DegeneratePolynomialError("degenerate: graph polynomial is identically zero")
        if abs(scale - 1.0) > 4.0 * _EPS:
            arr = arr / scale
        arr.setflags(write=False)
        object.__setattr__(self, "coefficients", arr)

    @property
    def bidegree(self) -> Tuple[int, int]:
        m, n = self.coefficients.shape
        return m - 1, n - 1

    @property
    def m(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def n(self) -> int:
        return self.coefficients.shape[1] - 1

    def chart_coefficients(self, chart: Chart = (0, 0)) -> np.ndarray:
        """Affine coefficients in the chart pair (cx, cy); chart 1 means 1/x (or 1/y)."""
        cx, cy = chart
        arr = self.coefficients
        if cx:
            arr = arr[::-1, :]
        if cy:
            arr = arr[:, ::-1]
        return arr

    def evaluate(self, x: np.ndarray, y: np.ndarray, chart: Chart = (0, 0)) -> np.ndarray:
        return npoly.polyval2d(np.asarray(x), np.asarray(y), self.chart_coefficients(chart))

    def transpose(self) -> "BihomogeneousPolynomial":
        return BihomogeneousPolynomial(self.coefficients.T.copy())

    def y_fiber(self, x: np.ndarray) -> np.ndarray:
        """
        Coefficients (K, n+1) in y of P(x, ·) for each x, taken in the x-chart that
        keeps the evaluation point in the unit disc. Roots are unchanged by the chart.
        """
        x = np.asarray(x, dtype=complex).ravel()
        far = np.isinf(x) | (np.abs(x) > 1.0)
        u = np.where(far, invert(x), 0.0)
        near_vals = npoly.polyval(np.where(far, 0.0, x), self.coefficients, tensor=True)
        far_vals = npoly.polyval(u, self.coefficients[::-1, :], tensor=True)
        return np.where(far[None, :], far_vals, near_vals).T

    def x_fiber(self, y: np.ndarray) -> np.ndarray:
        return self.transpose().y_fiber(y)

    def diagonal(self) -> UnivariatePoly:
        """Substitute the y-pair by the x-pair: binary form of degree m + n."""
        m, n = self.bidegree
        out = np.zeros(m + n + 1, dtype=complex)
        for i in range(m + 1):
            out[i : i + n + 1] += self.coefficients[i]
        return UnivariatePoly(out)


def derivative_coefficients(
    P: BihomogeneousPolynomial, chart: Chart = (0, 0)
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact affine coefficients of (dP/dx, dP/dy) in the given chart pair."""
    if tuple(chart) not in ((0, 0), (0, 1), (1, 0), (1, 1)):
        raise ValueError(f"invalid chart pair {chart!r}")
    coeffs = P.chart_coefficients(chart)
    return npoly.polyder(coeffs, axis=0), npoly.polyder(coeffs, axis=1)


def evaluate_partials(
    P: BihomogeneousPolynomial, X: np.ndarray, Y: np.ndarray, chart: Chart
) -> Tuple[np.ndarray, np.ndarray]:
    dx, dy = derivative_coefficients(P, chart)
    return npoly.polyval2d(X, Y, dx), npoly.polyval2d(X, Y, dy)


# ---------------------------------------------------------------------------
# Resultants and fiber stripping
# ---------------------------------------------------------------------------


def _sylvester_matrices(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched Sylvester matrices for ascending a (..., p+1) and b (..., q+1)."""
    p, q = a.shape[-1] - 1, b.shape[-1] - 1
    size = p + q
    batch_shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    S = np.zeros(batch_shape + (size, size), dtype=complex)
    for r in range(q):
        S[..., r, r : r + p + 1] = a
    for r in range(p):
        S[..., q + r, r : r + q + 1] = b
    return S


def sylvester_resultant(
    A: BihomogeneousPolynomial, B: BihomogeneousPolynomial
) -> BihomogeneousPolynomial:
    """
    Eliminate the middle variable t from A(x, t) and B(t, z).

    A's second variable and B's first variable are both t. The homogeneous Sylvester
    determinant is sampled on roots-of-unity grids in x and z and its coefficients are
    recovered by a 2-D FFT, which is an exactly unitary interpolation at these nodes.
    """
    p, q = A.n, B.m
    if p < 1 or q < 1:
        raise ValueError("both polynomials need degree at least 1 in the eliminated variable")
    if np.all(A.coefficients[:, p] == 0) and np.all(B.coefficients[q, :] == 0):
        raise DegeneratePolynomialError("ill-posed elimination: both leading t-coefficients vanish")
    M, N = A.m * q, B.n * p
    xs = np.exp(2j * np.pi * np.arange(M + 1) / (M + 1))
    zs = np.exp(2j * np.pi * np.arange(N + 1) / (N + 1))
    a_t = npoly.polyval(xs, A.coefficients, tensor=True).T  # (M+1, p+1)
    b_t = npoly.polyval(zs, B.coefficients.T, tensor=True).T  # (N+1, q+1)
    S = _sylvester_matrices(a_t[:, None, :], b_t[None, :, :])
    values = np.linalg.det(S)
    coeffs = np.fft.fft2(values) / ((M + 1) * (N + 1))
    peak = np.max(np.abs(coeffs))
    if peak == 0.0:
        raise DegeneratePolynomialError("ill-posed elimination: resultant vanishes identically")
    coeffs[np.abs(coeffs) <= 1e-13 * peak] = 0.0
    return BihomogeneousPolynomial(coeffs)


@dataclass
class StripResult:
    polynomial: BihomogeneousPolynomial
    removed: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)


def _common_column_root(C: np.ndarray, tolerance: float) -> Optional[complex]:
    """A finite x-value where every column polynomial of C vanishes, if any."""
    col_norms = np.max(np.abs(C), axis=0)
    pivot = int(np.argmax(col_norms))
    column = C[:, pivot]
    if UnivariatePoly(column).degree < 1:
        return None
    candidates = roots_batch(column[: UnivariatePoly(column).degree + 1][None, :])[0]
    usable = col_norms > 0
    for r in candidates[np.isfinite(candidates)]:
        if abs(r) <= 1.0:
            vals = npoly.polyval(r, C[:, usable])
            ref = np.sum(np.abs(C[:, usable]), axis=0)
        else:
            vals = npoly.polyval(1.0 / r, C[::-1, usable])
            ref = np.sum(np.abs(C[:, usable]), axis=0)
        if np.all(np.abs(vals) <= tolerance * ref):
            return complex(r)
    return None


def _deflate(column: np.ndarray, r: complex) -> np.ndarray:
    """Divide a column polynomial by (x - r), keeping the nominal length minus one."""
    quotient = npoly.polydiv(column, np.array([-r, 1.0], dtype=complex))[0]
    out = np.zeros(column.size - 1, dtype=complex)
    out[: min(quotient.size, out.size)] = quotient[: out.size]
    return out


def _strip_axis(C: np.ndarray, label: str, tolerance: float, search_roots: bool) -> Tuple[np.ndarray, List[str]]:
    removed: List[str] = []
    while C.shape[0] > 1:
        peak = np.max(np.abs(C))
        if np.all(np.abs(C[-1]) <= tolerance * peak):
            C = C[:-1]
            removed.append(f"{label}0 (fiber over {label} = inf)")
            continue
        if np.all(np.abs(C[0]) <= tolerance * peak):
            C = C[1:]
            removed.append(f"{label}1 (fiber over {label} = 0)")
            continue
        if not search_roots:
            break
        r = _common_column_root(C, tolerance)
        if r is None:
            break
        C = np.stack([_deflate(C[:, j], r) for j in range(C.shape[1])], axis=1)
        removed.append(f"{label}1 - ({r:.6g}) {label}0")
    return C, removed


def strip_fiber_factors(
    P: BihomogeneousPolynomial,
    expected_bidegree: Optional[Tuple[int, int]] = None,
    tolerance: float = 1e-9,
) -> StripResult:
    """
    Remove factors depending on the x-pair only or on the y-pair only.

    Vanishing boundary rows detect the fibers over 0 and infinity; other fibers are
    found as common roots of all column (row) polynomials and deflated by division.
    The root search runs only when the bidegree exceeds the expected one (or when no
    expectation is given and the degree is modest), since a graph with the expected
    bidegree has no room for a fiber component.
    """
    C = np.array(P.coefficients)
    m, n = P.bidegree
    if expected_bidegree is None:
        search_x = search_y = max(m, n) <= 64
    else:
        search_x = m > expected_bidegree[0]
        search_y = n > expected_bidegree[1]
    C, removed_x = _strip_axis(C, "x", tolerance, search_x)
    Ct, removed_y = _strip_axis(C.T, "y", tolerance, search_y)
    result = StripResult(BihomogeneousPolynomial(Ct.T.copy()), removed_x + removed_y)
    if expected_bidegree is not None:
        got = result.polynomial.bidegree
        if got[0] > expected_bidegree[0] or got[1] > expected_bidegree[1]:
            msg = f"unstripped extraneous factor: bidegree {got} exceeds expected {tuple(expected_bidegree)}"
            result.warnings.append(msg)
            warnings.warn(msg, ExtraneousFactorWarning, stacklevel=2)
    return result


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------


def format_polynomial(P: BihomogeneousPolynomial, name: Optional[str] = None) -> str:
    """Header "bidegree m n" (optionally preceded by "name <name>"), one "i j re im" line per monomial."""
    lines: List[str] = []
    if name is not None:
        lines.append(f"name {name}")
    m, n = P.bidegree
    lines.append(f"bidegree {m} {n}")
    for (i, j), c in np.ndenumerate(P.coefficients):
        if c != 0:
            lines.append(f"{i} {j} {c.real:.17g} {c.imag:.17g}")
    return "\n".join(lines) + "\n"


def parse_polynomial(text: str) -> Tuple[BihomogeneousPolynomial, Optional[str]]:
    name: Optional[str] = None
    shape: Optional[Tuple[int, int]] = None
    entries: List[Tuple[int, int, complex]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "name":
            name = line[len("name") :].strip()
        elif parts[0] == "bidegree":
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'bidegree m n'")
            shape = (int(parts[1]), int(parts[2]))
        else:
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected 'i j re im'")
            entries.append((int(parts[0]), int(parts[1]), complex(float(parts[2]), float(parts[3]))))
    if shape is None:
        raise ValueError("missing 'bidegree m n' header")
    m, n = shape
    if m < 0 or n < 0:
        raise ValueError(f"negative bidegree {shape}")
    coeffs = np.zeros((m + 1, n + 1), dtype=complex)
    for i, j, c in entries:
        if not (0 <= i <= m and 0 <= j <= n):
            raise ValueError(f"monomial ({i}, {j}) outside bidegree {shape}")
        coeffs[i, j] += c
    return BihomogeneousPolynomial(coeffs), name


__all__ = [
    "RootConfig",
    "DEFAULT_ROOT_CONFIG",
    "Root",
    "UnivariatePoly",
    "roots",
    "roots_batch",
    "cluster_roots",
    "expand_roots",
    "relative_residuals",
    "BihomogeneousPolynomial",
    "derivative_coefficients",
    "evaluate_partials",
    "sylvester_resultant",
    "StripResult",
    "strip_fiber_factors",
    "format_polynomial",
    "parse_polynomial",
]
