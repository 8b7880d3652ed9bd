"""
Operator norm of d^-1 f_* on square-integrable (1,0)-forms.

A (1,0)-form gamma = g(z) dz has ||gamma||² = ∫ i gamma ^ conj(gamma) = 2 ∫ |g|² dA, which in
Fubini-Study probability terms is 2π E|h|² with the bounded weighted coefficient
h = g (1 + |z|²). Near infinity the form is g̃(w) dw with g̃(w) = -g(1/w) / w².

The pushforward sums g(x_j) x_j'(y) over the d2 preimage branches of y. Derivatives are
taken in the chart pair of each point, so branches through infinity need no special case.
"""
from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import linalg

from .correspondence import (
    DEFAULT_BUDGET,
    BudgetConfig,
    Correspondence,
    adjoint,
    chart_derivatives,
    forward_branches,
)
from .errors import GridRefinementError, NumericalWarning
from .projective import invert
from .sphere import SphereGrid

logger = logging.getLogger(__name__)

DIRECTIONS = ("push", "pull")
FLAGGED_LIMIT = 0.01
TRIAL_DECAY = 7  # g_{a,b} = z^a z̄^b / (1 + |z|²)^TRIAL_DECAY
TRIAL_HOLOMORPHIC_DEGREES = range(4)
TRIAL_ANTIHOLOMORPHIC_DEGREES = range(8)
SMOOTHING_DECAY = 8  # power iteration basis; angular frequencies stay below 16 grid columns

Coefficient = Callable[[np.ndarray], np.ndarray]


def _phase(w: np.ndarray) -> np.ndarray:
    """w / conj(w), set to 1 at w = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(w == 0, 1.0, w / np.conj(w))


class OneZeroForm:
    """
    A (1,0)-form on P¹ given by its weighted coefficient h(z) = g(z)(1 + |z|²).

    Build it from chart coefficients with ``from_charts`` or from grid samples with
    ``from_samples`` (bilinear interpolation off the nodes).
    """

    def __init__(self, weighted: Coefficient, name: str = "gamma", flagged_fraction: float = 0.0):
        self._weighted = weighted
        self.name = name
        self.flagged_fraction = flagged_fraction
        self.grid_values: Optional[Tuple[SphereGrid, np.ndarray]] = None
        self.charts: Optional[Tuple[Coefficient, Coefficient]] = None

    @classmethod
    def from_charts(
        cls, chart0: Coefficient, chart1: Optional[Coefficient] = None, name: str = "gamma"
    ) -> "OneZeroForm":
        """g in z for |z| <= 1 and g̃ in w = 1/z beyond (derived from g when omitted)."""

        def weighted(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=complex)
            inner = np.abs(z) <= 1.0
            zi = np.where(inner, z, 0.0)
            out = chart0(zi) * (1.0 + np.abs(zi) ** 2)
            w = np.where(inner, 1.0, invert(z))
            if chart1 is None:
                with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                    g_outer = chart0(np.where(inner, 1.0, z))
                    outer = g_outer * (1.0 + np.abs(np.where(inner, 1.0, z)) ** 2)
                outer = np.where(np.isfinite(outer), outer, 0.0)
            else:
                outer = -chart1(w) * _phase(w) * (1.0 + np.abs(w) ** 2)
            return np.where(inner, out, outer)

        return cls(weighted, name=name)

    @classmethod
    def from_samples(
        cls, grid: SphereGrid, values: np.ndarray, name: str = "gamma", flagged_fraction: float = 0.0
    ) -> "OneZeroForm":
        values = np.asarray(values, dtype=complex)
        if values.shape != (grid.size,):
            raise ValueError(f"expected {grid.size} node values, got shape {values.shape}")

        def weighted(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=complex)
            return (grid.interpolation_matrix(z.ravel()) @ values).reshape(z.shape)

        form = cls(weighted, name=name, flagged_fraction=flagged_fraction)
        form.grid_values = (grid, values)
        return form

    def weighted(self, z: np.ndarray) -> np.ndarray:
        return self._weighted(np.asarray(z, dtype=complex))

    def coefficient(self, z: np.ndarray) -> np.ndarray:
        """g(z) in the affine chart."""
        z = np.asarray(z, dtype=complex)
        return self.weighted(z) / (1.0 + np.abs(z) ** 2)

    def chart_coefficient(self, w: np.ndarray) -> np.ndarray:
        """g̃(w) in the chart at infinity."""
        w = np.asarray(w, dtype=complex)
        h = self.weighted(invert(w))
        return -h * np.conj(_phase(w)) / (1.0 + np.abs(w) ** 2)

    def sample(self, grid: SphereGrid) -> np.ndarray:
        if self.grid_values is not None and self.grid_values[0] is grid:
            return self.grid_values[1]
        return self.weighted(grid.nodes)


def l2_inner(gamma: OneZeroForm, eta: OneZeroForm, grid: SphereGrid) -> complex:
    """∫ i gamma ^ conj(eta)."""
    return complex(2.0 * np.pi * grid.integrate(gamma.sample(grid) * np.conj(eta.sample(grid))))


def l2_norm(gamma: OneZeroForm, grid: SphereGrid) -> float:
    return float(np.sqrt(max(l2_inner(gamma, gamma, grid).real, 0.0)))


def l2_norm_by_charts(gamma: OneZeroForm, grid: SphereGrid) -> float:
    """
    The same norm assembled from 2 ∫ |g|² dA over |z| <= 1 and 2 ∫ |g̃|² dA_w over |w| < 1.

    Agreement with ``l2_norm`` checks the transition rule of the form.
    """
    z = grid.nodes
    inner = np.abs(z) <= 1.0
    area = grid.area_weights
    g = gamma.coefficient(z[inner])
    w = invert(z[~inner])
    g_tilde = gamma.chart_coefficient(w)
    # dA_w = dA_z / |z|^4
    total = 2.0 * np.sum(area[inner] * np.abs(g) ** 2)
    total += 2.0 * np.sum(area[~inner] * np.abs(g_tilde) ** 2 * np.abs(w) ** 4)
    return float(np.sqrt(total))


def transition_defect(
    chart0: Coefficient, chart1: Coefficient, samples: int = 256
) -> float:
    """max |g̃(w) + g(1/w)/w²| / max |g̃(w)| on the unit circle."""
    w = np.exp(2j * np.pi * (np.arange(samples) + 0.5) / samples)
    expected = -chart0(1.0 / w) / w**2
    actual = chart1(w)
    scale = max(float(np.max(np.abs(actual))), 1e-300)
    return float(np.max(np.abs(actual - expected))) / scale


# ---------------------------------------------------------------------------
# Trial family
# ---------------------------------------------------------------------------


def trial_member(a: int, b: int, decay: int = TRIAL_DECAY) -> OneZeroForm:
    """
    z^a z̄^b / (1 + |z|²)^k dz; at infinity -w^(k-2-a) w̄^(k-b) / (1 + |w|²)^k dw.

    Smooth on P¹ for a <= k - 2 and b <= k, with k = ``decay``.
    """
    k = decay
    if not (0 <= a <= k - 2 and 0 <= b <= k):
        raise ValueError(f"trial member ({a}, {b}) is not smooth at infinity")

    def chart0(z: np.ndarray) -> np.ndarray:
        return z**a * np.conj(z) ** b / (1.0 + np.abs(z) ** 2) ** k

    def chart1(w: np.ndarray) -> np.ndarray:
        return -(w ** (k - 2 - a)) * np.conj(w) ** (k - b) / (1.0 + np.abs(w) ** 2) ** k

    name = f"g[{a},{b}]" if k == TRIAL_DECAY else f"g[{a},{b};{k}]"
    form = OneZeroForm.from_charts(chart0, chart1, name=name)
    form.charts = (chart0, chart1)
    return form


def trial_family() -> List[OneZeroForm]:
    """The 32 trial forms g_{a,b}, a in 0..3, b in 0..7."""
    return [
        trial_member(a, b)
        for a, b in itertools.product(TRIAL_HOLOMORPHIC_DEGREES, TRIAL_ANTIHOLOMORPHIC_DEGREES)
    ]


def smoothing_basis() -> List[OneZeroForm]:
    """
    The 63 forms z^a z̄^b / (1 + |z|²)^8 dz, a in 0..6, b in 0..8.

    Their span contains every trial member: multiplying by (1 + |z|²) / (1 + |z|²) writes
    g_{a,b} as the sum of the decay-8 members (a, b) and (a + 1, b + 1).
    """
    k = SMOOTHING_DECAY
    return [trial_member(a, b, decay=k) for a, b in itertools.product(range(k - 1), range(k + 1))]


# ---------------------------------------------------------------------------
# Pushforward
# ---------------------------------------------------------------------------


def _source_factor(X: np.ndarray, chart: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(chart == 1, -np.conj(X) / X, 1.0)
    return ratio / (1.0 + np.abs(X) ** 2)


def _target_factor(Y: np.ndarray, chart: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(chart == 1, -Y / np.conj(Y), 1.0)
    return ratio * (1.0 + np.abs(Y) ** 2)


@dataclass
class PushforwardKernel:
    """Preimages x_j(y) of target points and the factors taking h(x_j) to f_* h (y)."""

    targets: np.ndarray  # (K,)
    preimages: np.ndarray  # (K, d2)
    factors: np.ndarray  # (K, d2), 0 where flagged
    flagged: np.ndarray  # (K, d2)

    @property
    def flagged_fraction(self) -> float:
        return float(self.flagged.mean()) if self.flagged.size else 0.0

    def apply(self, gamma: OneZeroForm) -> np.ndarray:
        with np.errstate(invalid="ignore", over="ignore"):
            h = gamma.weighted(self.preimages)
        h = np.where(self.flagged | ~np.isfinite(h), 0.0, h)
        return np.sum(h * self.factors, axis=1)


def pushforward_kernel(
    f: Correspondence, targets: np.ndarray, budget: BudgetConfig = DEFAULT_BUDGET
) -> PushforwardKernel:
    back = adjoint(f)
    br = forward_branches(back, targets, budget=budget)
    cd = chart_derivatives(
        back.graph, br.sources[:, None], br.values, budget.ramification_tolerance
    )
    # cd.X, cd.Y: chart coordinates of the target point and of the preimage
    with np.errstate(invalid="ignore", over="ignore"):
        factors = cd.local * _source_factor(cd.Y, cd.y_chart) * _target_factor(cd.X, cd.x_chart)
    flagged = cd.undefined | ~np.isfinite(factors)
    return PushforwardKernel(br.sources, br.values, np.where(flagged, 0.0, factors), flagged)


def _check_flagged(fraction: float, what: str) -> None:
    if fraction > FLAGGED_LIMIT:
        raise GridRefinementError(
            f"{100 * fraction:.2f}% of branch samples flagged in {what}; refine the grid"
        )


def pushforward_form(
    f: Correspondence,
    gamma: OneZeroForm,
    grid: Optional[SphereGrid] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> OneZeroForm:
    """f_* gamma sampled on the grid nodes (unnormalized: no factor 1/d)."""
    grid = grid if grid is not None else SphereGrid(64)
    kernel = pushforward_kernel(f, grid.nodes, budget)
    _check_flagged(kernel.flagged_fraction, f"pushforward of {gamma.name} by {f.name}")
    return OneZeroForm.from_samples(
        grid, kernel.apply(gamma), name=f"push({gamma.name})", flagged_fraction=kernel.flagged_fraction
    )


def pullback_form(
    f: Correspondence,
    gamma: OneZeroForm,
    grid: Optional[SphereGrid] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> OneZeroForm:
    """f^* gamma, the pushforward by the adjoint correspondence."""
    pulled = pushforward_form(adjoint(f), gamma, grid, budget)
    pulled.name = f"pull({gamma.name})"
    return pulled


# ---------------------------------------------------------------------------
# Estimates
# ---------------------------------------------------------------------------


@dataclass
class ContractionReport:
    correspondence: str
    direction: str
    lower_bound: float
    heuristic_estimate: float
    grid_error: float
    ritz_bound: float = 0.0
    random_bound: float = 0.0
    iterations_used: int = 0
    trials: int = 0
    flags: List[str] = field(default_factory=list)

    @property
    def unstable(self) -> bool:
        return "unstable" in self.flags

    def to_dict(self) -> dict:
        return asdict(self)


def _whitening(scaled: np.ndarray) -> np.ndarray:
    """W with ``scaled @ W`` orthonormal; directions below 1e-10 of the top are dropped."""
    _, s, vh = linalg.svd(scaled, full_matrices=False)
    keep = s > 1e-10 * s[0]
    return vh[keep].conj().T / s[keep]


def _ritz(
    family_values: np.ndarray, pushed_values: np.ndarray, weights: np.ndarray
) -> Tuple[float, np.ndarray]:
    """
    sup ||T gamma|| / ||gamma|| over the span of the family, via an SVD-orthonormalized basis.

    Returns the bound and the maximizing coefficient vector.
    """
    root = np.sqrt(2.0 * np.pi * weights)[:, None]
    whiten = _whitening(root * family_values)
    _, sigma, right = linalg.svd((root * pushed_values) @ whiten, full_matrices=False)
    return float(sigma[0]), whiten @ right[0].conj()


def _random_trials(
    family_values: np.ndarray,
    pushed_values: np.ndarray,
    weights: np.ndarray,
    trials: int,
    rng: np.random.Generator,
) -> float:
    if trials <= 0:
        return 0.0
    m = family_values.shape[1]
    coeffs = rng.standard_normal((m, trials)) + 1j * rng.standard_normal((m, trials))
    num = np.sum(weights[:, None] * np.abs(pushed_values @ coeffs) ** 2, axis=0)
    den = np.sum(weights[:, None] * np.abs(family_values @ coeffs) ** 2, axis=0)
    return float(np.sqrt(np.max(num / den)))


def _power_norm(
    basis_values: np.ndarray,
    pushed_values: np.ndarray,
    weights: np.ndarray,
    start: np.ndarray,
    iterations: int,
    tolerance: float,
) -> Tuple[float, int, bool]:
    """
    Largest singular value of T on the span of a smooth basis, by power iteration on T*T.

    Vectors are coordinates in an orthonormal frame of the span, so every step resamples the
    image onto the span instead of onto single grid nodes. Starting from a vector of the span,
    the estimates never decrease.
    """
    root = np.sqrt(2.0 * np.pi * weights)[:, None]
    scaled = root * basis_values
    whiten = _whitening(scaled)
    image_matrix = (root * pushed_values) @ whiten
    v = (scaled @ whiten).conj().T @ (root[:, 0] * start)
    v = v / np.linalg.norm(v)
    estimate = 0.0
    for step in range(1, iterations + 1):
        image = image_matrix @ v
        previous, estimate = estimate, float(np.linalg.norm(image))
        if estimate == 0.0:
            return 0.0, step, True
        if step > 1 and abs(estimate - previous) <= tolerance * estimate:
            return estimate, step, True
        v = image_matrix.conj().T @ image
        v = v / np.linalg.norm(v)
    return estimate, iterations, False


def _estimate_on_grid(
    f: Correspondence,
    grid: SphereGrid,
    family: List[OneZeroForm],
    basis: List[OneZeroForm],
    trials: int,
    iterations: int,
    tolerance: float,
    rng: np.random.Generator,
    budget: BudgetConfig,
) -> Tuple[float, float, float, int, bool]:
    d = f.d1
    kernel = pushforward_kernel(f, grid.nodes, budget)
    _check_flagged(kernel.flagged_fraction, f"contraction estimate for {f.name}")

    def samples(forms: List[OneZeroForm]) -> Tuple[np.ndarray, np.ndarray]:
        values = np.stack([form.sample(grid) for form in forms], axis=1)
        return values, np.stack([kernel.apply(form) for form in forms], axis=1) / d

    family_values, pushed = samples(family)
    ritz, top = _ritz(family_values, pushed, grid.weights)
    random_bound = _random_trials(family_values, pushed, grid.weights, trials, rng)
    basis_values, basis_pushed = samples(basis)
    heuristic, used, converged = _power_norm(
        basis_values, basis_pushed, grid.weights, family_values @ top, iterations, tolerance
    )
    return ritz, random_bound, heuristic, used, converged


def contraction_estimate(
    f: Correspondence,
    trials: int = 64,
    iterations: int = 200,
    seed: int = 0,
    grid: int = 64,
    coarse_grid: int = 32,
    direction: str = "push",
    tolerance: float = 1e-6,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> ContractionReport:
    """
    Certified-from-below and heuristic estimates of ||d^-1 f_*|| (or ||d^-1 f^*|| for "pull").

    The lower bound is the larger of the Ritz value over the 32-form trial family and the best
    of ``trials`` random members of its span. The heuristic is a power iteration for the norm
    on the span of ``smoothing_basis``, started from the Ritz maximizer, so it is never below
    the Ritz value on the same grid. Its grid error is the change between the fine and the
    coarse grid.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    if f.d1 != f.d2:
        raise ValueError(f"contraction estimates need d1 = d2, got ({f.d1}, {f.d2})")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    operator = f if direction == "push" else adjoint(f)
    family, basis = trial_family(), smoothing_basis()
    rng = np.random.default_rng(seed)
    fine = _estimate_on_grid(
        operator, SphereGrid(grid), family, basis, trials, iterations, tolerance, rng, budget
    )
    coarse = _estimate_on_grid(
        operator, SphereGrid(coarse_grid), family, basis, trials, iterations, tolerance, rng, budget
    )
    ritz, random_bound, heuristic, used, converged = fine
    grid_error = max(abs(heuristic - coarse[2]), abs(ritz - coarse[0]))
    flags: List[str] = []
    if not converged:
        flags.append("unstable")
        warnings.warn(
            f"power iteration for {f.name} did not settle within {iterations} steps",
            NumericalWarning,
            stacklevel=2,
        )
    lower = max(ritz, random_bound)
    if lower > heuristic + grid_error + tolerance:
        flags.append("lower-bound-above-heuristic")
    logger.debug(
        "%s %s: ritz=%.6f random=%.6f heuristic=%.6f grid_error=%.2e",
        f.name, direction, ritz, random_bound, heuristic, grid_error,
    )
    return ContractionReport(
        correspondence=f.name,
        direction=direction,
        lower_bound=lower,
        heuristic_estimate=heuristic,
        grid_error=grid_error,
        ritz_bound=ritz,
        random_bound=random_bound,
        iterations_used=used,
        trials=trials,
        flags=flags,
    )


__all__ = [
    "DIRECTIONS",
    "OneZeroForm",
    "l2_inner",
    "l2_norm",
    "l2_norm_by_charts",
    "transition_defect",
    "trial_member",
    "trial_family",
    "PushforwardKernel",
    "pushforward_kernel",
    "pushforward_form",
    "pullback_form",
    "smoothing_basis",
    "ContractionReport",
    "contraction_estimate",
]
