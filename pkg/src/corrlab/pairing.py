"""
Pairing of normalized graph currents and limit currents with test 2-forms.

A graph Γ_n is a holomorphic curve covering each factor of P¹ x P¹, so
<[Γ_n], beta> is an integral over either factor of the pulled-back form summed over the
branches above each point. On a branch parametrized by x (with y' = dy/dx) every basis
form pulls back to det * dx^dx̄, where det is the 2x2 determinant of the two pulled-back
covectors; the (2,0) and (0,2) parts get det = 0. The same holds over y with x' = dx/dy.

Graph pairings are normalized by d2^-n and compared with the limit current
pi_1^* mu (d1 < d2) or pi_1^* mu+ + pi_2^* mu- (d1 = d2). Every pairing is computed on a
fine and a coarse sphere grid; their difference is the reported quadrature noise.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .correspondence import (
    DEFAULT_BUDGET,
    BudgetConfig,
    Correspondence,
    PathBundle,
    adjoint,
    check_iterate_budget,
    compose,
    extend_paths,
    propagate,
    start_paths,
    symbolic_paths,
)
from .errors import NumericalWarning
from .fitting import fit_exponential_rate, predicted_rate
from .forms import COMPONENT_BASIS, TestForm, fubini_study_density, fubini_study_form
from .measures import (
    ScalarTestFunction,
    WeightedPointCloud,
    equilibrium_measure,
    pushforward_function,
)
from .sphere import QuadratureSpec, SphereGrid

STRATEGIES = ("symbolic", "tree")
COVERINGS = ("source", "target", "split")
FLAGGED_WARNING_FRACTION = 0.01
JITTER = 1e-6  # relative displacement of quadrature nodes that hit a branch point
_CHUNK_POINTS = 1 << 21


@dataclass
class PairingEstimate:
    value: complex
    standard_error: float = 0.0  # sampling error of tree(k) estimates; 0 for exact branch sums
    noise: float = 0.0  # |fine - coarse| when both grids were evaluated
    flagged_fraction: float = 0.0

    @property
    def combined_error(self) -> float:
        return float(np.hypot(self.standard_error, self.noise))


def strategies_agree(
    first: PairingEstimate, second: PairingEstimate, z: float = 3.0, floor: float = 1e-6
) -> bool:
    """|difference| within z combined standard errors (plus an absolute floor)."""
    se = np.hypot(first.standard_error, second.standard_error)
    return bool(abs(first.value - second.value) <= z * se + floor)


# ---------------------------------------------------------------------------
# Pullback of 2-forms to a graph
# ---------------------------------------------------------------------------


def _covector(name: str, slope: np.ndarray, side: str) -> Tuple[np.ndarray, np.ndarray]:
    """(dz, dz̄) components of a basis 1-form on a branch parametrized by the side's variable."""
    one = np.ones(slope.shape, dtype=complex)
    zero = np.zeros(slope.shape, dtype=complex)
    own = ("dx", "dxbar") if side == "source" else ("dy", "dybar")
    if name == own[0]:
        return one, zero
    if name == own[1]:
        return zero, one
    if name in ("dx", "dy"):
        return slope, zero
    return zero, np.conj(slope)


def pullback_determinant(key: str, slope: np.ndarray, side: str) -> np.ndarray:
    """Factor by which the basis form ``key`` pulls back to the parameter's area form."""
    u, v = COMPONENT_BASIS[key]
    ua, ub = _covector(u, slope, side)
    va, vb = _covector(v, slope, side)
    return ua * vb - ub * va


def pulled_back_density(
    form: TestForm,
    keys: Sequence[str],
    x: np.ndarray,
    y: np.ndarray,
    slope: np.ndarray,
    side: str,
) -> np.ndarray:
    """Sum over ``keys`` of coefficient * pullback determinant at points of the graph."""
    slope = np.asarray(slope, dtype=complex)
    total = np.zeros(np.broadcast(x, y, slope).shape, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for key in keys:
            det = pullback_determinant(key, slope, side)
            if not np.any(det != 0):
                continue
            total = total + form.component(key, x, y) * det
    return total


def covering_plan(form: TestForm, covering: str, d1: int, d2: int) -> Dict[str, Tuple[str, ...]]:
    """
    Which components are integrated over which factor.

    ``split`` integrates a over x and b over y, where both integrands are smooth, and
    the mixed terms over y when d2 >= d1 (over x otherwise).
    """
    if covering not in COVERINGS:
        raise ValueError(f"covering must be one of {COVERINGS}, got {covering!r}")
    keys = form.keys
    if covering == "source":
        return {"source": keys, "target": ()}
    if covering == "target":
        return {"source": (), "target": keys}
    cross_side = "target" if d2 >= d1 else "source"
    plan: Dict[str, List[str]] = {"source": [], "target": []}
    for key in keys:
        side = "source" if key == "a" else "target" if key == "b" else cross_side
        plan[side].append(key)
    return {side: tuple(ks) for side, ks in plan.items()}


# ---------------------------------------------------------------------------
# Graph currents
# ---------------------------------------------------------------------------


class GraphPairing:
    """
    <d2^-n [Γ_n], beta> on one sphere grid, advanced one n at a time.

    ``strategy="tree"`` grows orbit trees from the grid nodes (all branches, or
    ``samples`` random paths per node); ``strategy="symbolic"`` reads the branches off
    the graph of the iterate f^n.
    """

    def __init__(
        self,
        f: Correspondence,
        grid: SphereGrid,
        strategy: str = "tree",
        samples: Optional[int] = None,
        covering: str = "split",
        rng: Optional[np.random.Generator] = None,
        budget: BudgetConfig = DEFAULT_BUDGET,
    ) -> None:
        if strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
        if covering not in COVERINGS:
            raise ValueError(f"covering must be one of {COVERINGS}, got {covering!r}")
        self.f = f
        self.grid = grid
        self.strategy = strategy
        self.samples = samples
        self.covering = covering
        self.budget = budget
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.depth = 0
        self._maps = {"source": f, "target": adjoint(f)}
        self._bundles: Dict[str, PathBundle] = {}
        self._iterate: Optional[Correspondence] = None
        self._area = grid.area_weights

    # -- branch bookkeeping -------------------------------------------------

    def _side_map(self, side: str, fn: Correspondence) -> Correspondence:
        return fn if side == "source" else adjoint(fn)

    def _build(self, side: str, sources: np.ndarray) -> PathBundle:
        if self.strategy == "symbolic":
            return symbolic_paths(self._side_map(side, self._iterate), sources, budget=self.budget)
        return propagate(
            self._maps[side], sources, self.depth, self.samples, self.rng, self.budget
        )

    def _rejitter(self, side: str, bundle: PathBundle) -> PathBundle:
        rows = np.flatnonzero(np.any(bundle.undefined, axis=1))
        if rows.size == 0:
            return bundle
        moved = bundle.sources[rows]
        moved = moved + JITTER * (1.0 + np.abs(moved)) * np.exp(0.37j)
        fresh = self._build(side, moved)
        sources = bundle.sources.copy()
        sources[rows] = moved
        parts = {}
        for name in ("leaves", "slopes", "undefined", "weights"):
            arr = getattr(bundle, name).copy()
            arr[rows] = getattr(fresh, name)
            parts[name] = arr
        return PathBundle(sources=sources, depth=bundle.depth, samples=bundle.samples, **parts)

    def advance(self, n: int) -> None:
        """Move every branch bundle to depth n (n never decreases)."""
        if n < self.depth:
            raise ValueError(f"cannot go back from depth {self.depth} to {n}")
        if self.strategy == "symbolic":
            if n > self.depth:
                check_iterate_budget(self.f, n, self.budget)
            while self.depth < n:
                self.depth += 1
                self._iterate = (
                    self.f if self._iterate is None else compose(self._iterate, self.f)
                )
            for side in list(self._bundles):
                self._bundles[side] = self._rejitter(side, self._build(side, self.grid.nodes))
            return
        while self.depth < n:
            self.depth += 1
            for side, bundle in list(self._bundles.items()):
                extended = extend_paths(self._maps[side], bundle, self.rng, self.budget)
                self._bundles[side] = self._rejitter(side, extended)

    def bundle(self, side: str) -> PathBundle:
        if side not in self._bundles:
            if self.strategy == "symbolic":
                if self._iterate is None:
                    raise RuntimeError("advance() must be called before evaluating")
                built = self._build(side, self.grid.nodes)
            else:
                built = start_paths(self.grid.nodes, self.samples)
                for _ in range(self.depth):
                    built = extend_paths(self._maps[side], built, self.rng, self.budget)
            self._bundles[side] = self._rejitter(side, built)
        return self._bundles[side]

    # -- integration ----------------------------------------------------------

    def _side_integral(
        self, side: str, form: TestForm, keys: Sequence[str]
    ) -> Tuple[complex, float, int, int]:
        bundle = self.bundle(side)
        nodes = bundle.sources[:, None]
        if side == "source":
            x, y = nodes, bundle.leaves
        else:
            x, y = bundle.leaves, nodes
        density = pulled_back_density(form, keys, x, y, bundle.slopes, side)
        free_key = "a" if side == "source" else "b"
        needs_slope = any(k != free_key for k in keys)
        bad = ~np.isfinite(density)
        if needs_slope:
            bad |= bundle.undefined
        density = np.where(bad, 0.0, density)
        weighted = bundle.weights * density
        per_node = np.sum(weighted, axis=1)
        value = complex(np.sum(self._area * per_node))
        variance = 0.0
        if bundle.samples is not None and bundle.samples > 1:
            k = bundle.samples
            draws = weighted * k
            node_var = np.sum(np.abs(draws - per_node[:, None]) ** 2, axis=1) / (k - 1) / k
            variance = float(np.sum(self._area**2 * node_var))
        return value, variance, int(bad.sum()), bad.size

    def evaluate(self, form: TestForm) -> PairingEstimate:
        """Normalized pairing <d2^-n [Γ_n], form> at the current depth."""
        if self.depth < 1:
            raise RuntimeError("advance() to a depth n >= 1 before evaluating")
        plan = covering_plan(form, self.covering, self.f.d1, self.f.d2)
        total = 0.0 + 0.0j
        variance = 0.0
        flagged = 0
        entries = 0
        for side, keys in plan.items():
            if not keys:
                continue
            value, var, bad, size = self._side_integral(side, form, keys)
            total += value
            variance += var
            flagged += bad
            entries += size
        scale = float(self.f.d2) ** -self.depth
        fraction = flagged / entries if entries else 0.0
        if fraction > FLAGGED_WARNING_FRACTION:
            warnings.warn(
                f"{100 * fraction:.2f}% of branch contributions flagged for {form.name} at "
                f"n = {self.depth}; refine the grid",
                NumericalWarning,
                stacklevel=2,
            )
        return PairingEstimate(
            value=total * scale,
            standard_error=float(np.sqrt(variance)) * scale,
            flagged_fraction=fraction,
        )


def _resolve_grid(grid: Optional[object], coarse: bool = False) -> SphereGrid:
    if isinstance(grid, SphereGrid):
        return grid
    spec = grid if isinstance(grid, QuadratureSpec) else QuadratureSpec()
    return SphereGrid.from_spec(spec, coarse=coarse)


def pair_graph_current(
    f: Correspondence,
    n: int,
    beta: TestForm,
    strategy: str = "tree",
    grid: Optional[object] = None,
    samples: Optional[int] = None,
    covering: str = "split",
    rng: Optional[np.random.Generator] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> PairingEstimate:
    """
    <d2^-n [Γ_n], beta> by the graph-covering identity on one sphere grid.

    ``grid`` is a SphereGrid or a QuadratureSpec (its fine grid is used).
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if strategy == "symbolic":
        check_iterate_budget(f, n, budget)
    pairing = GraphPairing(f, _resolve_grid(grid), strategy, samples, covering, rng, budget)
    pairing.advance(n)
    return pairing.evaluate(beta)


def pair_graph_current_with_error(
    f: Correspondence,
    n: int,
    beta: TestForm,
    strategy: str = "tree",
    quadrature: QuadratureSpec = QuadratureSpec(),
    samples: Optional[int] = None,
    covering: str = "split",
    rng: Optional[np.random.Generator] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> PairingEstimate:
    """Fine-grid pairing with the fine/coarse difference as its noise estimate."""
    rng = rng if rng is not None else np.random.default_rng(0)
    fine = pair_graph_current(
        f, n, beta, strategy, SphereGrid.from_spec(quadrature), samples, covering, rng, budget
    )
    coarse = pair_graph_current(
        f,
        n,
        beta,
        strategy,
        SphereGrid.from_spec(quadrature, coarse=True),
        samples,
        covering,
        rng,
        budget,
    )
    fine.noise = abs(fine.value - coarse.value)
    return fine


# ---------------------------------------------------------------------------
# Limit currents
# ---------------------------------------------------------------------------


@dataclass
class LimitCurrent:
    """pi_1^* plus (+ pi_2^* minus when present) for probability clouds plus, minus."""

    plus: Optional[WeightedPointCloud] = None
    minus: Optional[WeightedPointCloud] = None
    description: str = ""


def limit_current(
    f: Correspondence,
    depth: int = 12,
    seed: Optional[complex] = None,
    mode: str = "full",
    k: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> LimitCurrent:
    """
    Estimated limit current of d2^-n [Γ_n].

    d1 < d2: pi_1^* mu with mu the normalized pullback cloud. d1 = d2: pi_1^* mu+ + pi_2^* mu-
    with mu+ from pullbacks and mu- from pushforwards.
    """
    if f.d1 > f.d2:
        raise ValueError(
            f"limit current needs d1 <= d2, got ({f.d1}, {f.d2}); study the adjoint instead"
        )
    rng = rng if rng is not None else np.random.default_rng(0)
    plus = equilibrium_measure(
        f, seed=seed, depth=depth, mode=mode, k=k, direction="backward", rng=rng, budget=budget
    )
    if f.d1 < f.d2:
        return LimitCurrent(plus=plus, description="pi_1^* mu")
    minus = equilibrium_measure(
        f, seed=seed, depth=depth, mode=mode, k=k, direction="forward", rng=rng, budget=budget
    )
    return LimitCurrent(plus=plus, minus=minus, description="pi_1^* mu+ + pi_2^* mu-")


def _fiber_pairing(
    cloud: WeightedPointCloud, form: TestForm, grid: SphereGrid, key: str
) -> complex:
    """sum_atoms w * integral over the other factor of the ``key`` coefficient."""
    if not form.has(key):
        return 0.0j
    area = grid.area_weights
    chunk = max(1, _CHUNK_POINTS // grid.size)
    total = 0.0j
    for start in range(0, cloud.size, chunk):
        atoms = cloud.atoms[start : start + chunk, None]
        weights = cloud.weights[start : start + chunk]
        if key == "b":
            coeff = form.component("b", atoms, grid.nodes[None, :])
        else:
            coeff = form.component("a", grid.nodes[None, :], atoms)
        coeff = np.where(np.isfinite(coeff), coeff, 0.0)
        total += complex(np.sum(weights * (coeff @ area)))
    return total


def pair_pullback_current(
    cloud: WeightedPointCloud, form: TestForm, grid: SphereGrid, factor: int = 1
) -> complex:
    """<pi_factor^* cloud, form>: only the component along the fibers contributes."""
    if factor not in (1, 2):
        raise ValueError(f"factor must be 1 or 2, got {factor}")
    return _fiber_pairing(cloud, form, grid, "b" if factor == 1 else "a")


def pair_limit_current(limit: LimitCurrent, beta: TestForm, grid: Optional[object] = None) -> complex:
    sphere = _resolve_grid(grid)
    total = 0.0j
    if limit.plus is not None:
        total += pair_pullback_current(limit.plus, beta, sphere, factor=1)
    if limit.minus is not None:
        total += pair_pullback_current(limit.minus, beta, sphere, factor=2)
    return total


# ---------------------------------------------------------------------------
# Separated variables
# ---------------------------------------------------------------------------


def separated_variables_check(
    f: Correspondence,
    n: int,
    phi: ScalarTestFunction,
    theta: ScalarTestFunction,
    grid: Optional[object] = None,
) -> Tuple[complex, complex]:
    """
    (<[Γ_n], phi(x) theta(y) rho(y) dy^dȳ>, <(f^n)_* phi, theta>_omega), both unnormalized.

    The two agree by the covering identity over the target factor.
    """
    sphere = _resolve_grid(grid)
    form = TestForm(
        "separated",
        {"b": lambda x, y: phi(x) * theta(y) * fubini_study_density(y)},
    )
    estimate = pair_graph_current(f, n, form, "tree", sphere, covering="target")
    pairing = estimate.value * float(f.d2) ** n
    pushed = phi
    for _ in range(n):
        pushed = pushforward_function(f, pushed)
    direct = complex(sphere.integrate(pushed(sphere.nodes) * theta(sphere.nodes)))
    return pairing, direct


# ---------------------------------------------------------------------------
# Convergence experiment
# ---------------------------------------------------------------------------


@dataclass
class PairingRow:
    n: int
    pairing: complex
    limit: complex
    abs_error: float
    noise: float = 0.0
    standard_error: float = 0.0
    mass: float = float("nan")  # <d2^-n [Γ_n], Omega>


@dataclass
class PairingReport:
    form_id: str
    rows: List[PairingRow] = field(default_factory=list)
    fitted_rate: Optional[float] = None  # None means indeterminate
    fit_quality: Optional[float] = None
    noise_floor: float = 0.0
    predicted_rate: Optional[float] = None
    strategy: str = "tree"
    warnings: List[str] = field(default_factory=list)

    @property
    def indeterminate(self) -> bool:
        return self.fitted_rate is None

    @property
    def errors(self) -> List[float]:
        return [row.abs_error for row in self.rows]

    def mass_bound_holds(self, bound: float = 2.0) -> bool:
        masses = [row.mass for row in self.rows if np.isfinite(row.mass)]
        return all(m < bound for m in masses)


def convergence_experiment(
    f: Correspondence,
    forms: Sequence[TestForm],
    n_max: int,
    strategy: str = "tree",
    quadrature: QuadratureSpec = QuadratureSpec(),
    samples: Optional[int] = None,
    covering: str = "split",
    limit: Optional[LimitCurrent] = None,
    limit_depth: int = 12,
    seed_point: Optional[complex] = None,
    rng: Optional[np.random.Generator] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
    on_step: Optional[Callable[[int, List[PairingRow]], None]] = None,
) -> List[PairingReport]:
    """
    Rows (n, <d2^-n [Γ_n], beta>, <Γ_inf, beta>, |difference|) for n = 1..n_max per form.

    Each form gets an exponential rate fitted over the rows whose error exceeds ten times
    the row's noise (grid difference combined with the sampling error).
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if f.d1 > f.d2:
        raise ValueError(
            f"convergence experiments need d1 <= d2, got ({f.d1}, {f.d2}); use the adjoint"
        )
    if not forms:
        raise ValueError("at least one test form is required")
    if strategy == "symbolic":
        check_iterate_budget(f, n_max, budget)
    rng = rng if rng is not None else np.random.default_rng(0)
    if limit is None:
        limit = limit_current(f, depth=limit_depth, seed=seed_point, rng=rng, budget=budget)
    fine_grid = SphereGrid.from_spec(quadrature)
    coarse_grid = SphereGrid.from_spec(quadrature, coarse=True)
    omega = fubini_study_form()
    limits_fine = [pair_limit_current(limit, form, fine_grid) for form in forms]
    limits_coarse = [pair_limit_current(limit, form, coarse_grid) for form in forms]
    fine = GraphPairing(
        f, fine_grid, strategy, samples, covering, np.random.default_rng(rng.integers(2**63)), budget
    )
    coarse = GraphPairing(
        f, coarse_grid, strategy, samples, covering, np.random.default_rng(rng.integers(2**63)), budget
    )
    reports = [
        PairingReport(
            form_id=form.name,
            strategy=strategy,
            predicted_rate=predicted_rate(f.d1, f.d2, min(form.alpha, 5.0)),
            warnings=list(f.notes),
        )
        for form in forms
    ]
    for n in range(1, n_max + 1):
        fine.advance(n)
        coarse.advance(n)
        mass = fine.evaluate(omega).value.real
        step_rows = []
        for i, form in enumerate(forms):
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", NumericalWarning)
                est_fine = fine.evaluate(form)
                est_coarse = coarse.evaluate(form)
            reports[i].warnings.extend(str(w.message) for w in caught)
            error_fine = est_fine.value - limits_fine[i]
            error_coarse = est_coarse.value - limits_coarse[i]
            noise = float(np.hypot(abs(error_fine - error_coarse), est_fine.standard_error))
            row = PairingRow(
                n=n,
                pairing=est_fine.value,
                limit=limits_fine[i],
                abs_error=float(abs(error_fine)),
                noise=noise,
                standard_error=est_fine.standard_error,
                mass=float(mass),
            )
            reports[i].rows.append(row)
            step_rows.append(row)
        if on_step is not None:
            on_step(n, step_rows)
    for report in reports:
        fit = fit_exponential_rate(
            [r.n for r in report.rows], report.errors, [r.noise for r in report.rows]
        )
        report.fitted_rate = fit.rate
        report.fit_quality = fit.r_squared
        report.noise_floor = max((r.noise for r in report.rows), default=0.0)
    return reports


__all__ = [
    "STRATEGIES",
    "COVERINGS",
    "PairingEstimate",
    "strategies_agree",
    "pullback_determinant",
    "pulled_back_density",
    "covering_plan",
    "GraphPairing",
    "pair_graph_current",
    "pair_graph_current_with_error",
    "LimitCurrent",
    "limit_current",
    "pair_pullback_current",
    "pair_limit_current",
    "separated_variables_check",
    "PairingRow",
    "PairingReport",
    "convergence_experiment",
]
