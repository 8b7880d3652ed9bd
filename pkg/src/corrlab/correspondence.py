"""
Holomorphic correspondences on P¹ and their iterates.

A correspondence wraps its graph polynomial. Forward evaluation solves P(x, ·) = 0
(d1 values), backward evaluation solves P(·, y) = 0 (d2 values). Composition
eliminates the middle variable with a Sylvester resultant; iterates are built by
repeated composition under a degree budget. Orbit trees follow branches one step at a
time instead, carrying implicit-differentiation derivatives y' = -P_x / P_y.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import BudgetExceededError, DegeneratePolynomialError
from .polynomial import (
    DEFAULT_ROOT_CONFIG,
    BihomogeneousPolynomial,
    RootConfig,
    evaluate_partials,
    roots,
    roots_batch,
    strip_fiber_factors,
    sylvester_resultant,
)
from .projective import INFINITY, from_chart, invert, to_chart


@dataclass(frozen=True)
class BudgetConfig:
    iterate_cap: int = 4096  # max d1**n and d2**n for symbolic iterates
    full_tree_cap: int = 1 << 16  # max leaves per source point in full orbit trees
    root_degree_cap: int = 4096  # max nominal degree handed to the root solver
    ramification_tolerance: float = 1e-10  # |P_y| relative to |P_x| + |P_y|


DEFAULT_BUDGET = BudgetConfig()


@dataclass(frozen=True, eq=False)
class Correspondence:
    """Correspondence given by its graph; d1 = y-degree, d2 = x-degree."""

    graph: BihomogeneousPolynomial
    name: str = "anonymous"
    notes: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        m, n = self.graph.bidegree
        if m < 1 or n < 1:
            raise ValueError(f"graph of bidegree {(m, n)} is a union of fibers, not a correspondence")

    @property
    def d1(self) -> int:
        return self.graph.n

    @property
    def d2(self) -> int:
        return self.graph.m

    @property
    def degrees(self) -> Tuple[int, int]:
        return self.d1, self.d2


@dataclass
class BranchSet:
    """Images of a batch of source points with standard-chart derivatives dy/dx."""

    sources: np.ndarray  # (K,)
    values: np.ndarray  # (K, d1)
    derivatives: np.ndarray  # (K, d1), NaN where undefined
    undefined: np.ndarray  # (K, d1) bool


@dataclass
class ChartDerivatives:
    """Implicit derivative dY/dX of the branch through (x, y), in the chart pair of the point."""

    X: np.ndarray
    x_chart: np.ndarray
    Y: np.ndarray
    y_chart: np.ndarray
    local: np.ndarray
    undefined: np.ndarray


def chart_derivatives(
    graph: BihomogeneousPolynomial,
    x: np.ndarray,
    y: np.ndarray,
    ramification_tolerance: float = DEFAULT_BUDGET.ramification_tolerance,
) -> ChartDerivatives:
    """Local derivative -P_X / P_Y in the chart pair where both coordinates have modulus <= 1."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex))
    X, cx = to_chart(x)
    Y, cy = to_chart(y)
    local = np.full(x.shape, np.nan + 0j)
    undefined = np.ones(x.shape, dtype=bool)
    for chart in ((0, 0), (0, 1), (1, 0), (1, 1)):
        mask = (cx == chart[0]) & (cy == chart[1])
        if not np.any(mask):
            continue
        px, py = evaluate_partials(graph, X[mask], Y[mask], chart)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            value = -px / py
        bad = np.abs(py) <= ramification_tolerance * (np.abs(px) + np.abs(py))
        bad |= ~np.isfinite(value)
        local[mask] = np.where(bad, np.nan + 0j, value)
        undefined[mask] = bad
    return ChartDerivatives(X, cx, Y, cy, local, undefined)


def branch_derivatives(
    graph: BihomogeneousPolynomial,
    x: np.ndarray,
    y: np.ndarray,
    ramification_tolerance: float = DEFAULT_BUDGET.ramification_tolerance,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    dy/dx along the branch through each (x, y) on the graph.

    The implicit derivative is taken in the chart pair of the point and converted back
    to the standard affine coordinates; points with x or y at infinity are undefined.
    """
    cd = chart_derivatives(graph, x, y, ramification_tolerance)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        dX_dx = np.where(cd.x_chart == 1, -(cd.X**2), 1.0)
        dy_dY = np.where(cd.y_chart == 1, -1.0 / np.where(cd.Y == 0, np.nan, cd.Y) ** 2, 1.0)
        value = cd.local * dy_dY * dX_dx
    undefined = cd.undefined | ~np.isfinite(value) | ((cd.x_chart == 1) & (cd.X == 0))
    return np.where(undefined, np.nan + 0j, value), undefined


def forward_branches(
    f: Correspondence,
    xs: np.ndarray,
    config: RootConfig = DEFAULT_ROOT_CONFIG,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> BranchSet:
    """All d1 images of each source point, with branch derivatives."""
    xs = np.asarray(xs, dtype=complex).ravel()
    if f.d1 > budget.root_degree_cap:
        raise BudgetExceededError(
            f"fiber degree {f.d1} exceeds root-solver cap {budget.root_degree_cap}; "
            "use orbit-tree sampling instead of the symbolic iterate"
        )
    coeffs = f.graph.y_fiber(xs)
    scale = np.max(np.abs(coeffs), axis=1)
    if np.any(scale == 0.0):
        raise RuntimeError("graph restricted to a fiber vanishes identically: invalid graph")
    ys = roots_batch(coeffs, config)
    deriv, undefined = branch_derivatives(
        f.graph, xs[:, None], ys, budget.ramification_tolerance
    )
    return BranchSet(sources=xs, values=ys, derivatives=deriv, undefined=undefined)


def evaluate_forward(f: Correspondence, x: complex) -> np.ndarray:
    """The d1 points of f(x), repeated according to multiplicity."""
    return forward_branches(f, np.array([x])).values[0]


def evaluate_backward(f: Correspondence, y: complex) -> np.ndarray:
    """The d2 points of f^-1(y)."""
    return evaluate_forward(adjoint(f), y)


def adjoint(f: Correspondence) -> Correspondence:
    name = f.name[:-3] if f.name.endswith("^-1") else f"{f.name}^-1"
    return Correspondence(f.graph.transpose(), name=name, notes=f.notes)


def compose(f: Correspondence, g: Correspondence) -> Correspondence:
    """
    The correspondence x -> g(f(x)): follow f, then g.

    The resultant eliminates the middle point; fibers are stripped against the
    expected bidegree (d2(f) d2(g), d1(f) d1(g)).
    """
    resultant = sylvester_resultant(f.graph, g.graph)
    expected = (f.d2 * g.d2, f.d1 * g.d1)
    stripped = strip_fiber_factors(resultant, expected)
    notes = f.notes + g.notes + tuple(stripped.warnings)
    return Correspondence(stripped.polynomial, name=f"({f.name});({g.name})", notes=notes)


def check_iterate_budget(f: Correspondence, n: int, budget: BudgetConfig) -> None:
    if n < 1:
        raise ValueError(f"iterate order must be >= 1, got {n}")
    worst = max(f.d1, f.d2) ** n
    if worst > budget.iterate_cap:
        raise BudgetExceededError(
            f"iterate {n} of {f.name} has degree {worst} > cap {budget.iterate_cap}; "
            "use orbit-tree sampling (strategy 'tree') instead"
        )


def iterates(
    f: Correspondence, n_max: int, budget: BudgetConfig = DEFAULT_BUDGET
) -> Iterator[Tuple[int, Correspondence]]:
    """Yield (n, f^n) for n = 1..n_max, one composition per step."""
    check_iterate_budget(f, n_max, budget)
    current = f
    yield 1, current
    for n in range(2, n_max + 1):
        current = compose(current, f)
        yield n, Correspondence(current.graph, name=f"{f.name}^{n}", notes=current.notes)


def iterate(f: Correspondence, n: int, budget: BudgetConfig = DEFAULT_BUDGET) -> Correspondence:
    result = f
    for _, result in iterates(f, n, budget):
        pass
    return result


# ---------------------------------------------------------------------------
# Orbit trees
# ---------------------------------------------------------------------------


@dataclass
class OrbitTree:
    """
    Forward orbits of one point to a fixed depth.

    Level j holds the points reached after j steps; ``parents[j][i]`` indexes the
    point of level j-1 that produced point i of level j, and ``derivatives[j][i]``
    is the derivative of that edge. Full trees have d1**j points per level, sampled
    trees carry k independent paths at every level.
    """

    root: complex
    depth: int
    mode: str
    levels: List[np.ndarray] = field(default_factory=list)
    parents: List[np.ndarray] = field(default_factory=list)
    derivatives: List[np.ndarray] = field(default_factory=list)
    undefined: List[np.ndarray] = field(default_factory=list)
    weights: np.ndarray = field(default_factory=lambda: np.ones(1))

    @property
    def leaves(self) -> np.ndarray:
        return self.levels[-1]

    def path_derivatives(self) -> np.ndarray:
        """Derivative of f^depth along each leaf path (product of edge derivatives)."""
        total = np.ones(self.leaves.shape, dtype=complex)
        index = np.arange(self.leaves.size)
        for j in range(self.depth, 0, -1):
            total = total * self.derivatives[j][index]
            index = self.parents[j][index]
        return total


def branch_tree(
    f: Correspondence,
    x0: complex,
    n: int,
    mode: str = "full",
    k: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> OrbitTree:
    """
    Orbit tree of x0 under f to depth n.

    ``mode="full"`` enumerates all d1**n leaf paths (weight 1 each); ``mode="sampled"``
    follows k paths choosing a uniformly random branch at every step, each path
    weighted d1**n / k.
    """
    if n < 0:
        raise ValueError(f"depth must be >= 0, got {n}")
    if mode == "full":
        if f.d1**n > budget.full_tree_cap:
            raise BudgetExceededError(
                f"full tree would have {f.d1 ** n} leaves > cap {budget.full_tree_cap}; "
                "use mode='sampled'"
            )
    elif mode == "sampled":
        if k is None or k < 1:
            raise ValueError("sampled mode needs k >= 1 paths")
        if rng is None:
            rng = np.random.default_rng(0)
    else:
        raise ValueError(f"unknown tree mode {mode!r}")

    start = np.array([x0], dtype=complex) if mode == "full" else np.full(k, x0, dtype=complex)
    tree = OrbitTree(root=complex(x0), depth=n, mode=mode)
    tree.levels.append(start)
    tree.parents.append(np.zeros(0, dtype=int))
    tree.derivatives.append(np.ones(start.shape, dtype=complex))
    tree.undefined.append(np.zeros(start.shape, dtype=bool))
    current = start
    for _ in range(n):
        branches = forward_branches(f, current, budget=budget)
        if mode == "full":
            values = branches.values.ravel()
            derivs = branches.derivatives.ravel()
            flags = branches.undefined.ravel()
            parents = np.repeat(np.arange(current.size), f.d1)
        else:
            pick = rng.integers(0, f.d1, size=current.size)
            rows = np.arange(current.size)
            values = branches.values[rows, pick]
            derivs = branches.derivatives[rows, pick]
            flags = branches.undefined[rows, pick]
            parents = rows
        tree.levels.append(values)
        tree.parents.append(parents)
        tree.derivatives.append(derivs)
        tree.undefined.append(flags)
        current = values
    if mode == "full":
        tree.weights = np.ones(current.size)
    else:
        tree.weights = np.full(current.size, f.d1**n / k)
    return tree


@dataclass
class PathBundle:
    """Leaves of orbit trees grown from many source points at once."""

    sources: np.ndarray  # (K,)
    leaves: np.ndarray  # (K, L)
    slopes: np.ndarray  # (K, L) derivative of f^depth along each path
    undefined: np.ndarray  # (K, L)
    weights: np.ndarray  # (K, L)
    depth: int = 0
    samples: Optional[int] = None  # paths per source; None for full trees


def start_paths(sources: np.ndarray, samples: Optional[int] = None) -> PathBundle:
    """Depth-0 bundle: every source is its own leaf (``samples`` copies when sampling)."""
    sources = np.asarray(sources, dtype=complex).ravel()
    if samples is not None and samples < 1:
        raise ValueError("samples must be >= 1")
    width = 1 if samples is None else samples
    leaves = np.repeat(sources[:, None], width, axis=1)
    return PathBundle(
        sources=sources,
        leaves=leaves,
        slopes=np.ones(leaves.shape, dtype=complex),
        undefined=np.zeros(leaves.shape, dtype=bool),
        weights=np.full(leaves.shape, 1.0 / width),
        samples=samples,
    )


def extend_paths(
    f: Correspondence,
    bundle: PathBundle,
    rng: Optional[np.random.Generator] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> PathBundle:
    """
    Follow every path one more step.

    Full trees branch into all d1 images; sampled paths pick one image uniformly at
    random and multiply their weight by d1, so weights always sum to d1**depth per source.
    """
    K, width = bundle.leaves.shape
    d = f.d1
    if bundle.samples is None and width * d > budget.full_tree_cap:
        raise BudgetExceededError(
            f"full tree would have {width * d} leaves per node > cap {budget.full_tree_cap}; "
            "use sampled paths"
        )
    br = forward_branches(f, bundle.leaves.ravel(), budget=budget)
    vals = br.values.reshape(K, width, d)
    ders = br.derivatives.reshape(K, width, d)
    flags = br.undefined.reshape(K, width, d)
    if bundle.samples is None:
        leaves = vals.reshape(K, width * d)
        slopes = (bundle.slopes[:, :, None] * ders).reshape(K, width * d)
        undefined = (bundle.undefined[:, :, None] | flags).reshape(K, width * d)
        weights = np.repeat(bundle.weights, d, axis=1)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        pick = rng.integers(0, d, size=(K, width))[:, :, None]
        leaves = np.take_along_axis(vals, pick, axis=2)[:, :, 0]
        slopes = bundle.slopes * np.take_along_axis(ders, pick, axis=2)[:, :, 0]
        undefined = bundle.undefined | np.take_along_axis(flags, pick, axis=2)[:, :, 0]
        weights = bundle.weights * d
    return PathBundle(
        bundle.sources, leaves, slopes, undefined, weights, bundle.depth + 1, bundle.samples
    )


def propagate(
    f: Correspondence,
    sources: np.ndarray,
    depth: int,
    samples: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> PathBundle:
    """
    Grow an orbit tree from every source point.

    ``samples=None`` enumerates all d1**depth paths per source (weight 1 each), otherwise
    each source carries ``samples`` uniformly sampled paths of weight d1**depth / samples.
    """
    if samples is None and f.d1**depth > budget.full_tree_cap:
        raise BudgetExceededError(
            f"full tree would have {f.d1 ** depth} leaves per node > cap "
            f"{budget.full_tree_cap}; use sampled paths"
        )
    bundle = start_paths(sources, samples)
    for _ in range(depth):
        bundle = extend_paths(f, bundle, rng, budget)
    return bundle


def _cluster_matrix(values: np.ndarray, radius: float) -> np.ndarray:
    """(K, d, d) mask of finite values within ``radius`` (relative to 1 + |y|) of each other."""
    finite = np.isfinite(values)
    v = np.where(finite, values, 0.0)
    scale = np.maximum(1.0, np.abs(v))
    close = np.abs(v[:, :, None] - v[:, None, :]) <= radius * scale[:, :, None]
    return close & finite[:, :, None] & finite[:, None, :]


def average_clusters(
    values: np.ndarray, derivatives: np.ndarray, radius: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Replace the members of each numerically split multiple root by the cluster mean.

    A k-fold root perturbed at relative size eps splits into k points about eps**(1/k)
    apart whose centroid is accurate to O(eps); derivatives are averaged the same way.
    """
    close = _cluster_matrix(values, radius)
    count = close.sum(axis=2)
    if np.all(count <= 1):
        return values, derivatives
    finite = np.isfinite(values)
    v = np.where(finite, values, 0.0)
    safe = np.maximum(count, 1)
    merged = np.where(finite, (close * v[:, None, :]).sum(axis=2) / safe, values)
    d_ok = np.isfinite(derivatives)
    d_close = close & d_ok[:, None, :]
    d_count = d_close.sum(axis=2)
    d_sum = (d_close * np.where(d_ok, derivatives, 0.0)[:, None, :]).sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        merged_d = np.where(d_count > 0, d_sum / d_count, derivatives)
    return merged, merged_d


def symbolic_paths(
    fn: Correspondence,
    sources: np.ndarray,
    cluster_radius: float = 1e-3,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> PathBundle:
    """
    Same result shape as ``propagate`` but read off the graph of the iterate fn directly.

    Iterates of graphs with repeated components have multiple roots in every fiber;
    those are merged with ``average_clusters`` and refined with ``polish_clusters``.
    """
    br = forward_branches(fn, sources, budget=budget)
    counts = _cluster_matrix(br.values, cluster_radius).sum(axis=2)
    values, derivs = average_clusters(br.values, br.derivatives, cluster_radius)
    values, derivs = polish_clusters(fn.graph, br.sources, values, derivs, counts, cluster_radius)
    undefined = br.undefined & ~np.isfinite(derivs)
    return PathBundle(br.sources, values, derivs, undefined, np.ones(values.shape), depth=1)


def polish_clusters(
    graph: BihomogeneousPolynomial,
    sources: np.ndarray,
    values: np.ndarray,
    derivatives: np.ndarray,
    counts: np.ndarray,
    radius: float,
    newton_steps: int = 3,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Refine merged k-fold roots and their slopes on the reduced component.

    Near a k-fold root the graph factors as R^k S with R_Y != 0, so Q = d^(k-1)P / dY^(k-1)
    vanishes simply on R = 0. Newton steps on Q(X, ·) from the cluster mean recover the
    root to working precision, and -Q_X / Q_Y is the slope of the component. Both are taken
    in the chart pair of the point. Steps that leave the cluster radius are discarded.
    """
    values = np.array(values, dtype=complex)
    derivatives = np.array(derivatives, dtype=complex)
    xs = np.broadcast_to(np.asarray(sources, dtype=complex)[:, None], values.shape)
    for k in np.unique(counts[counts > 1]):
        mask = (counts == k) & np.isfinite(values)
        if not np.any(mask):
            continue
        X, cx = to_chart(xs[mask])
        Y0, cy = to_chart(values[mask])
        Y = Y0.copy()
        local = np.full(Y.shape, np.nan + 0j)
        for chart in ((0, 0), (0, 1), (1, 0), (1, 1)):
            sel = (cx == chart[0]) & (cy == chart[1])
            if not np.any(sel):
                continue
            Q = npoly.polyder(graph.chart_coefficients(chart), m=int(k) - 1, axis=1)
            Q_x, Q_y = npoly.polyder(Q, axis=0), npoly.polyder(Q, axis=1)
            Ys = Y[sel]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                for _ in range(newton_steps):
                    Ys = Ys - npoly.polyval2d(X[sel], Ys, Q) / npoly.polyval2d(X[sel], Ys, Q_y)
                slope = -npoly.polyval2d(X[sel], Ys, Q_x) / npoly.polyval2d(X[sel], Ys, Q_y)
            reach = radius * np.maximum(1.0, np.abs(Y0[sel]))
            ok = np.isfinite(Ys) & (np.abs(Ys - Y0[sel]) <= reach)
            Y[sel] = np.where(ok, Ys, Y0[sel])
            local[sel] = np.where(ok & np.isfinite(slope), slope, np.nan + 0j)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            dX_dx = np.where(cx == 1, -(X**2), 1.0)
            dy_dY = np.where(cy == 1, -1.0 / np.where(Y == 0, np.nan, Y) ** 2, 1.0)
            slope = local * dy_dY * dX_dx
        keep = np.isfinite(slope) & ~((cx == 1) & (X == 0))
        values[mask] = from_chart(Y, cy)
        derivatives[mask] = np.where(keep, slope, derivatives[mask])
    return values, derivatives


# ---------------------------------------------------------------------------
# Periodic points
# ---------------------------------------------------------------------------


@dataclass
class PeriodicPointRecord:
    point: complex
    period: int
    multiplicity: int
    multiplier_modulus: Optional[float]  # None means undefined

    @property
    def classification(self) -> str:
        if self.multiplier_modulus is None:
            return "undefined"
        if self.multiplier_modulus > 1.0 + 1e-6:
            return "repelling"
        if self.multiplier_modulus < 1.0 - 1e-6:
            return "attracting"
        return "indifferent"


def _multiplier_modulus(
    fn: Correspondence, p: complex, separation: float, budget: BudgetConfig
) -> Optional[float]:
    chart = (1, 1) if (np.isinf(p) or abs(p) > 1.0) else (0, 0)
    X = complex(invert(p)) if chart == (1, 1) else complex(p)
    images = forward_branches(fn, np.array([p]), budget=budget).values[0]
    Y = invert(images) if chart == (1, 1) else images
    dist = np.sort(np.abs(np.where(np.isfinite(Y), Y, np.inf) - X))
    if dist.size > 1 and dist[1] < separation:
        return None
    px, py = evaluate_partials(fn.graph, np.array([X]), np.array([X]), chart)
    px, py = complex(px[0]), complex(py[0])
    if abs(py) <= budget.ramification_tolerance * (abs(px) + abs(py)):
        return None
    return abs(px / py)


def periodic_points(
    f: Correspondence,
    n: int,
    separation: float = 1e-5,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> List[PeriodicPointRecord]:
    """
    Points of period n: the graph of f^n restricted to the diagonal.

    The diagonal restriction is a binary form of degree d1**n + d2**n, so the
    multiplicities always add up to that number (points at infinity included).
    """
    total = f.d1**n + f.d2**n
    if total > budget.root_degree_cap:
        raise BudgetExceededError(
            f"diagonal degree {total} exceeds root-solver cap {budget.root_degree_cap}"
        )
    fn = iterate(f, n, budget)
    diag = fn.graph.diagonal()
    if diag.scale <= 1e-10:
        raise DegeneratePolynomialError(f"diagonal component: the graph of {fn.name} contains the diagonal")
    found = roots(diag, nominal_degree=fn.graph.m + fn.graph.n)
    records = []
    for r in found:
        point = INFINITY if r.is_infinite else r.point
        records.append(
            PeriodicPointRecord(
                point=point,
                period=n,
                multiplicity=r.multiplicity,
                multiplier_modulus=_multiplier_modulus(fn, point, separation, budget),
            )
        )
    return records


__all__ = [
    "BudgetConfig",
    "DEFAULT_BUDGET",
    "Correspondence",
    "BranchSet",
    "ChartDerivatives",
    "chart_derivatives",
    "branch_derivatives",
    "forward_branches",
    "evaluate_forward",
    "evaluate_backward",
    "adjoint",
    "compose",
    "check_iterate_budget",
    "iterates",
    "iterate",
    "OrbitTree",
    "branch_tree",
    "PathBundle",
    "start_paths",
    "extend_paths",
    "propagate",
    "average_clusters",
    "symbolic_paths",
    "polish_clusters",
    "PeriodicPointRecord",
    "periodic_points",
]
