"""
Discrete measures on P¹ and the push/pull operators of a correspondence.

Measures are weighted point clouds. Pushforward replaces an atom by its d1 images,
pullback by its d2 preimages, each image carrying the atom's weight, so total mass is
multiplied by d1 (resp. d2). Functions move the other way: f_* psi(y) sums psi over
the d2 preimages of y, which makes <f^* nu, psi> = <nu, f_* psi> a rearrangement of
finite sums.

Equilibrium measures are estimated by normalized iterated pullbacks (mu, mu+) or
pushforwards (mu-) of a generic Dirac mass, either on the full orbit tree or on
sampled branch paths.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .correspondence import (
    DEFAULT_BUDGET,
    BudgetConfig,
    Correspondence,
    adjoint,
    branch_tree,
    extend_paths,
    forward_branches,
    start_paths,
)
from .errors import NumericalWarning
from .projective import INFINITY, fs_random_points, sphere_embedding, to_chart
from .sphere import SphereGrid

COMPACTION_THRESHOLD = 1_000_000
COMPACTION_RADIUS = 1e-9
DEFAULT_EXCEPTIONAL_POINTS: Tuple[complex, ...] = (0.0, INFINITY)


@dataclass
class WeightedPointCloud:
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        self.atoms = np.asarray(self.atoms, dtype=complex).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.atoms.shape != self.weights.shape:
            raise ValueError(
                f"{self.atoms.size} atoms but {self.weights.size} weights in point cloud"
            )
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("point cloud weights must be finite")
        if np.any(self.weights < 0.0):
            raise ValueError("point cloud weights must be nonnegative")
        if np.any(np.isnan(self.atoms)):
            raise ValueError("point cloud atoms contain NaN")

    @classmethod
    def dirac(cls, point: complex, weight: float = 1.0) -> "WeightedPointCloud":
        return cls(np.array([point]), np.array([weight]))

    @classmethod
    def uniform(cls, points: Sequence[complex]) -> "WeightedPointCloud":
        pts = np.asarray(points, dtype=complex).ravel()
        return cls(pts, np.full(pts.size, 1.0 / pts.size))

    @classmethod
    def fubini_study(cls, rng: np.random.Generator, size: int) -> "WeightedPointCloud":
        """Random probability cloud with atoms drawn from the Fubini-Study measure."""
        return cls.uniform(fs_random_points(rng, size))

    @property
    def size(self) -> int:
        return self.atoms.size

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def scaled(self, factor: float) -> "WeightedPointCloud":
        return WeightedPointCloud(self.atoms, self.weights * factor)

    def normalized(self) -> "WeightedPointCloud":
        mass = self.total_mass
        if mass <= 0.0:
            raise ValueError("cannot normalize a cloud of zero mass")
        return self.scaled(1.0 / mass)

    def merged(self, other: "WeightedPointCloud") -> "WeightedPointCloud":
        return WeightedPointCloud(
            np.concatenate([self.atoms, other.atoms]),
            np.concatenate([self.weights, other.weights]),
        )


def compact(cloud: WeightedPointCloud, radius: float = COMPACTION_RADIUS) -> WeightedPointCloud:
    """Merge atoms falling in the same radius-sized cell of their chart, summing weights."""
    coords, chart = to_chart(cloud.atoms)
    keys = np.stack(
        [chart, np.round(coords.real / radius), np.round(coords.imag / radius)], axis=1
    )
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    weights = np.bincount(inverse.ravel(), weights=cloud.weights, minlength=first.size)
    return WeightedPointCloud(cloud.atoms[first], weights)


def _maybe_compact(cloud: WeightedPointCloud) -> WeightedPointCloud:
    if cloud.size > COMPACTION_THRESHOLD:
        return compact(cloud)
    return cloud


@dataclass(frozen=True)
class ScalarTestFunction:
    """Chart-aware test function psi on P¹ with a declared smoothness class and norm bound."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    smoothness: str = "C1"
    norm_bound: float = 1.0
    name: str = "psi"

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.evaluator(np.asarray(z, dtype=complex))

    def check_bound(self, rng: np.random.Generator, samples: int = 1000) -> bool:
        values = self(fs_random_points(rng, samples))
        return bool(np.max(np.abs(values)) <= self.norm_bound * (1.0 + 1e-12))


def constant_function(value: complex = 1.0) -> ScalarTestFunction:
    return ScalarTestFunction(
        lambda z: np.full(np.shape(z), value, dtype=complex),
        smoothness="C2",
        norm_bound=abs(value),
        name=f"const({value})",
    )


def sphere_coordinate_function(k: int, scale: float = 1.0) -> ScalarTestFunction:
    """psi = scale * S_k(z), the k-th coordinate (1, 2 or 3) of the unit-sphere model."""
    if k not in (1, 2, 3):
        raise ValueError(f"sphere coordinate index must be 1, 2 or 3, got {k}")

    def evaluate(z: np.ndarray) -> np.ndarray:
        return scale * sphere_embedding(z)[k - 1].astype(complex)

    return ScalarTestFunction(evaluate, smoothness="C2", norm_bound=abs(scale), name=f"S{k}")


def modulus_ratio_function() -> ScalarTestFunction:
    """psi(z) = |z|² / (1 + |z|²), equal to 1 at infinity."""

    def evaluate(z: np.ndarray) -> np.ndarray:
        return ((1.0 + sphere_embedding(z)[2]) / 2.0).astype(complex)

    return ScalarTestFunction(evaluate, smoothness="C2", norm_bound=1.0, name="modulus_ratio")


def real_part_ratio_function() -> ScalarTestFunction:
    """psi(z) = Re z / (1 + |z|²)."""

    def evaluate(z: np.ndarray) -> np.ndarray:
        return (sphere_embedding(z)[0] / 2.0).astype(complex)

    return ScalarTestFunction(evaluate, smoothness="C2", norm_bound=1.0, name="real_part_ratio")


# ---------------------------------------------------------------------------
# Push and pull
# ---------------------------------------------------------------------------


def pushforward_measure(
    f: Correspondence, nu: WeightedPointCloud, budget: BudgetConfig = DEFAULT_BUDGET
) -> WeightedPointCloud:
    images = forward_branches(f, nu.atoms, budget=budget).values
    cloud = WeightedPointCloud(images.ravel(), np.repeat(nu.weights, f.d1))
    return _maybe_compact(cloud)


def pullback_measure(
    f: Correspondence, nu: WeightedPointCloud, budget: BudgetConfig = DEFAULT_BUDGET
) -> WeightedPointCloud:
    return pushforward_measure(adjoint(f), nu, budget)


def pushforward_function(
    f: Correspondence, psi: ScalarTestFunction, budget: BudgetConfig = DEFAULT_BUDGET
) -> ScalarTestFunction:
    """y -> sum of psi over the d2 preimages of y, with multiplicity."""
    back = adjoint(f)

    def evaluate(y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=complex)
        pre = forward_branches(back, y.ravel(), budget=budget).values
        return np.sum(psi(pre), axis=1).reshape(y.shape)

    return ScalarTestFunction(
        evaluate, smoothness="C0", norm_bound=f.d2 * psi.norm_bound, name=f"push({psi.name})"
    )


def pair_measure_function(nu: WeightedPointCloud, psi: ScalarTestFunction) -> complex:
    return complex(np.sum(nu.weights * psi(nu.atoms)))


def moments(nu: WeightedPointCloud, k_max: int) -> Dict[int, complex]:
    """Power moments sum w z^k for k = 1..k_max."""
    if np.any(np.isinf(nu.atoms) & (nu.weights > 0.0)):
        raise ValueError("power moments are undefined for clouds with mass at infinity")
    return {k: complex(np.sum(nu.weights * nu.atoms**k)) for k in range(1, k_max + 1)}


# ---------------------------------------------------------------------------
# Equilibrium measures
# ---------------------------------------------------------------------------


def _generic_seed(
    seed: Optional[complex],
    rng: np.random.Generator,
    exceptional: Sequence[complex],
    tolerance: float = 1e-8,
) -> complex:
    def is_exceptional(z: complex) -> bool:
        for e in exceptional:
            if np.isinf(e) and np.isinf(z):
                return True
            if np.isfinite(e) and np.isfinite(z) and abs(z - e) <= tolerance * max(1.0, abs(e)):
                return True
        return False

    if seed is not None and not is_exceptional(seed):
        return complex(seed)
    if seed is not None:
        warnings.warn(
            f"seed {seed} is an exceptional point; re-drawing from the Fubini-Study measure",
            NumericalWarning,
            stacklevel=3,
        )
    candidate = complex(fs_random_points(rng, 1)[0])
    while is_exceptional(candidate):
        candidate = complex(fs_random_points(rng, 1)[0])
    return candidate


def equilibrium_measure(
    f: Correspondence,
    seed: Optional[complex] = None,
    depth: int = 12,
    mode: str = "full",
    k: Optional[int] = None,
    direction: str = "backward",
    rng: Optional[np.random.Generator] = None,
    exceptional: Sequence[complex] = DEFAULT_EXCEPTIONAL_POINTS,
    budget: BudgetConfig = DEFAULT_BUDGET,
) -> WeightedPointCloud:
    """
    Probability cloud approximating an equilibrium measure.

    ``direction="backward"`` returns d2**-depth (f**depth)^* delta_seed (mu, or mu+ in the
    balanced case); ``direction="forward"`` returns d1**-depth (f**depth)_* delta_seed (mu-).
    Sampled mode follows k random branch paths of weight 1/k each.
    """
    if direction not in ("backward", "forward"):
        raise ValueError(f"direction must be 'backward' or 'forward', got {direction!r}")
    if mode not in ("full", "sampled"):
        raise ValueError(f"mode must be 'full' or 'sampled', got {mode!r}")
    if mode == "sampled" and (k is None or k < 1):
        raise ValueError("sampled mode needs k >= 1 paths")
    rng = rng if rng is not None else np.random.default_rng(0)
    g = adjoint(f) if direction == "backward" else f
    start = _generic_seed(seed, rng, exceptional)
    tree = branch_tree(g, start, depth, mode=mode, k=k, rng=rng, budget=budget)
    weights = tree.weights / float(g.d1) ** depth
    return _maybe_compact(WeightedPointCloud(tree.leaves, weights))


def invariance_defect(
    f: Correspondence, mu: WeightedPointCloud, psi: ScalarTestFunction
) -> float:
    """|<mu, d2^-1 f_* psi> - <mu, psi>|, zero for an exactly invariant mu."""
    pushed = pushforward_function(f, psi)
    return abs(pair_measure_function(mu, pushed) / f.d2 - pair_measure_function(mu, psi))


def l1_equidistribution_check(
    f: Correspondence,
    psi: ScalarTestFunction,
    n_max: int,
    grid: Optional[SphereGrid] = None,
    reference: Optional[WeightedPointCloud] = None,
    depth: int = 12,
    seed: Optional[complex] = None,
    rng: Optional[np.random.Generator] = None,
    budget: BudgetConfig = DEFAULT_BUDGET,
    on_step: Optional[Callable[[int, float], None]] = None,
) -> List[Tuple[int, float]]:
    """
    Deviation table (n, ||d2^-n (f^n)_* psi - <mu, psi>||_L1) for n = 1..n_max.

    The L1 norm is a Fubini-Study quadrature over the sphere grid (64 x 64 by default);
    the preimage trees of the grid nodes grow one level per n.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    grid = grid if grid is not None else SphereGrid(64)
    if reference is None:
        reference = equilibrium_measure(f, seed=seed, depth=depth, rng=rng, budget=budget)
    target = pair_measure_function(reference, psi)
    back = adjoint(f)
    bundle = start_paths(grid.nodes)
    table: List[Tuple[int, float]] = []
    for n in range(1, n_max + 1):
        bundle = extend_paths(back, bundle, budget=budget)
        averaged = np.sum(bundle.weights * psi(bundle.leaves), axis=1) / float(f.d2) ** n
        deviation = float(grid.integrate(np.abs(averaged - target)))
        table.append((n, deviation))
        if on_step is not None:
            on_step(n, deviation)
    return table


__all__ = [
    "COMPACTION_THRESHOLD",
    "COMPACTION_RADIUS",
    "DEFAULT_EXCEPTIONAL_POINTS",
    "WeightedPointCloud",
    "compact",
    "ScalarTestFunction",
    "constant_function",
    "sphere_coordinate_function",
    "modulus_ratio_function",
    "real_part_ratio_function",
    "pushforward_measure",
    "pullback_measure",
    "pushforward_function",
    "pair_measure_function",
    "moments",
    "equilibrium_measure",
    "invariance_defect",
    "l1_equidistribution_check",
]
