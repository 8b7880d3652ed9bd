"""Tests for point clouds, push/pull operators and equilibrium measures."""

import warnings

import numpy as np
import pytest

from corrlab.catalog import builtin
from corrlab.correspondence import adjoint, branch_tree
from corrlab.errors import NumericalWarning
from corrlab.measures import (
    WeightedPointCloud,
    compact,
    constant_function,
    equilibrium_measure,
    invariance_defect,
    l1_equidistribution_check,
    modulus_ratio_function,
    moments,
    pair_measure_function,
    pullback_measure,
    pushforward_function,
    pushforward_measure,
    real_part_ratio_function,
    sphere_coordinate_function,
)
from corrlab.sphere import SphereGrid


def _make_cloud(size: int = 200, seed: int = 0) -> WeightedPointCloud:
    return WeightedPointCloud.fubini_study(np.random.default_rng(seed), size)


def test_cloud_validation():
    with pytest.raises(ValueError):
        WeightedPointCloud(np.array([1.0, 2.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        WeightedPointCloud(np.array([1.0]), np.array([-1.0]))
    with pytest.raises(ValueError):
        WeightedPointCloud(np.array([np.nan]), np.array([1.0]))
    with pytest.raises(ValueError):
        WeightedPointCloud.dirac(1.0, 0.0).normalized()


def test_cloud_helpers():
    nu = WeightedPointCloud.uniform([0.0, 1.0, 2.0, 3.0])
    assert nu.total_mass == pytest.approx(1.0)
    assert nu.scaled(3.0).total_mass == pytest.approx(3.0)
    merged = nu.merged(WeightedPointCloud.dirac(np.inf + 0j, 2.0))
    assert merged.size == 5
    assert merged.normalized().total_mass == pytest.approx(1.0)


def test_compact_merges_coincident_atoms():
    nu = WeightedPointCloud(np.array([0.5, 0.5 + 1e-12, 3.0, np.inf + 0j]), np.ones(4))
    small = compact(nu)
    assert small.size == 3
    assert small.total_mass == pytest.approx(4.0)


def test_push_and_pull_scale_mass():
    f = builtin("nwm22-seeded")
    g = builtin("square")
    nu = _make_cloud(50)
    assert pushforward_measure(g, nu).total_mass == pytest.approx(1.0)
    assert pullback_measure(g, nu).total_mass == pytest.approx(2.0)
    assert pushforward_measure(f, nu).size == 100


def test_pullback_pushforward_duality():
    f = builtin("nwm22-seeded")
    nu = _make_cloud(300, seed=4)
    for psi in (sphere_coordinate_function(1), modulus_ratio_function(), real_part_ratio_function()):
        lhs = pair_measure_function(pullback_measure(f, nu), psi)
        rhs = pair_measure_function(nu, pushforward_function(f, psi))
        assert abs(lhs - rhs) <= 1e-8


def test_pushforward_of_constant():
    f = builtin("square")
    pushed = pushforward_function(f, constant_function(1.0))
    assert pushed(np.array([0.3, 2.0 + 1j])) == pytest.approx([2.0, 2.0])
    assert pushed.norm_bound == pytest.approx(2.0)


def test_test_function_bounds():
    rng = np.random.default_rng(0)
    for psi in (sphere_coordinate_function(2, 0.5), modulus_ratio_function(), real_part_ratio_function()):
        assert psi.check_bound(rng)
    with pytest.raises(ValueError):
        sphere_coordinate_function(4)


def test_moments_of_square_equilibrium_vanish():
    mu = equilibrium_measure(builtin("square"), seed=0.76 + 0.64j, depth=12)
    assert mu.size == 4096
    assert mu.total_mass == pytest.approx(1.0)
    for k, value in moments(mu, 7).items():
        assert abs(value) <= 1e-10, k


def test_chebyshev_equilibrium_is_arcsine():
    mu = equilibrium_measure(builtin("chebyshev"), seed=0.3 + 0.2j, depth=12)
    m = moments(mu, 4)
    assert m[2].real == pytest.approx(2.0, abs=0.05)
    assert m[4].real == pytest.approx(6.0, abs=0.05)
    assert abs(m[1]) <= 0.05
    assert np.max(np.abs(mu.atoms.imag)) < 1e-2


def test_sampled_equilibrium_cloud():
    mu = equilibrium_measure(
        builtin("square"), seed=2.0, depth=10, mode="sampled", k=500, rng=np.random.default_rng(3)
    )
    assert mu.size <= 500
    assert mu.total_mass == pytest.approx(1.0)
    assert np.abs(mu.atoms) == pytest.approx(np.full(mu.size, 2.0 ** (1.0 / 1024.0)))


def test_equilibrium_cloud_is_the_adjoint_orbit_tree():
    f = builtin("moebius-pair")
    mu = equilibrium_measure(f, seed=0.5 + 0.1j, depth=5)
    tree = branch_tree(adjoint(f), 0.5 + 0.1j, 5)
    assert np.array_equal(mu.atoms, tree.leaves)
    assert mu.weights == pytest.approx(np.full(tree.leaves.size, 2.0**-5))


def test_forward_equilibrium_mass():
    mu = equilibrium_measure(builtin("moebius-pair"), seed=0.5 + 0.1j, depth=6, direction="forward")
    assert mu.total_mass == pytest.approx(1.0)


def test_exceptional_seed_is_redrawn_with_warning():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mu = equilibrium_measure(builtin("square"), seed=0.0, depth=3)
    assert any(issubclass(w.category, NumericalWarning) for w in caught)
    assert np.all(np.abs(mu.atoms) > 0.0)


def test_equilibrium_argument_checks():
    f = builtin("square")
    with pytest.raises(ValueError):
        equilibrium_measure(f, depth=2, direction="sideways")
    with pytest.raises(ValueError):
        equilibrium_measure(f, depth=2, mode="sampled")


def test_invariance_defect_is_small():
    for name, seed in (("square", 0.76 + 0.64j), ("chebyshev", 0.3 + 0.2j)):
        f = builtin(name)
        mu = equilibrium_measure(f, seed=seed, depth=12)
        for psi in (sphere_coordinate_function(1), modulus_ratio_function()):
            # every test function used here has C1 norm at most 2
            assert invariance_defect(f, mu, psi) <= 0.01 * 2.0


def test_moments_reject_mass_at_infinity():
    with pytest.raises(ValueError):
        moments(WeightedPointCloud.dirac(np.inf + 0j), 2)


def test_l1_equidistribution_decreases():
    f = builtin("square")
    table = l1_equidistribution_check(
        f, modulus_ratio_function(), 4, grid=SphereGrid(16), seed=0.76 + 0.64j, depth=10
    )
    assert [n for n, _ in table] == [1, 2, 3, 4]
    deviations = [d for _, d in table]
    assert deviations[-1] < deviations[0]
