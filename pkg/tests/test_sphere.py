"""Tests for sphere quadrature and grid interpolation."""

import numpy as np
import pytest

from corrlab.projective import sphere_embedding
from corrlab.sphere import QuadratureSpec, SphereGrid


def test_weights_sum_to_one():
    for rule in ("gauss", "midpoint"):
        grid = SphereGrid(16, rule=rule)
        assert grid.size == 256
        assert np.sum(grid.weights) == pytest.approx(1.0)


def test_default_grid_size():
    grid = SphereGrid.from_spec(QuadratureSpec())
    assert grid.shape == (96, 96)
    assert grid.size == 9216
    assert SphereGrid.from_spec(QuadratureSpec(), coarse=True).shape == (48, 48)


def test_gauss_rule_integrates_height_polynomials_exactly():
    grid = SphereGrid(8)
    s3 = sphere_embedding(grid.nodes)[2]
    assert grid.integrate(s3) == pytest.approx(0.0, abs=1e-14)
    assert grid.integrate(s3**2) == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert grid.integrate(s3**6) == pytest.approx(1.0 / 7.0, abs=1e-14)


def test_integrate_function_of_sphere_coordinates():
    grid = SphereGrid(24)
    s1, s2, _ = sphere_embedding(grid.nodes)
    assert grid.integrate(s1**2) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert grid.integrate_function(lambda z: sphere_embedding(z)[1]) == pytest.approx(0.0, abs=1e-12)
    assert grid.integrate(s1 * s2) == pytest.approx(0.0, abs=1e-12)


def test_integrate_sums_over_last_axis():
    grid = SphereGrid(4)
    values = np.stack([np.ones(grid.size), 2.0 * np.ones(grid.size)])
    assert grid.integrate(values) == pytest.approx([1.0, 2.0])


def test_area_weights_give_plane_integral_of_density():
    grid = SphereGrid(32)
    density = 1.0 / (np.pi * (1.0 + np.abs(grid.nodes) ** 2) ** 2)
    assert np.sum(grid.area_weights * density) == pytest.approx(1.0)


def test_interpolation_reproduces_node_values():
    grid = SphereGrid(12)
    values = np.arange(grid.size, dtype=float)
    M = grid.interpolation_matrix(grid.nodes)
    assert M.shape == (grid.size, grid.size)
    assert M @ values == pytest.approx(values)


def test_interpolation_rows_are_convex_weights():
    grid = SphereGrid(16)
    rng = np.random.default_rng(1)
    pts = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    pts = np.concatenate([pts, [0.0, np.inf + 0j]])
    M = grid.interpolation_matrix(pts)
    sums = np.asarray(M.sum(axis=1)).ravel()
    assert sums == pytest.approx(np.ones(pts.size))
    assert M.min() >= 0.0


def test_interpolation_of_smooth_function_is_accurate():
    grid = SphereGrid(64)
    rng = np.random.default_rng(2)
    pts = rng.standard_normal(100) + 1j * rng.standard_normal(100)
    s3 = sphere_embedding(grid.nodes)[2]
    approx = grid.interpolation_matrix(pts) @ s3
    assert approx == pytest.approx(sphere_embedding(pts)[2], abs=1e-2)


def test_invalid_grid():
    with pytest.raises(ValueError):
        SphereGrid(1)
    with pytest.raises(ValueError):
        SphereGrid(8, rule="simpson")
