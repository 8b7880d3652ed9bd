"""Tests for the torus Fourier machinery."""

import numpy as np
import pytest

from corrlab.fourier import (
    bump_function,
    cutoff,
    cutoff_c2_norm,
    cutoff_defect,
    decay_ratio,
    eta,
    fourier_coefficients,
    fourier_partial_sum,
    index_count,
    index_count_bound,
    index_norm,
    partial_sum_error,
    shell_count,
    smooth_step,
    truncation_error_bound,
)


def test_smooth_step_limits_and_derivative():
    u = np.array([-1.0, 0.0, 0.5, 1.0, 2.0])
    assert smooth_step(u) == pytest.approx([0.0, 0.0, 0.5, 1.0, 1.0])
    h = 1e-6
    for point in (0.2, 0.5, 0.8):
        numeric = (smooth_step(point + h) - smooth_step(point - h)) / (2 * h)
        assert smooth_step(point, derivative=1) == pytest.approx(numeric, rel=1e-5)
    with pytest.raises(ValueError):
        smooth_step(u, derivative=3)


def test_cutoff_is_one_on_inner_square_and_zero_at_edges():
    inner = np.array([0.25 + 0.25j, 0.5 + 0.5j, 0.75 + 0.3j])
    assert cutoff(inner) == pytest.approx(np.ones(3))
    edge = np.array([0.0 + 0.5j, 0.5 + 0.995j])
    assert cutoff(edge) == pytest.approx(np.zeros(2))


def test_eta_second_derivative_matches_finite_difference():
    h = 1e-4
    t = 0.1
    numeric = (eta(t + h) - 2 * eta(t) + eta(t - h)) / h**2
    assert eta(t, derivative=2) == pytest.approx(numeric, rel=1e-3)


def test_cutoff_c2_norm_is_finite_and_at_least_one():
    norm = cutoff_c2_norm()
    assert 1.0 <= norm < 100.0


def test_bump_coefficients_decay_like_fifth_power():
    coeffs = fourier_coefficients(bump_function(), 8, grid=32)
    assert len(coeffs) == 17**4
    for index, a in coeffs.items():
        size = index_norm(index)
        if 1 <= size <= 8:
            assert abs(a) <= size**-5.0
    assert decay_ratio(coeffs, order=5) <= 1.0


def test_coefficients_of_a_single_mode():
    def phi(x, y):
        return np.exp(2j * np.pi * (2 * x.real - y.imag))

    coeffs = fourier_coefficients(phi, 3, grid=8)
    assert coeffs[(2, 0, 0, -1)] == pytest.approx(1.0)
    others = [abs(a) for index, a in coeffs.items() if index != (2, 0, 0, -1)]
    assert max(others) < 1e-12


def test_partial_sum_reconstructs_trigonometric_polynomial():
    def phi(x, y):
        return np.cos(2 * np.pi * x.real) + 0.5 * np.exp(2j * np.pi * y.real)

    coeffs = fourier_coefficients(phi, 2, grid=8)
    x = np.array([0.1 + 0.2j, 0.7 + 0.9j])
    y = np.array([0.3 + 0.3j, 0.05 + 0.6j])
    assert fourier_partial_sum(coeffs, x, y) == pytest.approx(phi(x, y))


def test_partial_sum_error_of_bump_is_within_tail_bound():
    bump = bump_function()
    coeffs = fourier_coefficients(bump, 4, grid=16)
    error = partial_sum_error(bump, coeffs)
    bound = truncation_error_bound(4)
    assert 0.0 <= error <= bound.direct_tail <= bound.bound
    with pytest.raises(ValueError):
        partial_sum_error(bump, coeffs, points=0)


def test_cutoff_defect_vanishes_only_inside_the_plateau():
    assert cutoff_defect(bump_function()) == 0.0

    def wide(x, y):
        return np.ones(np.broadcast(x, y).shape)

    assert cutoff_defect(wide) == pytest.approx(1.0)


def test_coefficient_arguments():
    with pytest.raises(ValueError):
        fourier_coefficients(bump_function(), -1)
    with pytest.raises(ValueError):
        fourier_coefficients(bump_function(), 8, grid=16)


def test_shell_and_index_counts():
    assert shell_count(0) == 1
    assert shell_count(1) == 80
    for m in range(1, 40):
        assert shell_count(m) <= 80 * m**3
    assert sum(shell_count(m) for m in range(0, 6)) == index_count(5)
    for N in range(1, 16):
        assert index_count(N) <= index_count_bound(N)
    with pytest.raises(ValueError):
        shell_count(-1)


def test_truncation_tail_bound():
    for N in (4, 8, 16):
        bound = truncation_error_bound(N, n_big=20000)
        assert bound.bound == pytest.approx(80.0 / N)
        assert bound.direct_tail <= bound.bound
    with pytest.raises(ValueError):
        truncation_error_bound(0)
