"""Tests for root finding, graph polynomials, resultants and the text format."""

import warnings

import numpy as np
import pytest

from corrlab.errors import DegeneratePolynomialError, ExtraneousFactorWarning
from corrlab.polynomial import (
    BihomogeneousPolynomial,
    UnivariatePoly,
    cluster_roots,
    derivative_coefficients,
    expand_roots,
    format_polynomial,
    parse_polynomial,
    roots,
    roots_batch,
    strip_fiber_factors,
    sylvester_resultant,
)


def _make_graph(shape, terms) -> BihomogeneousPolynomial:
    coeffs = np.zeros(shape, dtype=complex)
    for (i, j), c in terms.items():
        coeffs[i, j] = c
    return BihomogeneousPolynomial(coeffs)


def _square_graph() -> BihomogeneousPolynomial:
    # y - x²
    return _make_graph((3, 2), {(0, 1): 1.0, (2, 0): -1.0})


def test_roots_of_quadratic():
    found = roots(UnivariatePoly([-1.0, 0.0, 1.0]))
    points = sorted(r.point.real for r in found)
    assert len(found) == 2
    assert points == pytest.approx([-1.0, 1.0], abs=1e-12)
    assert all(r.multiplicity == 1 for r in found)


def test_roots_complete_missing_degree_at_infinity():
    found = roots(UnivariatePoly([1.0, 1.0]), nominal_degree=3)
    infinite = [r for r in found if r.is_infinite]
    assert len(infinite) == 1
    assert infinite[0].multiplicity == 2
    assert sum(r.multiplicity for r in found) == 3
    finite = [r for r in found if not r.is_infinite]
    assert finite[0].point == pytest.approx(-1.0, abs=1e-12)


def test_double_root_is_clustered():
    # (z - 2)² (z + 1)
    coeffs = np.polynomial.polynomial.polyfromroots([2.0, 2.0, -1.0])
    found = roots(UnivariatePoly(coeffs))
    by_mult = {r.multiplicity: r.point for r in found}
    assert set(by_mult) == {1, 2}
    assert by_mult[2] == pytest.approx(2.0, abs=1e-6)
    assert by_mult[1] == pytest.approx(-1.0, abs=1e-10)


def test_zero_polynomial_is_degenerate():
    with pytest.raises(DegeneratePolynomialError):
        roots(UnivariatePoly([0.0, 0.0]))
    with pytest.raises(DegeneratePolynomialError):
        roots_batch(np.zeros((2, 3)))


def test_nominal_degree_below_actual_degree_rejected():
    with pytest.raises(ValueError):
        roots(UnivariatePoly([1.0, 0.0, 1.0]), nominal_degree=1)


def test_roots_batch_residuals_small():
    rng = np.random.default_rng(3)
    coeffs = rng.standard_normal((20, 9)) + 1j * rng.standard_normal((20, 9))
    found = roots_batch(coeffs)
    assert found.shape == (20, 8)
    for row in range(20):
        values = np.polynomial.polynomial.polyval(found[row], coeffs[row])
        scale = np.sum(np.abs(coeffs[row])) * np.maximum(1.0, np.abs(found[row])) ** 8
        assert np.all(np.abs(values) <= 1e-8 * scale)


def test_roots_batch_mixed_effective_degree():
    coeffs = np.array([[-1.0, 0.0, 1.0], [-2.0, 1.0, 0.0]], dtype=complex)
    found = roots_batch(coeffs)
    assert np.sort(found[0].real) == pytest.approx([-1.0, 1.0])
    assert found[1, 0] == pytest.approx(2.0)
    assert np.isinf(found[1, 1])


def test_cluster_roots_and_expand():
    points = np.array([1.0, 1.0 + 1e-9, -3.0, np.inf + 0j])
    clusters = cluster_roots(points, radius=1e-6)
    assert sum(c.multiplicity for c in clusters) == 4
    expanded = expand_roots(clusters)
    assert expanded.size == 4
    assert np.sum(np.isinf(expanded)) == 1


def test_univariate_degree_and_derivative():
    p = UnivariatePoly([1.0, 2.0, 3.0, 0.0])
    assert p.degree == 2
    assert p.trimmed().coefficients.size == 3
    assert p.derivative()(1.0) == pytest.approx(8.0)
    assert UnivariatePoly([0.0]).is_zero


def test_graph_is_normalized_and_validated():
    P = _make_graph((2, 2), {(0, 1): 4.0, (1, 0): -2.0})
    assert np.max(np.abs(P.coefficients)) == pytest.approx(1.0)
    with pytest.raises(DegeneratePolynomialError):
        BihomogeneousPolynomial(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        BihomogeneousPolynomial(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        BihomogeneousPolynomial(np.array([[1.0, np.nan]]))


def test_bidegree_and_transpose():
    P = _square_graph()
    assert P.bidegree == (2, 1)
    assert (P.m, P.n) == (2, 1)
    assert P.transpose().bidegree == (1, 2)


def test_y_fiber_uses_far_chart_without_changing_roots():
    P = _square_graph()
    for x in (0.5, 3.0, -2.0 + 1.0j):
        coeffs = P.y_fiber(np.array([x]))
        y = roots_batch(coeffs)[0]
        assert y[0] == pytest.approx(x**2, rel=1e-12)


def test_y_fiber_at_infinity():
    P = _square_graph()
    y = roots_batch(P.y_fiber(np.array([np.inf + 0j])))[0]
    assert np.isinf(y[0])


def test_evaluate_in_every_chart():
    P = _square_graph()
    x, y = 0.3 + 0.2j, 0.7 - 0.1j
    direct = complex(P.evaluate(x, y))
    assert direct == pytest.approx(y - x**2)
    # chart (1, 1): x0^2 y0 P(1/X, 1/Y) with X = 1/x, Y = 1/y
    X, Y = 1.0 / x, 1.0 / y
    assert complex(P.evaluate(X, Y, (1, 1))) == pytest.approx(direct * X**2 * Y)


def test_derivative_coefficients():
    P = _square_graph()
    dx, dy = derivative_coefficients(P)
    x, y = 0.4 + 0.1j, 0.2
    assert np.polynomial.polynomial.polyval2d(x, y, dx) == pytest.approx(-2.0 * x)
    assert np.polynomial.polynomial.polyval2d(x, y, dy) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        derivative_coefficients(P, (2, 0))


def test_diagonal_of_square():
    diag = _square_graph().diagonal()
    # z - z², degree 3 as a binary form
    assert diag.coefficients.size == 4
    assert diag.coefficients[:3] == pytest.approx([0.0, 1.0, -1.0])


def test_resultant_of_square_with_itself():
    P = _square_graph()
    R = sylvester_resultant(P, P)
    assert R.bidegree == (4, 1)
    C = R.coefficients / R.coefficients[0, 1]
    expected = np.zeros((5, 2), dtype=complex)
    expected[0, 1] = 1.0
    expected[4, 0] = -1.0
    assert np.allclose(C, expected, atol=1e-10)


def test_strip_fiber_factor_over_finite_point():
    # (x - 2)(y - x²) = xy - x³ - 2y + 2x²
    P = _make_graph((4, 2), {(1, 1): 1.0, (3, 0): -1.0, (0, 1): -2.0, (2, 0): 2.0})
    result = strip_fiber_factors(P, expected_bidegree=(2, 1))
    assert result.polynomial.bidegree == (2, 1)
    assert len(result.removed) == 1
    assert result.warnings == []
    C = result.polynomial.coefficients / result.polynomial.coefficients[0, 1]
    assert C[2, 0] == pytest.approx(-1.0, abs=1e-9)


def test_strip_fiber_factor_over_infinity():
    # x0 * (y - x²) has a vanishing top row
    P = _make_graph((4, 2), {(0, 1): 1.0, (2, 0): -1.0})
    result = strip_fiber_factors(P, expected_bidegree=(2, 1))
    assert result.polynomial.bidegree == (2, 1)
    assert any("inf" in item for item in result.removed)


def test_strip_warns_on_extraneous_factor():
    # (y - x²)(y - x) has no fiber factor but exceeds the expected bidegree
    P = _make_graph((4, 3), {(0, 2): 1.0, (1, 1): -1.0, (2, 1): -1.0, (3, 0): 1.0})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = strip_fiber_factors(P, expected_bidegree=(2, 1))
    assert result.warnings
    assert any(issubclass(w.category, ExtraneousFactorWarning) for w in caught)


def test_text_format_round_trip():
    P = _make_graph((3, 2), {(0, 1): 1.0, (2, 0): -0.5 + 0.25j})
    text = format_polynomial(P, name="demo")
    assert text.splitlines()[0] == "name demo"
    assert text.splitlines()[1] == "bidegree 2 1"
    parsed, name = parse_polynomial(text)
    assert name == "demo"
    assert np.array_equal(parsed.coefficients, P.coefficients)


def test_parse_rejects_bad_input():
    with pytest.raises(ValueError):
        parse_polynomial("0 1 1 0\n")
    with pytest.raises(ValueError):
        parse_polynomial("bidegree 1 1\n2 0 1 0\n")
    with pytest.raises(ValueError):
        parse_polynomial("bidegree 1 1\n0 0 1\n")
    with pytest.raises(DegeneratePolynomialError):
        parse_polynomial("bidegree 1 1\n")
