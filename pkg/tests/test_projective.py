"""Tests for projective points, charts and the sphere model."""

import warnings

import numpy as np
import pytest

from corrlab.projective import (
    INFINITY,
    area_jacobian,
    chart_index,
    format_point,
    from_chart,
    fs_density,
    fs_random_points,
    invert,
    parse_point,
    sphere_embedding,
    to_chart,
)


def test_invert_swaps_zero_and_infinity():
    out = invert(np.array([0.0, INFINITY, 2.0j]))
    assert np.isinf(out[0])
    assert out[1] == 0
    assert out[2] == pytest.approx(-0.5j)


def test_invert_of_subnormal_overflows_silently():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = invert(np.array([5e-324 + 0j]))
    assert np.isinf(out[0])


def test_chart_switches_outside_unit_disc():
    z = np.array([0.5, 1.0, 1.5, INFINITY])
    assert list(chart_index(z)) == [0, 0, 1, 1]
    coords, chart = to_chart(z)
    assert np.all(np.abs(coords) <= 1.0)
    assert coords[3] == 0
    back = from_chart(coords, chart)
    assert back[:3] == pytest.approx(z[:3])
    assert np.isinf(back[3])


def test_sphere_embedding_is_on_unit_sphere():
    z = np.array([0.0, 0.3 - 0.4j, 5.0 + 2.0j, INFINITY])
    s1, s2, s3 = sphere_embedding(z)
    assert s1**2 + s2**2 + s3**2 == pytest.approx(np.ones(4))
    assert (s1[0], s2[0], s3[0]) == pytest.approx((0.0, 0.0, -1.0))
    assert (s1[3], s2[3], s3[3]) == pytest.approx((0.0, 0.0, 1.0))
    # the chart-1 branch agrees with the direct formula
    direct = np.array([2 * z[2].real, 2 * z[2].imag, abs(z[2]) ** 2 - 1]) / (1 + abs(z[2]) ** 2)
    assert (s1[2], s2[2], s3[2]) == pytest.approx(tuple(direct))


def test_density_and_jacobian_are_reciprocal():
    z = np.array([0.0, 1.0 + 1.0j, 10.0])
    assert fs_density(z) * area_jacobian(z) == pytest.approx(np.ones(3))
    assert fs_density(np.array([INFINITY]))[0] == 0.0


def test_fs_random_points_have_uniform_height():
    rng = np.random.default_rng(0)
    pts = fs_random_points(rng, 20000)
    s3 = sphere_embedding(pts)[2]
    assert np.mean(s3) == pytest.approx(0.0, abs=0.03)
    assert np.mean(s3**2) == pytest.approx(1.0 / 3.0, abs=0.03)


def test_parse_and_format_points():
    assert np.isinf(parse_point("inf"))
    assert parse_point(" 0.5 + 2i ") == 0.5 + 2j
    assert parse_point("3") == 3 + 0j
    assert format_point(INFINITY) == "inf"
    assert parse_point(format_point(0.1 - 0.7j)) == 0.1 - 0.7j
    with pytest.raises(ValueError):
        parse_point("north pole")
