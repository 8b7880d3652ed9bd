"""Tests for (1,0)-forms, their pushforward and the contraction estimates."""

import warnings

import numpy as np
import pytest

from corrlab.catalog import builtin
from corrlab.contraction import (
    OneZeroForm,
    contraction_estimate,
    l2_inner,
    l2_norm,
    l2_norm_by_charts,
    pullback_form,
    pushforward_form,
    pushforward_kernel,
    smoothing_basis,
    transition_defect,
    trial_family,
    trial_member,
)
from corrlab.errors import NumericalWarning
from corrlab.sphere import SphereGrid


def test_trial_family_shape_and_validation():
    family = trial_family()
    assert len(family) == 32
    assert family[0].name == "g[0,0]"
    assert len({member.name for member in family}) == 32
    with pytest.raises(ValueError):
        trial_member(6, 0)
    with pytest.raises(ValueError):
        trial_member(0, 8)


def test_trial_member_transition_rule():
    chart0, chart1 = trial_member(2, 5).charts
    assert transition_defect(chart0, chart1) < 1e-12
    assert transition_defect(chart0, lambda w: -chart1(w)) == pytest.approx(2.0)


def test_far_chart_agrees_with_extension_of_affine_chart():
    member = trial_member(1, 2)
    chart0, _ = member.charts
    extended = OneZeroForm.from_charts(chart0)
    z = np.array([1.5 + 0.5j, -3.0j, 20.0 + 1.0j])
    assert np.allclose(member.weighted(z), extended.weighted(z), rtol=1e-10, atol=1e-14)


def test_chart_norm_matches_weighted_norm():
    grid = SphereGrid(32)
    for a, b in ((0, 0), (1, 3), (3, 7)):
        member = trial_member(a, b)
        assert l2_norm_by_charts(member, grid) == pytest.approx(l2_norm(member, grid), rel=1e-12)


def test_from_samples_validates_and_reuses_node_values():
    grid = SphereGrid(8)
    values = np.arange(grid.size, dtype=complex)
    form = OneZeroForm.from_samples(grid, values)
    assert form.sample(grid) is values
    with pytest.raises(ValueError):
        OneZeroForm.from_samples(grid, values[:-1])


def test_smoothing_basis_spans_trial_family():
    basis = {member.name: member for member in smoothing_basis()}
    assert len(basis) == 63
    z = np.array([0.3 - 0.2j, 1.5 + 0.5j, -4.0j])
    for a, b in ((0, 0), (2, 5), (3, 7)):
        parts = basis[f"g[{a},{b};8]"].weighted(z) + basis[f"g[{a + 1},{b + 1};8]"].weighted(z)
        assert np.allclose(parts, trial_member(a, b).weighted(z), rtol=1e-12, atol=1e-15)


def test_square_pushes_even_member_to_zero():
    grid = SphereGrid(32)
    pushed = pushforward_form(builtin("square"), trial_member(0, 0), grid)
    assert pushed.flagged_fraction == 0.0
    assert np.max(np.abs(pushed.sample(grid))) < 1e-12


def test_pushforward_kernel_has_one_preimage_per_branch():
    grid = SphereGrid(8)
    kernel = pushforward_kernel(builtin("square"), grid.nodes)
    assert kernel.preimages.shape == (grid.size, 2)
    assert np.allclose(kernel.preimages**2, grid.nodes[:, None], rtol=1e-10)


def test_pushforward_and_pullback_are_dual():
    grid = SphereGrid(32)
    f = builtin("moebius-pair")
    gamma, eta = trial_member(1, 2), trial_member(0, 1)
    lhs = l2_inner(pushforward_form(f, gamma, grid), eta, grid)
    rhs = l2_inner(gamma, pullback_form(f, eta, grid), grid)
    assert abs(lhs) > 1e-6
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-12)


def test_identity_has_norm_one():
    report = contraction_estimate(builtin("identity"), trials=8, iterations=20, grid=32, coarse_grid=16)
    assert report.lower_bound == pytest.approx(1.0, abs=1e-6)
    assert report.heuristic_estimate == pytest.approx(1.0, abs=1e-6)
    assert report.grid_error < 1e-6
    assert not report.unstable


def test_moebius_pair_lower_bound_reaches_one():
    report = contraction_estimate(
        builtin("moebius-pair"), trials=8, iterations=50, grid=32, coarse_grid=16
    )
    assert report.lower_bound >= 1.0 - 1e-3
    assert report.heuristic_estimate == pytest.approx(1.0, abs=1e-3)


def test_balanced_random_estimate_is_reported_both_ways():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NumericalWarning)
        push = contraction_estimate(
            builtin("nwm22-seeded"), trials=4, iterations=30, grid=24, coarse_grid=16
        )
        pull = contraction_estimate(
            builtin("nwm22-seeded"), trials=4, iterations=30, grid=24, coarse_grid=16, direction="pull"
        )
    assert push.direction == "push" and pull.direction == "pull"
    for report in (push, pull):
        assert report.lower_bound > 0.0
        assert report.lower_bound == max(report.ritz_bound, report.random_bound)
        assert report.heuristic_estimate >= report.ritz_bound - 1e-9
        assert report.lower_bound <= report.heuristic_estimate + report.grid_error + 1e-9
        assert report.heuristic_estimate <= 1.0 + report.grid_error
        assert "lower-bound-above-heuristic" not in report.flags
        assert report.iterations_used <= 30


def test_contraction_rejects_bad_arguments():
    with pytest.raises(ValueError):
        contraction_estimate(builtin("square"))
    with pytest.raises(ValueError):
        contraction_estimate(builtin("identity"), direction="sideways")
    with pytest.raises(ValueError):
        contraction_estimate(builtin("identity"), iterations=0)


def test_report_to_dict():
    report = contraction_estimate(builtin("identity"), trials=2, iterations=5, grid=16, coarse_grid=8)
    data = report.to_dict()
    assert data["correspondence"] == "identity"
    assert data["direction"] == "push"
    assert data["trials"] == 2
    assert isinstance(data["flags"], list)
