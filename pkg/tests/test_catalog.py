"""Tests for built-in correspondences."""

import numpy as np
import pytest

from corrlab.catalog import BUILTINS, NWM22_SEED, builtin, nwm22_seeded, random_correspondence


def test_every_builtin_loads():
    for name in BUILTINS:
        f = builtin(name)
        assert f.name == name
        assert min(f.degrees) >= 1


def test_unknown_builtin():
    with pytest.raises(ValueError, match="available"):
        builtin("cubic")


def test_seeded_random_is_reproducible():
    first = nwm22_seeded()
    second = nwm22_seeded(NWM22_SEED)
    assert np.array_equal(first.graph.coefficients, second.graph.coefficients)
    assert not np.array_equal(first.graph.coefficients, nwm22_seeded(1).graph.coefficients)


def test_random_correspondence_degrees():
    f = random_correspondence(3, 2, np.random.default_rng(0))
    assert f.degrees == (3, 2)
    assert f.name == "random-3-2"
    with pytest.raises(ValueError):
        random_correspondence(0, 2)
