"""Test the reflection solvers and age extraction."""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_almost_equal

from levyfluid import levy, skorokhod
from levyfluid.model import JumpLaw, LevyComponentSpec, TreeNetworkSpec

from .conftest import random_tree, tandem


logger = logging.getLogger(__name__)


SUP_TOL = 1e-9


@pytest.fixture
def single_station():
    root = LevyComponentSpec.compound_poisson(1.0, JumpLaw.exponential(2.0))
    return TreeNetworkSpec([[0.0]], [1.0], (root,))


@pytest.fixture
def one_jump_path():
    """A single jump of size 2 at t = 1, no drift, up to t = 5."""
    return levy.SamplePath(5.0, np.array([1.0]), np.array([[2.0]]),
                           np.zeros(1), np.zeros(1, dtype=int),
                           np.array([2.0]))


def test_single_station_by_hand(single_station, one_jump_path):
    logger.info("Validate reflection of a hand-computed path.")
    result = skorokhod.reflect_explicit(single_station, one_jump_path)
    w, regulator = result.values_at([0.5, 1.0, 2.0, 3.0, 4.0, 5.0])
    assert_allclose(w[:, 0], [0.0, 2.0, 1.0, 0.0, 0.0, 0.0], atol=1e-12)
    assert_allclose(regulator[:, 0], [0.5, 1.0, 1.0, 1.0, 2.0, 3.0],
                    atol=1e-12)
    # The buffer empties at t = 3, inside a linear piece.
    assert np.any(np.isclose(result.times, 3.0))


def test_ages_by_hand(single_station, one_jump_path):
    logger.info("Validate busy and idle ages of a hand-computed path.")
    result = skorokhod.reflect_explicit(single_station, one_jump_path)

    ages = skorokhod.extract_ages(result, 2.0)
    assert_almost_equal(ages.w[0], 1.0)
    assert_almost_equal(ages.busy[0], 1.0)
    assert ages.idle[0] == 0.0

    ages = skorokhod.extract_ages(result, 4.0)
    assert ages.busy[0] == 0.0
    assert_almost_equal(ages.idle[0], 1.0)

    ages = skorokhod.extract_ages(result, 0.5)
    assert_almost_equal(ages.idle[0], 0.5)

    with pytest.raises(skorokhod.ReflectionError):
        skorokhod.extract_ages(result, 6.0)


@pytest.mark.parametrize('case', range(20))
def test_solvers_agree_on_random_trees(case):
    logger.info("Validate both solvers give the same (W, L).")
    rng = np.random.default_rng(case)
    spec = random_tree(rng, int(rng.integers(2, 6)))
    spec = spec.with_initial(rng.uniform(0.0, 2.0, spec.n))
    path = levy.sample_path(spec, 50.0, rng)

    explicit = skorokhod.reflect_explicit(spec, path)
    fixed = skorokhod.reflect_fixed_point(spec, path)
    assert skorokhod.sup_distance(explicit, fixed) <= SUP_TOL
    skorokhod.check_dynamics(explicit, spec.w0)
    skorokhod.check_dynamics(fixed, spec.w0)


@pytest.mark.slow
def test_solvers_agree_at_scale():
    logger.info("Validate solver agreement on 200 random trees.")
    for case in range(200):
        rng = np.random.default_rng(1000 + case)
        spec = random_tree(rng, int(rng.integers(2, 6)))
        if case % 2:
            spec = spec.with_initial(rng.uniform(0.0, 2.0, spec.n))
        path = levy.sample_path(spec, 50.0, rng)
        explicit = skorokhod.reflect_explicit(spec, path)
        fixed = skorokhod.reflect_fixed_point(spec, path)
        assert skorokhod.sup_distance(explicit, fixed) <= SUP_TOL
        skorokhod.check_dynamics(explicit, spec.w0)
        skorokhod.check_dynamics(fixed, spec.w0)


def test_busy_sets_coincide_under_strict_t1(running_example):
    logger.info("Validate W_j = 0 iff W~_j = 0 with strict T1.")
    path = levy.sample_path(running_example, 200.0, 21)
    result = skorokhod.reflect_explicit(running_example, path)
    assert skorokhod.busy_sets_coincide(result)


def test_priority_ages(two_class_priority):
    logger.info("Validate E_j = B~_j on {W_j > 0} and 0 elsewhere.")
    spec = two_class_priority.to_tandem()
    path = levy.sample_path(spec, 100.0, 3)
    result = skorokhod.reflect_explicit(spec, path)
    busy = result.w > skorokhod.ZERO_TOL
    assert_allclose(result.priority[busy], result.busy_tilde[busy])
    assert np.all(result.priority[~busy] == 0.0)


def test_check_dynamics_catches_negative_contents(running_example):
    path = levy.sample_path(running_example, 20.0, 8)
    result = skorokhod.reflect_explicit(running_example, path)
    broken = skorokhod.ReflectionResult(result.times, result.w - 1.0,
                                        result.l, result.w_tilde,
                                        result.horizon)
    with pytest.raises(skorokhod.ReflectionError):
        skorokhod.check_dynamics(broken)


def test_reflection_rejects_lower_triangular():
    inputs = tuple(LevyComponentSpec.compound_poisson(
        0.1, JumpLaw.exponential(5.0)) for __ in range(2))
    spec = TreeNetworkSpec([[0, 0], [1, 0]], [1.0, 1.0], inputs)
    path = levy.sample_path(spec, 5.0, 1)
    with pytest.raises(skorokhod.ReflectionError):
        skorokhod.reflect_explicit(spec, path)


def test_initial_contents_drain(single_station):
    logger.info("Validate a full buffer drains at rate r without input.")
    spec = single_station.with_initial([3.0])
    empty = levy.SamplePath(5.0, np.zeros(0), np.zeros((0, 1)), np.zeros(1),
                            np.zeros(0, dtype=int), np.zeros(0))
    result = skorokhod.reflect_fixed_point(spec, empty)
    w, regulator = result.values_at([1.0, 3.0, 5.0])
    assert_allclose(w[:, 0], [2.0, 0.0, 0.0], atol=1e-12)
    assert_allclose(regulator[:, 0], [0.0, 0.0, 2.0], atol=1e-12)


def test_tandem_by_hand():
    logger.info("Validate downstream contents of a two-station tandem.")
    spec = tandem((1.0, 0.5))
    path = levy.SamplePath(4.0, np.array([1.0]), np.array([[2.0, 0.0]]),
                           np.zeros(2), np.zeros(1, dtype=int),
                           np.array([2.0]))
    result = skorokhod.reflect_explicit(spec, path)
    # Station 1 drains 2 units over [1, 3] into station 2 at net rate 0.5.
    w, __ = result.values_at([3.0, 4.0])
    assert_allclose(w[:, 0], [0.0, 0.0], atol=1e-12)
    assert_allclose(w[:, 1], [1.0, 0.5], atol=1e-12)
