"""Test closed-form network transforms against exact values and each other."""

import itertools
import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_almost_equal

from levyfluid import levy, transforms
from levyfluid.model import JumpLaw, LevyComponentSpec, PrioritySpec

from .conftest import tandem


logger = logging.getLogger(__name__)


FORM_TOL = 1e-10
LEVELS = (0.0, 0.5, 1.0)


@pytest.fixture
def handles(running_example):
    return levy.exponent_handles(running_example)


# ---------- Single component ---------- #
def test_fluctuation_identity_values(handles):
    logger.info("Validate E exp(-X-bar_1) and P(X-bar = 0).")
    assert_almost_equal(transforms.fluctuation_identity(handles[0], 0.0, 1.0),
                        12.0 / 17.0)
    assert transforms.fluctuation_identity(handles[0], 0.0, 0.0) == 1.0
    assert_almost_equal(transforms.empty_probability(handles[0]), 4.0 / 9.0)
    assert_almost_equal(transforms.empty_probability(handles[1]), 1.0 / 6.0)
    assert_almost_equal(
        transforms.fluctuation_identity(handles[0], np.inf, 0.0), 4.0 / 9.0)


def test_fluctuation_identity_singular_limit(handles):
    logger.info("Validate continuity at beta = Phi(alpha).")
    alpha = 1.0
    root = levy.phi(handles[0], alpha)
    at_root = transforms.fluctuation_identity(handles[0], alpha, root)
    nearby = transforms.fluctuation_identity(handles[0], alpha, root + 1e-5)
    assert abs(at_root - nearby) < 1e-4


def test_fluctuation_identity_rejects_negative(handles):
    with pytest.raises(transforms.TransformError):
        transforms.fluctuation_identity(handles[0], -1.0, 0.0)


def test_busy_periods(handles):
    logger.info("Validate busy period transforms and their limits.")
    joint, length = transforms.busy_periods(handles[0], 0.7, 0.7)
    assert_almost_equal(joint, length)
    assert_almost_equal(transforms.busy_periods(handles[0], 0.0, 0.0)[1],
                        1.0)
    joint, length = transforms.busy_periods(handles[0], 1.0, 0.5)
    assert 0 < length < joint < 1
    assert_almost_equal(transforms.busy_age_transform(handles[0], 1.0),
                        transforms.fluctuation_identity(handles[0], 1.0, 0.0))


# ---------- Tandem ---------- #
def test_quasi_product_marginals(running_example, handles):
    logger.info("Validate the quasi-product form reduces to marginals.")
    for level in (0.5, 2.0):
        assert_allclose(
            transforms.quasi_product_XG(running_example, [0, 0], [level, 0]),
            transforms.fluctuation_identity(handles[0], 0.0, level))
        assert_allclose(
            transforms.quasi_product_XG(running_example, [0, 0], [0, level]),
            transforms.fluctuation_identity(handles[1], 0.0, level))
        assert_allclose(
            transforms.quasi_product_XG(running_example, [0, level], [0, 0]),
            transforms.fluctuation_identity(handles[1], level, 0.0))


def test_conditioned_xg(running_example):
    logger.info("Validate the conditioned form and its product identity.")
    assert transforms.conditioned_XG(running_example, 1, [0.5, 0.5],
                                     [0.5, 0.5]) == 1.0
    alpha, beta = np.array([0.3, 0.5]), np.array([0.5, 1.0])
    full = transforms.quasi_product_XG(running_example, alpha, beta)
    conditioned = transforms.conditioned_XG(running_example, 0, alpha, beta)
    assert 0 < full < conditioned <= 1
    with pytest.raises(transforms.TransformError):
        transforms.conditioned_XG(running_example, 2, alpha, beta)


@pytest.mark.parametrize('point', [
    point for point in itertools.product(LEVELS, repeat=4) if any(point)])
def test_tandem_forms_agree(running_example, point):
    omega, beta = np.array(point[:2]), np.array(point[2:])
    first = transforms.tandem_WB(running_example, omega, beta,
                                 cross_check=False)
    closed = transforms.tandem_WB_closed_form(running_example, omega, beta)
    assert 0 < first <= 1
    if closed is not None:
        assert abs(first - closed) <= FORM_TOL * max(1.0, abs(first))


def test_tandem_empty_probabilities(running_example):
    logger.info("Validate P(W_k = 0) through infinite arguments.")
    assert_almost_equal(
        transforms.tandem_WB(running_example, [np.inf, 0], [0, 0]), 4.0 / 9.0)
    assert_almost_equal(
        transforms.tandem_WB(running_example, [0, np.inf], [0, 0]), 1.0 / 6.0)


def test_tandem_wb_needs_stability(critical_example):
    with pytest.raises(transforms.TransformError):
        transforms.tandem_WB(critical_example, [0.5, 1.0], [0, 0])


def test_tandem_wb_dimension(running_example):
    from levyfluid.model import DimensionError
    with pytest.raises(DimensionError):
        transforms.tandem_WB(running_example, [0.5], [0, 0])


def test_three_station_forms_agree(three_station_chain):
    logger.info("Validate both forms on a three-station tandem.")
    rng = np.random.default_rng(2)
    for __ in range(20):
        omega, beta = rng.uniform(0, 2, 3), rng.uniform(0, 2, 3)
        first = transforms.tandem_WB(three_station_chain, omega, beta,
                                     cross_check=False)
        closed = transforms.tandem_WB_closed_form(three_station_chain,
                                                  omega, beta)
        if closed is not None:
            assert abs(first - closed) <= FORM_TOL


# ---------- Single compound Poisson input ---------- #
def test_single_cp_root(running_example, handles):
    result = transforms.single_cp(running_example, 0, 0.5, 1.0)
    assert_almost_equal(result.joint,
                        transforms.fluctuation_identity(handles[0], 1.0, 0.5))
    assert_almost_equal(result.idle_probability, 4.0 / 9.0)
    assert result.upstream_empty is None
    with pytest.raises(transforms.TransformError):
        transforms.upstream_empty_transform(running_example, 0, 0.5, 1.0)


@pytest.mark.parametrize('omega, beta', [
    (0.5, 0.0), (1.0, 0.0), (0.5, 0.5), (0.0, 1.0), (1.0, 1.0), (2.0, 0.3)])
def test_single_cp_matches_tandem(running_example, omega, beta):
    logger.info("Validate the single-input form against the tandem form.")
    result = transforms.single_cp(running_example, 1, omega, beta)
    assert_allclose(result.joint,
                    transforms.tandem_WB(running_example, [0, omega],
                                         [0, beta]), rtol=1e-10)
    # E[.; W_1 = 0] is the tandem transform with an infinite omega_1.
    assert_allclose(result.upstream_empty,
                    transforms.tandem_WB(running_example, [np.inf, omega],
                                         [0, beta]), rtol=1e-10)
    assert 0 < result.upstream_empty < result.joint


def test_single_cp_at_zero(running_example):
    result = transforms.single_cp(running_example, 1, 0.0, 0.0)
    assert result.joint == 1.0
    assert_almost_equal(result.idle_probability, 1.0 / 6.0)
    assert_almost_equal(result.upstream_empty, 4.0 / 9.0)


def test_single_cp_needs_single_input(running_example):
    inputs = (running_example.inputs[0],
              LevyComponentSpec.deterministic(0.05))
    spec = type(running_example)(running_example.routing,
                                 running_example.drain_rates, inputs)
    with pytest.raises(transforms.TransformError):
        transforms.single_cp(spec, 1, 0.5, 0.5)


def test_idle_vector(running_example):
    logger.info("Validate the idle transform bounds and its zero point.")
    assert transforms.idle_vector(running_example, [0, 0]) == 1.0
    low = transforms.idle_vector(running_example, [0.5, 0.5])
    high = transforms.idle_vector(running_example, [1.0, 1.0])
    assert 0 < high < low < 1


def test_idle_vector_marginal(running_example):
    logger.info("Validate the first idle marginal from the excursion chain.")
    # Given X-bar_1 = 0, H_1 is Exp(lambda), so E exp(-g I_1) =
    # 1 - P(W_1 = 0) g / (lambda + g).
    gamma = 0.8
    expected = 1.0 - 4.0 / 9.0 * gamma / (1.0 + gamma)
    assert_allclose(transforms.idle_vector(running_example, [gamma, 0]),
                    expected, rtol=1e-12)


# ---------- Priority ---------- #
def test_priority_without_beta_is_tandem(two_class_priority):
    logger.info("Validate corrections vanish for beta = 0.")
    tandem_spec = two_class_priority.to_tandem()
    for omega in ([0.5, 1.0], [1.0, 1.0], [2.0, 0.5]):
        assert_allclose(transforms.priority_WE(two_class_priority, omega,
                                               [0, 0]),
                        transforms.tandem_WB(tandem_spec, omega, [0, 0]))


def test_priority_strictly_increasing_classes():
    logger.info("Validate (W, E) and (W, B~) agree when class 2 has drift.")
    inputs = (LevyComponentSpec.compound_poisson(0.4, JumpLaw.exponential(2.0)),
              LevyComponentSpec.compound_poisson(0.2, JumpLaw.exponential(2.0),
                                                 0.1))
    spec = PrioritySpec(1.0, inputs)
    omega, beta = [0.5, 1.0], [0.3, 0.7]
    assert_allclose(transforms.priority_WE(spec, omega, beta),
                    transforms.tandem_WB(spec.to_tandem(), omega, beta))


def test_priority_correction_sign(two_class_priority):
    logger.info("Validate E_2 <= B~_2 shows up as a larger transform.")
    omega, beta = [0.5, 0.5], [0.0, 1.0]
    with_e = transforms.priority_WE(two_class_priority, omega, beta)
    with_b = transforms.tandem_WB(two_class_priority.to_tandem(), omega, beta)
    assert with_e > with_b


@settings(max_examples=25, deadline=None)
@given(omega=st.floats(min_value=0.0, max_value=3.0),
       beta=st.floats(min_value=0.0, max_value=3.0))
def test_tandem_monotone_in_omega(omega, beta):
    spec = tandem((1.0, 0.7))
    low = transforms.tandem_WB(spec, [omega, omega], [beta, beta])
    high = transforms.tandem_WB(spec, [omega + 0.5, omega], [beta, beta])
    assert high <= low + 1e-12
