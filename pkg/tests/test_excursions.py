"""Test excursion transforms and the nested-excursion recursion."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_almost_equal

from levyfluid import excursions
from levyfluid.excursions import (ExcursionChain, ExcursionError,
                                  ExcursionModel, MarkCoupling)
from levyfluid.model import JumpLaw


logger = logging.getLogger(__name__)


IDENTITY_TOL = 1e-10
LONG_CHAIN_DRAINS = (2.0, 1.6, 1.3, 1.1, 0.95, 0.8)


@pytest.fixture
def model():
    return ExcursionModel(1.0, 1.0, JumpLaw.exponential(2.0))


@pytest.fixture
def long_chain():
    return ExcursionChain(np.array(LONG_CHAIN_DRAINS), 1.0,
                          JumpLaw.exponential(2.0))


# ---------- Single excursions ---------- #
def test_undershoot_at_zero(model):
    assert_almost_equal(excursions.undershoot_transform(model, 0.0, 0.0), 1.0)


@pytest.mark.parametrize('gamma', [0.1, 0.5, 1.0, 4.0])
def test_undershoot_reduces_to_excursion_length(model, gamma):
    logger.info("Validate E exp(-gamma tau) from both routes.")
    assert_allclose(excursions.undershoot_transform(model, 0.0, gamma),
                    excursions.excursion_length_from_jump_law(model, gamma),
                    rtol=IDENTITY_TOL)


@pytest.mark.parametrize('gamma', [0.0, 0.3, 1.0, 10.0])
def test_characteristic_residual(model, gamma):
    assert abs(excursions.characteristic_residual(model, gamma)) < 1e-10


def test_undershoot_marks(model):
    logger.info("Validate mark arguments shrink the transform.")
    plain = excursions.undershoot_transform(model, 0.5, 0.5)
    marked = excursions.undershoot_transform(model, 0.5, 0.5, [1.0])
    assert 0 < marked < plain
    assert excursions.undershoot_transform(model, 0.5, 0.5, [np.inf]) == 0.0


def test_constant_marks():
    logger.info("Validate constant marks factor out of the transform.")
    law = JumpLaw.exponential(2.0)
    plain = ExcursionModel(1.0, 1.0, law)
    constant = ExcursionModel(1.0, 1.0, law, MarkCoupling.CONSTANT,
                              (0.5, 2.0))
    assert constant.mark_dimension == 2
    kappa = np.array([1.0, 0.25])
    assert_allclose(excursions.undershoot_transform(constant, 0.3, 0.7,
                                                    kappa),
                    excursions.undershoot_transform(plain, 0.3, 0.7) *
                    np.exp(-1.0))
    with pytest.raises(ExcursionError):
        excursions.undershoot_transform(constant, 0.3, 0.7, [1.0])


def test_model_rejects_unstable():
    with pytest.raises(ExcursionError):
        ExcursionModel(0.4, 1.0, JumpLaw.exponential(2.0))
    with pytest.raises(ExcursionError):
        ExcursionModel(1.0, 1.0, JumpLaw.exponential(2.0),
                       MarkCoupling.CONSTANT)


# ---------- Backward recurrence ---------- #
def test_recurrence_edge_cases():
    logger.info("Validate the recurrence transform at its edges.")
    law = JumpLaw.exponential(1.0)
    # s = 1, beta = 0: only zeta is weighted.
    assert_almost_equal(excursions.recurrence_transform(2.0, law, 1.0, 0.0,
                                                        0.5), law.laplace(0.5))
    # s = 0, beta = 0: the event of no point before zeta.
    assert_almost_equal(excursions.recurrence_transform(2.0, law, 0.0, 0.0,
                                                        0.5), law.laplace(2.5))
    # Exp(1) zeta and rate 1 points: A = min(zeta, Exp(1)) is Exp(2).
    assert_almost_equal(excursions.recurrence_transform(1.0, law, 1.0, 1.0,
                                                        0.0), 2.0 / 3.0)


def test_recurrence_rejects_bad_arguments():
    law = JumpLaw.exponential(1.0)
    with pytest.raises(ExcursionError):
        excursions.recurrence_transform(0.0, law, 0.5, 0.0, 0.0)
    with pytest.raises(ExcursionError):
        excursions.recurrence_transform(1.0, law, 1.5, 0.0, 0.0)
    with pytest.raises(ExcursionError):
        excursions.recurrence_transform(1.0, law, 0.5, -1.0, 0.0)


# ---------- Chains ---------- #
def test_chain_from_network(running_example):
    chain = ExcursionChain.from_network(running_example)
    assert_allclose(chain.drains, [0.9, 0.6])
    assert chain.intensity == 1.0
    assert chain.n == 2


def test_chain_rejects_bad_drains():
    law = JumpLaw.exponential(2.0)
    with pytest.raises(ExcursionError):
        ExcursionChain(np.array([0.6, 0.9]), 1.0, law)
    with pytest.raises(ExcursionError):
        ExcursionChain(np.array([1.0, 0.4]), 1.0, law)
    chain = ExcursionChain(np.array([1.0, 0.8]), 1.0, law)
    with pytest.raises(ExcursionError):
        chain.model(2)


def test_chain_from_network_needs_single_input(running_example):
    from levyfluid.model import LevyComponentSpec, TreeNetworkSpec
    inputs = (running_example.inputs[0],
              LevyComponentSpec.deterministic(0.05))
    spec = TreeNetworkSpec(running_example.routing,
                           running_example.drain_rates, inputs)
    with pytest.raises(ExcursionError):
        ExcursionChain.from_network(spec)


def test_chain_coefficients(long_chain):
    coeffs = excursions.chain_coefficients(long_chain, 2, np.zeros(2))
    lam = 1.0
    c = np.array(LONG_CHAIN_DRAINS[:3])
    expected_first = c[0] * ((1 / c[1] - 1 / c[0]) + (1 / c[2] - 1 / c[1])) \
        * lam
    assert_allclose(coeffs, [expected_first,
                             c[1] * (1 / c[2] - 1 / c[1]) * lam, 0.0])


def test_excursion_length_at_zero(long_chain):
    for i in range(long_chain.n):
        assert_almost_equal(
            excursions.excursion_length_transform(long_chain, i, 0.0), 1.0)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(min_value=1, max_value=5),
       beta=st.lists(st.floats(min_value=0.0, max_value=3.0), min_size=5,
                     max_size=5),
       gamma=st.floats(min_value=0.0, max_value=3.0))
def test_recursion_matches_product(k, beta, gamma):
    chain = ExcursionChain(np.array(LONG_CHAIN_DRAINS), 1.0,
                           JumpLaw.exponential(2.0))
    beta = np.array(beta[:k])
    gamma_vector = np.zeros(k + 1)
    gamma_vector[k] = gamma
    recursive = excursions.rho_recursion(chain, k, beta, gamma_vector)
    product = excursions.rho_transform(chain, k, beta, gamma)
    assert abs(recursive - product) <= IDENTITY_TOL


def test_recursion_step_checks_arguments(long_chain):
    with pytest.raises(ExcursionError):
        excursions.rho_recursion_step(long_chain, 0, np.zeros(0),
                                      np.zeros(1), lambda b, g: 1.0)
    with pytest.raises(ExcursionError):
        excursions.rho_recursion_step(long_chain, 2, np.zeros(1),
                                      np.zeros(3), lambda b, g: 1.0)


# ---------- Last-passage starts ---------- #
@settings(max_examples=30, deadline=None)
@given(k=st.integers(min_value=0, max_value=5),
       gamma=st.lists(st.floats(min_value=0.0, max_value=3.0), min_size=6,
                      max_size=6))
def test_H_forms_agree(k, gamma):
    chain = ExcursionChain(np.array(LONG_CHAIN_DRAINS), 1.0,
                           JumpLaw.exponential(2.0))
    gamma = np.array(gamma[:k + 1])
    assert abs(excursions.H_transform_conditioned(chain, k, gamma) -
               excursions.H_transform_via_rho(chain, k, gamma)) <= \
        IDENTITY_TOL


@pytest.mark.parametrize('k', range(len(LONG_CHAIN_DRAINS)))
def test_H_telescopes(long_chain, k):
    logger.info("Validate H_k given X-bar_k = 0 is Exp(lambda).")
    gamma = np.zeros(k + 1)
    gamma[k] = 0.7
    assert_allclose(excursions.H_transform_conditioned(long_chain, k, gamma),
                    1.0 / 1.7, rtol=1e-12)


def test_printed_index_breaks_telescoping(long_chain):
    logger.info("Validate the alternative index is a different quantity.")
    gamma = np.array([0.0, 0.0, 0.7])
    printed = excursions.H_transform_conditioned(long_chain, 2, gamma,
                                                 printed_index=True)
    assert abs(printed - 1.0 / 1.7) > 1e-3


def test_H_rejects_bad_length(long_chain):
    with pytest.raises(ExcursionError):
        excursions.H_transform_conditioned(long_chain, 2, np.zeros(2))
