"""Test the free process and its path summaries."""

import logging

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_almost_equal

from levyfluid import fluctuation, levy, montecarlo
from levyfluid.fluctuation import HorizonConfig
from levyfluid.montecarlo import SamplingConfig

# log_cli_level *is* used, but it's a fixture. Your editor may not see this.
from tests.log import log_cli_level, setup_and_get_logging_args


logger = logging.getLogger(__name__)


def _path(times, jumps, drift, horizon):
    jumps = np.asarray(jumps, dtype=float).reshape(len(times), len(drift))
    return levy.SamplePath(horizon, np.asarray(times, dtype=float), jumps,
                           np.asarray(drift, dtype=float),
                           np.zeros(len(times), dtype=int),
                           jumps[:, 0].copy())


def test_summary_by_hand():
    logger.info("Validate X-bar, G and H on a hand-built path.")
    # X = -t with jumps of 3 at t = 1 and 1 at t = 4: the maximum 2 is
    # reached at t = 1.
    xpath = _path([1.0, 4.0], [3.0, 1.0], [-1.0], 100.0)
    summary = fluctuation.summarize_path(xpath, np.array([-1.0]))
    assert_almost_equal(summary.xbar[0], 2.0)
    assert_almost_equal(summary.g[0], 1.0)
    assert summary.h[0] == 0.0
    assert summary.converged[0]


def test_last_passage_start_by_hand():
    logger.info("Validate H when the maximum stays at zero.")
    # X = -t with jumps of 0.5 at t = 2 and 1 at t = 5. X(2) = -1.5 is the
    # highest later value, and X(t) = -t first drops below it at t = 1.5.
    xpath = _path([2.0, 5.0], [0.5, 1.0], [-1.0], 100.0)
    summary = fluctuation.summarize_path(xpath, np.array([-1.0]))
    assert summary.xbar[0] == 0.0
    assert summary.g[0] == 0.0
    assert_almost_equal(summary.h[0], 1.5)
    assert summary.converged[0]

    # A larger jump at t = 2 takes X to -0.5: H = 0.5.
    rising = _path([2.0], [1.5], [-1.0], 100.0)
    summary = fluctuation.summarize_path(rising, np.array([-1.0]))
    assert summary.xbar[0] == 0.0
    assert_almost_equal(summary.h[0], 0.5)


def test_last_passage_not_seen():
    logger.info("Validate a path that never leaves its future sup.")
    xpath = _path([], [], [-1.0], 20.0)
    summary = fluctuation.summarize_path(xpath, np.array([-1.0]))
    assert summary.h[0] == 20.0
    assert not summary.converged[0]


def test_unconverged_horizon():
    logger.info("Validate a short horizon is flagged as unconverged.")
    xpath = _path([0.5], [2.0], [-1.0], 1.0)
    summary = fluctuation.summarize_path(xpath, np.array([-1.0]),
                                         HorizonConfig(margin_scale=10.0))
    assert not summary.converged[0]


def test_summary_rejects_nonnegative_mean():
    xpath = _path([1.0], [1.0], [-1.0], 10.0)
    with pytest.raises(fluctuation.SummaryError):
        fluctuation.summarize_path(xpath, np.array([0.0]))


def test_build_X(running_example):
    logger.info("Validate X = (I-P')^{-1} J - r t.")
    path = levy.sample_path(running_example, 30.0, 4)
    xpath = fluctuation.build_X(running_example, path)
    assert_allclose(xpath.drift, [0.1 - 1.0, 0.1 - 0.7])
    assert_allclose(xpath.jumps[:, 0], xpath.jumps[:, 1])


def test_adaptive_summary(running_example):
    logger.info("Validate adaptive horizons give converged summaries.")
    means = np.array([-0.4, -0.1])
    for index in range(20):
        summary = fluctuation.summarize_adaptive(
            running_example, levy.path_rng(5, index), means)
        assert np.all(summary.converged)
        assert np.all(summary.xbar >= 0)
        assert np.array_equal(summary.h > 0, summary.xbar == 0)


def test_g_ordering(running_example):
    logger.info("Validate G_1 <= G_2 along tandem paths.")
    means = np.array([-0.4, -0.1])
    g = np.array([fluctuation.summarize_adaptive(
        running_example, levy.path_rng(6, index), means).g
        for index in range(200)])
    pairs = fluctuation.ordering_pairs(running_example)
    assert pairs == [(0, 1)]
    assert fluctuation.check_ordering(g, pairs) == 0


def test_check_ordering_counts():
    g = np.array([[1.0, 2.0], [3.0, 1.0], [0.0, 0.0]])
    assert fluctuation.check_ordering(g, [(0, 1)]) == 1


def test_check_last_passage_counts():
    xbar = np.array([[0.0, 1.0], [0.0, 0.0], [2.0, 0.0], [0.0, 0.0]])
    h = np.array([[3.0, 0.0], [0.0, 1.0], [1.0, 2.0], [1.0, 5.0]])
    # Row 2 has H_1 = 0 with X-bar_1 = 0; row 3 has H_1 > 0 with X-bar_1 > 0.
    assert fluctuation.check_last_passage(xbar, h) == 2
    assert fluctuation.check_last_passage(xbar[0], h[0]) == 0


@pytest.mark.slow
def test_pathwise_laws_at_scale(running_example, log_cli_level):
    logger.info("Validate the G ordering and H > 0 iff X-bar = 0 on 10^5 "
                "stationary paths.")
    log_init_method, log_init_args = setup_and_get_logging_args(
        log_cli_level)
    samples = montecarlo.estimate_stationary(
        running_example, 100000, 23,
        SamplingConfig(workers=4, log_init_method=log_init_method,
                       log_init_args=log_init_args))
    pairs = fluctuation.ordering_pairs(running_example)
    assert fluctuation.check_ordering(samples['g'], pairs) == 0
    xbar, h = samples['xbar'], samples['h']
    assert not np.any((h > 0) & (xbar > 0))
    assert not np.any((h == 0) & (xbar == 0))
    assert fluctuation.check_last_passage(xbar, h) == 0
    # Both events occur, so neither direction holds vacuously.
    assert np.any(xbar == 0, axis=0).all()
    assert np.any(xbar > 0, axis=0).all()


def test_initial_horizon():
    config = HorizonConfig(margin_scale=10.0, initial_factor=2.0)
    means = np.array([-0.4, -0.1])
    assert_allclose(config.margins(means), [25.0, 100.0])
    assert_almost_equal(config.initial_horizon(means), 2000.0)
