"""Shared networks: the two-station tandem fed by one compound Poisson input.

The input is lambda = 1, Exp(2) jumps and drift d = 0.1, with p12 = 1. With
r = (1, 0.7) the network is stable with strict T1; with r = (1, 0.6) the
second station has zero mean drift and T4 fails.
"""

import numpy as np
import pytest

from levyfluid.model import (JumpLaw, LevyComponentSpec, PrioritySpec,
                             TreeNetworkSpec)


INTENSITY = 1.0
JUMP_RATE = 2.0
INPUT_DRIFT = 0.1
STABLE_RATES = (1.0, 0.7)
CRITICAL_RATES = (1.0, 0.6)


def tandem(rates, intensity=INTENSITY, jump_rate=JUMP_RATE,
           drift=INPUT_DRIFT) -> TreeNetworkSpec:
    n = len(rates)
    root = LevyComponentSpec.compound_poisson(
        intensity, JumpLaw.exponential(jump_rate), drift)
    inputs = (root,) + tuple(LevyComponentSpec.zero() for __ in range(n - 1))
    return TreeNetworkSpec(np.diag(np.ones(n - 1), k=1), rates, inputs)


def random_tree(rng: np.random.Generator, n: int) -> TreeNetworkSpec:
    """A random tree satisfying N1-N3, with compound Poisson inputs."""
    parents = [None] + [int(rng.integers(0, j)) for j in range(1, n)]
    children = np.bincount([p for p in parents[1:]], minlength=n)
    routing = np.zeros((n, n))
    rates = np.zeros(n)
    rates[0] = 1.0
    for j in range(1, n):
        i = parents[j]
        routing[i, j] = rng.uniform(0.3, 1.0) / children[i]
        rates[j] = routing[i, j] * rates[i] * rng.uniform(0.5, 1.0)
    inputs = [LevyComponentSpec.compound_poisson(0.5, JumpLaw.exponential(3.0),
                                                 0.05)]
    inputs += [LevyComponentSpec.compound_poisson(
        0.3, JumpLaw.exponential(rng.uniform(2.0, 6.0)))
        for __ in range(1, n)]
    return TreeNetworkSpec(routing, rates, tuple(inputs))


@pytest.fixture
def running_example():
    return tandem(STABLE_RATES)


@pytest.fixture
def critical_example():
    return tandem(CRITICAL_RATES)


@pytest.fixture
def three_station_chain():
    return tandem((1.0, 0.8, 0.7), intensity=0.5)


@pytest.fixture
def two_class_priority():
    inputs = tuple(LevyComponentSpec.compound_poisson(
        0.4, JumpLaw.exponential(2.0)) for __ in range(2))
    return PrioritySpec(1.0, inputs)


@pytest.fixture
def running_example_dict():
    return {
        'n': 2,
        'P': [[0, 1], [0, 0]],
        'r': list(STABLE_RATES),
        'inputs': [
            {'kind': 'compound-poisson', 'intensity': INTENSITY,
             'jump_law': {'variant': 'exponential', 'rate': JUMP_RATE},
             'drift': INPUT_DRIFT},
            {'kind': 'zero'},
        ],
        'w0': [0, 0],
    }
