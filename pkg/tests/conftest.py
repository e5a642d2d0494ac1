import numpy as np
import pytest

from sghawkes import EventSequence, GammaPriorSet, HawkesParams, dense3, simulate


@pytest.fixture
def params2():
    """Asymmetric two-dimensional parameters used across unit tests."""
    return HawkesParams(
        np.array([0.4, 0.9]),
        np.array([[0.5, 0.2], [0.1, 0.3]]),
        np.array([[2.0, 5.0], [1.0, 3.0]]),
    )


@pytest.fixture
def seq5():
    """Five handmade events on [0, 4] with both dimensions active."""
    return EventSequence(
        np.array([0.3, 0.9, 1.4, 2.2, 3.1]),
        np.array([0, 1, 0, 0, 1]),
        4.0,
        2,
    )


@pytest.fixture
def priors2():
    return GammaPriorSet.constant(2)


@pytest.fixture
def priors3():
    return GammaPriorSet.constant(3)


def random_sequence(rng, n_max=50, K_max=3, T=5.0):
    """A sorted random marked sequence; not a Hawkes draw, just valid data."""
    n = int(rng.integers(2, n_max + 1))
    K = int(rng.integers(1, K_max + 1))
    times = np.sort(rng.uniform(0.0, T, size=n))
    dims = rng.integers(0, K, size=n)
    return EventSequence(times, dims, T, K)


def random_params(rng, K, alpha_hi=0.6):
    mu = rng.uniform(0.2, 1.5, size=K)
    alpha = rng.uniform(0.05, alpha_hi, size=(K, K))
    beta = rng.uniform(0.5, 6.0, size=(K, K))
    return HawkesParams(mu, alpha, beta)


@pytest.fixture(scope="session")
def dense3_T100():
    """One medium Dense3 realisation shared by the slower sampler tests."""
    spec = dense3(100.0)
    return spec, simulate(spec, 42)
