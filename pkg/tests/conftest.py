import numpy as np
import pytest

from mssar import Hyperparams, PanelData, SamplerConfig, TruthSpec
from mssar.simulate import simulate_adjacency, simulate_panel


def random_adjacency(rng, N, p=0.4):
    omega = (rng.random((N, N)) < p).astype(np.int8)
    np.fill_diagonal(omega, 0)
    return omega


def random_weights(rng, N, p=0.4):
    from mssar import row_normalize
    return row_normalize(random_adjacency(rng, N, p))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_panel():
    """Deterministic K=2 panel small enough for brute-force oracles."""
    truth = TruthSpec(
        N=4, T=12, K=2,
        Xi=np.array([[0.9, 0.1], [0.2, 0.8]]),
        rhos=np.array([0.6, 0.3]),
        beta=np.array([0.8]),
        sigma2=0.5,
        link_prob=0.4,
        seed=31,
    )
    data, s, omegas = simulate_panel(truth)
    return data, s, omegas, truth


@pytest.fixture
def recovery_fixture():
    """The N=8, T=300, K=2 recovery setup shared by the acceptance tests."""
    truth = TruthSpec(
        N=8, T=300, K=2,
        Xi=np.array([[0.95, 0.05], [0.05, 0.95]]),
        rhos=np.array([0.6, 0.2]),
        beta=np.array([1.0, -0.8]),
        sigma2=0.25,
        link_prob=0.15,
        seed=7,
    )
    data, s, omegas = simulate_panel(truth)
    return data, s, omegas, truth
