"""Container invariants and validators."""

import numpy as np
import pytest

from mssar import ChainState, Hyperparams, PanelData, SamplerConfig
from mssar.types import (config_hash, default_rho_grid, validate_adjacency,
                         validate_weights)


def test_validate_adjacency_accepts_and_rejects():
    good = np.array([[0, 1], [0, 0]])
    out = validate_adjacency(good)
    assert out.dtype == np.int8
    with pytest.raises(ValueError, match="diagonal"):
        validate_adjacency(np.array([[1, 0], [0, 0]]))
    with pytest.raises(ValueError, match="0 or 1"):
        validate_adjacency(np.array([[0, 2], [0, 0]]))
    with pytest.raises(ValueError, match="square"):
        validate_adjacency(np.zeros((2, 3)))


def test_validate_weights_row_sums():
    W = np.array([[0.0, 0.5, 0.5], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    validate_weights(W)
    with pytest.raises(ValueError, match="sums to"):
        validate_weights(np.array([[0.0, 0.4], [0.3, 0.0]]))
    with pytest.raises(ValueError, match="nonnegative"):
        validate_weights(np.array([[0.0, -1.0], [1.0, 0.0]]))
    with pytest.raises(ValueError, match="diagonal"):
        validate_weights(np.array([[0.5, 0.5], [1.0, 0.0]]))


def test_panel_data_validation():
    Y = np.zeros((3, 2))
    Z = np.zeros((3, 2, 0))
    data = PanelData(Y=Y, Z=Z)
    assert (data.T, data.N, data.M) == (3, 2, 0)
    np.testing.assert_allclose(data.weights_for(0), [0.5, 0.5])
    with pytest.raises(ValueError, match="N >= 2"):
        PanelData(Y=np.zeros((3, 1)), Z=np.zeros((3, 1, 0)))
    with pytest.raises(ValueError, match="finite"):
        PanelData(Y=np.full((2, 2), np.nan), Z=np.zeros((2, 2, 0)))
    with pytest.raises(ValueError, match="rank"):
        PanelData(Y=Y, Z=np.zeros((3, 2, 1)))  # constant-zero covariate
    with pytest.raises(ValueError, match="nonnegative"):
        PanelData(Y=Y, Z=Z, basket_weights=-np.ones((3, 2)))


def test_hyperparams_validation_and_broadcast():
    h = Hyperparams(K=3, a_q=2.0)
    np.testing.assert_array_equal(h.a_q, [2.0, 2.0, 2.0])
    with pytest.raises(ValueError, match="positive"):
        Hyperparams(a_rho=0.0)
    with pytest.raises(ValueError, match="grid_size"):
        Hyperparams(grid_size=1)
    with pytest.raises(ValueError, match="harden_threshold"):
        Hyperparams(harden_threshold=1.5)
    mu, sig = Hyperparams(K=1).beta_prior(2)
    np.testing.assert_array_equal(mu, [0.0, 0.0])
    np.testing.assert_array_equal(sig, 100.0 * np.eye(2))
    with pytest.raises(ValueError, match="positive definite"):
        Hyperparams(K=1, sigma_beta=np.array([[1.0, 2.0], [2.0, 1.0]])).beta_prior(2)


def test_sampler_config_validation():
    with pytest.raises(ValueError, match="n_burn"):
        SamplerConfig(n_iter=10, n_burn=10)
    with pytest.raises(ValueError, match="thin"):
        SamplerConfig(thin=0)
    with pytest.raises(ValueError, match="init_strategy"):
        SamplerConfig(init_strategy="warm")
    with pytest.raises(ValueError, match="increasing"):
        SamplerConfig(rho_grid=np.array([0.5, 0.2]))
    grid = default_rho_grid(4)
    np.testing.assert_allclose(grid, [0.125, 0.375, 0.625, 0.875])
    assert SamplerConfig(n_iter=10, n_burn=5, thin=2).n_keep == 2


def test_chain_state_validate():
    state = ChainState(
        s=np.zeros(4, dtype=np.int64),
        omegas=np.zeros((1, 3, 3), dtype=np.int8),
        rhos=np.array([0.5]),
        Q=np.full((1, 3, 3), 0.5),
        Xi=np.ones((1, 1)),
        beta=np.zeros(0),
        sigma2=1.0,
    )
    state.validate()
    state.rhos = np.array([1.0])
    with pytest.raises(ValueError, match="strictly inside"):
        state.validate()


def test_config_hash_stable_and_sensitive():
    h1, s1 = Hyperparams(K=2), SamplerConfig(seed=1)
    h2, s2 = Hyperparams(K=2), SamplerConfig(seed=1)
    assert config_hash(h1, s1) == config_hash(h2, s2)
    assert config_hash(h1, s1) != config_hash(h1, SamplerConfig(seed=2))
    assert config_hash(Hyperparams(K=3), s1) != config_hash(h1, s1)
