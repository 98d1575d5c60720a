"""Bayesian regime-switching spatial autoregression with estimated networks.

A Gibbs sampler for panel models where both the spatial weight matrix and
the spatial dependence parameter switch with a hidden Markov chain, plus the
post-processing that turns draws into smoothed regime probabilities,
hardened networks, network statistics, and effect decompositions.
"""

from .diagnostics import (EffectsReport, StateEffects, dic5, edge_inclusion,
                          effects, harden_adjacency, link_density,
                          network_density, posterior_summary, relabel_draws,
                          smoothed_state_probabilities,
                          state_averaged_effects)
from .errors import (ConfigError, DataError, MssarError,
                     NumericalDegeneracyError, SamplerError,
                     UnderflowCollapseError)
from .kernels import BACKEND
from .model import (complete_loglik, log_abs_det_filter, obs_loglik,
                    row_normalize, spatial_filter, spatial_multiplier,
                    stationary_distribution)
from .sampler import (ffbs_sample_states, griddy_gibbs_rho, init_chain,
                      run_gibbs, sample_beta, sample_omega_entry, sample_q,
                      sample_sigma2, sample_xi_row)
from .simulate import simulate_chain, simulate_panel
from .types import (ChainState, DrawStore, Hyperparams, PanelData,
                    SamplerConfig, TruthSpec)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ChainState",
    "ConfigError",
    "DataError",
    "DrawStore",
    "EffectsReport",
    "Hyperparams",
    "MssarError",
    "NumericalDegeneracyError",
    "PanelData",
    "SamplerConfig",
    "SamplerError",
    "StateEffects",
    "TruthSpec",
    "UnderflowCollapseError",
    "complete_loglik",
    "dic5",
    "edge_inclusion",
    "effects",
    "ffbs_sample_states",
    "griddy_gibbs_rho",
    "harden_adjacency",
    "init_chain",
    "link_density",
    "log_abs_det_filter",
    "network_density",
    "obs_loglik",
    "posterior_summary",
    "relabel_draws",
    "row_normalize",
    "run_gibbs",
    "sample_beta",
    "sample_omega_entry",
    "sample_q",
    "sample_sigma2",
    "sample_xi_row",
    "simulate_chain",
    "simulate_panel",
    "smoothed_state_probabilities",
    "spatial_filter",
    "spatial_multiplier",
    "state_averaged_effects",
    "stationary_distribution",
]
