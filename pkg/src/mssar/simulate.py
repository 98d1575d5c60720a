"""Ground-truth generators for the full data-generating process.

Used by the posterior-recovery acceptance tests and by the CLI `simulate`
subcommand to produce fixture panels with known regimes, networks, and
parameters.
"""

from __future__ import annotations

import numpy as np

from . import model
from .types import PanelData, TruthSpec, validate_adjacency


def simulate_chain(Xi: np.ndarray, T: int, rng: np.random.Generator) -> np.ndarray:
    """Simulate a regime path: stationary start, then Markov transitions."""
    K = Xi.shape[0]
    s = np.empty(T, dtype=np.int64)
    pi0 = model.stationary_distribution(Xi)
    s[0] = rng.choice(K, p=pi0)
    for t in range(1, T):
        s[t] = rng.choice(K, p=Xi[s[t - 1]])
    return s


def simulate_adjacency(N: int, link_prob: float, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. Bernoulli off-diagonal adjacency with zero diagonal."""
    omega = (rng.random((N, N)) < link_prob).astype(np.int8)
    np.fill_diagonal(omega, 0)
    return omega


def simulate_panel(truth: TruthSpec):
    """Generate a panel from the reduced form y_t = S_{s_t}^{-1} (Z_t b + e_t).

    Covariates are i.i.d. standard normal (plus an optional leading intercept
    column); basket weights default to uniform 1/N each period. Returns
    ``(PanelData, s, omegas)`` and is deterministic given ``truth.seed``.
    """
    rng = np.random.default_rng(truth.seed)
    N, T, K, M = truth.N, truth.T, truth.K, truth.M

    if truth.omegas is not None:
        omegas = truth.omegas.copy()
    else:
        p = np.broadcast_to(np.asarray(truth.link_prob, dtype=np.float64), (K,))
        omegas = np.stack([simulate_adjacency(N, p[k], rng) for k in range(K)])
    for k in range(K):
        validate_adjacency(omegas[k])

    s = simulate_chain(truth.Xi, T, rng)

    Z = rng.standard_normal((T, N, M))
    if truth.intercept and M:
        Z[:, :, 0] = 1.0
    beta = truth.beta

    multipliers = [model.spatial_multiplier(truth.rhos[k], model.row_normalize(omegas[k]))
                   for k in range(K)]
    eps = np.sqrt(truth.sigma2) * rng.standard_normal((T, N))
    Y = np.empty((T, N))
    for t in range(T):
        inner = (Z[t] @ beta if M else np.zeros(N)) + eps[t]
        Y[t] = multipliers[s[t]] @ inner

    data = PanelData(
        Y=Y,
        Z=Z,
        basket_weights=np.full((T, N), 1.0 / N),
        unit_labels=[f"u{i + 1}" for i in range(N)],
        period_labels=[_iso_month(t) for t in range(T)],
    )
    return data, s, omegas


def _iso_month(t: int, start_year: int = 2000) -> str:
    """ISO-8601 month labels for synthetic panels."""
    return f"{start_year + t // 12:04d}-{t % 12 + 1:02d}"
