"""Post-processing of retained draws.

Label alignment, posterior summaries, smoothed regime probabilities, edge
hardening, network statistics, effect decompositions, and the complete-data
deviance criterion used to choose the number of regimes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import model, sampler
from .types import ChainState, DrawStore, PanelData


def relabel_draws(store: DrawStore) -> DrawStore:
    """Align regime labels draw by draw so rho_1 >= rho_2 >= ... >= rho_K.

    Adjacencies, link probabilities, transition rows and columns, and the
    sampled path are permuted consistently; the stored complete-data
    log-likelihoods are unchanged by construction. Ties keep the original
    label order.
    """
    R, K = store.rhos.shape
    states = store.states.copy()
    omegas = store.omegas.copy()
    rhos = store.rhos.copy()
    qs = store.qs.copy()
    xis = store.xis.copy()
    for r in range(R):
        perm = np.argsort(-store.rhos[r], kind="stable")
        if np.array_equal(perm, np.arange(K)):
            continue
        inv = np.empty(K, dtype=np.int64)
        inv[perm] = np.arange(K)
        rhos[r] = store.rhos[r][perm]
        omegas[r] = store.omegas[r][perm]
        qs[r] = store.qs[r][perm]
        xis[r] = store.xis[r][perm][:, perm]
        states[r] = inv[store.states[r]]
    return DrawStore(
        states=states, omegas=omegas, rhos=rhos, qs=qs, xis=xis,
        betas=store.betas.copy(), sigma2s=store.sigma2s.copy(),
        logliks=store.logliks.copy(), iterations=store.iterations.copy(),
        seed=store.seed, config_hash=store.config_hash,
    )


def smoothed_state_probabilities(store: DrawStore, data: PanelData) -> np.ndarray:
    """Posterior mean of the smoothed regime probabilities.

    Recomputes the forward-backward pass at every retained draw's parameters
    and averages; rows sum to 1.
    """
    if store.n_draws == 0:
        raise ValueError("empty draw store")
    acc = np.zeros((data.T, store.K))
    for r in range(store.n_draws):
        state = store.draw(r)
        L = model.per_state_logliks(data, state)
        acc += sampler.smoothed_probabilities(L, state.Xi)
    return acc / store.n_draws


def edge_inclusion(store: DrawStore) -> np.ndarray:
    """(K, N, N) posterior inclusion probabilities; diagonal reported as 0."""
    inc = store.omegas.mean(axis=0, dtype=np.float64)
    for k in range(inc.shape[0]):
        np.fill_diagonal(inc[k], 0.0)
    return inc


def harden_adjacency(inclusion: np.ndarray, threshold: float = 0.68) -> np.ndarray:
    """Keep edges whose inclusion probability strictly exceeds the threshold."""
    hard = (inclusion > threshold).astype(np.int8)
    if hard.ndim == 2:
        np.fill_diagonal(hard, 0)
    else:
        for k in range(hard.shape[0]):
            np.fill_diagonal(hard[k], 0)
    return hard


def link_density(omega: np.ndarray) -> float:
    """Percentage of realized directed links among the N(N-1) possible."""
    N = omega.shape[0]
    return 100.0 * float(np.asarray(omega).sum()) / (N * (N - 1))


def network_density(W_like: np.ndarray) -> float:
    """Mean weight over all N(N-1) possible directed links, scaled by 100.

    Applied to either a weight matrix or its rho-scaled version; extends the
    link density by the numerical size of each link.
    """
    N = W_like.shape[0]
    return 100.0 * float(np.asarray(W_like).sum()) / (N * (N - 1))


def effects(rho: float, W: np.ndarray, weights: np.ndarray):
    """Direct, spillover, and total effect vectors from the multiplier.

    With multiplier ``Mult = (I - rho*W)^-1``: direct effects weight the
    diagonal, spillovers the off-diagonal columns, totals the full columns;
    ``total = direct + spillover`` entrywise.
    """
    weights = np.asarray(weights, dtype=np.float64)
    mult = model.spatial_multiplier(rho, W)
    diag = np.diagonal(mult)
    delta = weights * diag
    zeta = weights @ (mult - np.diag(diag))
    tau = weights @ mult
    return delta, zeta, tau


@dataclass
class StateEffects:
    """Per-period and time-averaged effects for one regime."""

    periods: np.ndarray            # qualifying period indices
    delta: np.ndarray              # (n_periods, N)
    zeta: np.ndarray
    tau: np.ndarray
    mean_delta: np.ndarray         # (N,)
    mean_zeta: np.ndarray
    mean_tau: np.ndarray


@dataclass
class EffectsReport:
    """Effect decompositions per regime; regimes with no qualifying period
    are absent from ``per_state``."""

    per_state: Dict[int, StateEffects] = field(default_factory=dict)

    def __contains__(self, k: int) -> bool:
        return k in self.per_state


def state_averaged_effects(store: DrawStore, data: PanelData,
                           threshold: float = 0.68,
                           smoothed: Optional[np.ndarray] = None) -> EffectsReport:
    """Effects per regime, averaged over that regime's dominant periods.

    The per-regime multiplier uses the posterior-mean rho with the hardened,
    re-row-normalized network. A period qualifies for regime k when its
    smoothed probability exceeds 0.5; each qualifying period is evaluated
    with its own basket weights, then averaged. Regimes with no qualifying
    periods are reported as absent.
    """
    K = store.K
    if smoothed is None:
        smoothed = smoothed_state_probabilities(store, data)
    inclusion = edge_inclusion(store)
    rho_mean = store.rhos.mean(axis=0)
    report = EffectsReport()
    for k in range(K):
        W = model.row_normalize(harden_adjacency(inclusion[k], threshold))
        qualifying = np.flatnonzero(smoothed[:, k] > 0.5)
        if qualifying.size == 0:
            continue
        deltas, zetas, taus = [], [], []
        for t in qualifying:
            d, z, tau = effects(float(rho_mean[k]), W, data.weights_for(int(t)))
            deltas.append(d)
            zetas.append(z)
            taus.append(tau)
        deltas = np.array(deltas)
        zetas = np.array(zetas)
        taus = np.array(taus)
        report.per_state[k] = StateEffects(
            periods=qualifying, delta=deltas, zeta=zetas, tau=taus,
            mean_delta=deltas.mean(axis=0), mean_zeta=zetas.mean(axis=0),
            mean_tau=taus.mean(axis=0),
        )
    return report


def plug_in_state(store: DrawStore, data: PanelData,
                  threshold: float = 0.68,
                  smoothed: Optional[np.ndarray] = None) -> ChainState:
    """Posterior plug-ins: smoothed-argmax path and posterior-mean parameters
    with networks from the hardened adjacencies."""
    if smoothed is None:
        smoothed = smoothed_state_probabilities(store, data)
    s_hat = smoothed.argmax(axis=1).astype(np.int64)
    omegas = harden_adjacency(edge_inclusion(store), threshold)
    return ChainState(
        s=s_hat,
        omegas=omegas,
        rhos=store.rhos.mean(axis=0),
        Q=store.qs.mean(axis=0),
        Xi=store.xis.mean(axis=0),
        beta=store.betas.mean(axis=0),
        sigma2=float(store.sigma2s.mean()),
    )


def dic5(store: DrawStore, data: PanelData, threshold: float = 0.68) -> float:
    """Complete-data deviance criterion for choosing the regime count.

    ``-4 * mean(loglik over draws) + 2 * loglik(plug-ins)``; lower is better.
    """
    if store.n_draws == 0:
        raise ValueError("empty draw store")
    mean_ll = float(store.logliks.mean())
    plug = plug_in_state(store, data, threshold)
    return -4.0 * mean_ll + 2.0 * model.complete_loglik(data, plug)


def percentiles(draws: np.ndarray, qs=(5.0, 50.0, 95.0)) -> np.ndarray:
    """Linear-interpolation percentiles over the draw axis."""
    return np.percentile(np.asarray(draws, dtype=np.float64), qs)


def posterior_summary(store: DrawStore) -> Dict[str, Dict[str, float]]:
    """Mean, standard deviation, and 5/50/95 percentiles per scalar unknown.

    Covers the rhos, coefficients, innovation variance, and transition-matrix
    entries (link probabilities are summarized by ``edge_inclusion``).
    """
    out: Dict[str, Dict[str, float]] = {}

    def add(name: str, draws: np.ndarray):
        p5, p50, p95 = percentiles(draws)
        out[name] = {
            "mean": float(np.mean(draws)),
            "std": float(np.std(draws)),
            "p5": float(p5),
            "p50": float(p50),
            "p95": float(p95),
        }

    K = store.K
    for k in range(K):
        add(f"rho_{k + 1}", store.rhos[:, k])
    for m in range(store.betas.shape[1]):
        add(f"beta_{m + 1}", store.betas[:, m])
    add("sigma2", store.sigma2s)
    for k in range(K):
        for l in range(K):
            add(f"xi_{k + 1}{l + 1}", store.xis[:, k, l])
    return out
