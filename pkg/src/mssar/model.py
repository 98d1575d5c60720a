"""Deterministic mathematics of the regime-switching spatial model.

Everything here is a pure function of its inputs: the link map from a binary
network to a row-stochastic weight matrix, the spatial filter ``I - rho*W``
and its inverse (the multiplier), log-determinants, and the Gaussian
log-likelihood pieces the sampler and the diagnostics both consume.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalDegeneracyError
from .types import ChainState, PanelData

LOG_2PI = float(np.log(2.0 * np.pi))


def row_normalize(omega: np.ndarray) -> np.ndarray:
    """Row-normalize a binary adjacency matrix into a weight matrix.

    Each row is divided by its sum; rows of isolated nodes (zero sum) stay
    identically zero.
    """
    omega = np.asarray(omega, dtype=np.float64)
    sums = omega.sum(axis=1, keepdims=True)
    return np.divide(omega, sums, out=np.zeros_like(omega), where=sums > 0)


def spatial_filter(rho: float, W: np.ndarray) -> np.ndarray:
    """The filter ``I - rho*W`` applied in the structural form of the model."""
    N = W.shape[0]
    return np.eye(N) - rho * W


def log_abs_det_filter(rho: float, W: np.ndarray) -> float:
    """log det(I - rho*W), the Jacobian term of the likelihood.

    For rho in (0, 1) and a row-stochastic-or-zero-row W the filter is
    strictly diagonally dominant, so the determinant is strictly positive;
    a nonpositive sign from the factorization signals an upstream invariant
    violation and raises :class:`NumericalDegeneracyError`.
    """
    sign, logdet = np.linalg.slogdet(spatial_filter(rho, W))
    if sign <= 0 or not np.isfinite(logdet):
        raise NumericalDegeneracyError(
            f"det(I - rho*W) reported nonpositive (sign={sign}, rho={rho})"
        )
    return float(logdet)


def spatial_multiplier(rho: float, W: np.ndarray) -> np.ndarray:
    """The multiplier ``(I - rho*W)^-1``, equal to the Neumann series
    ``I + rho*W + rho^2*W^2 + ...`` (spectral radius of rho*W stays below 1)."""
    S = spatial_filter(rho, W)
    try:
        return np.linalg.inv(S)
    except np.linalg.LinAlgError as e:  # unreachable on valid inputs
        raise NumericalDegeneracyError(f"filter not invertible: {e}") from e


def obs_loglik(y_t: np.ndarray, Z_t: np.ndarray, beta: np.ndarray,
               sigma2: float, rho_k: float, W_k: np.ndarray) -> float:
    """Log of the single-period likelihood factor under regime k.

    Returns ``-(N/2) log(2 pi sigma^2) + log det(S) - ||S y - Z beta||^2 /
    (2 sigma^2)`` with ``S = I - rho_k W_k``.
    """
    N = y_t.shape[0]
    resid = y_t - rho_k * (W_k @ y_t)
    if beta.size:
        resid = resid - Z_t @ beta
    logdet = log_abs_det_filter(rho_k, W_k)
    return float(
        -0.5 * N * (LOG_2PI + np.log(sigma2))
        + logdet
        - 0.5 * np.dot(resid, resid) / sigma2
    )


def stationary_distribution(Xi: np.ndarray) -> np.ndarray:
    """Stationary distribution of a row-stochastic transition matrix.

    Solves pi' Xi = pi' with sum(pi) = 1. Falls back to the uniform
    distribution when the unit eigenvalue is not simple (reducible chain) or
    the solution is not a proper probability vector.
    """
    K = Xi.shape[0]
    if K == 1:
        return np.ones(1)
    eigvals = np.linalg.eigvals(Xi)
    if np.sum(np.abs(eigvals - 1.0) < 1e-10) != 1:
        return np.full(K, 1.0 / K)
    A = np.vstack([Xi.T - np.eye(K), np.ones(K)])
    b = np.zeros(K + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    if pi.min() < -1e-10:
        return np.full(K, 1.0 / K)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def transition_counts(s: np.ndarray, K: int) -> np.ndarray:
    """N[k, l] = number of consecutive pairs (s_{t-1}=k, s_t=l) in the path."""
    counts = np.zeros((K, K), dtype=np.int64)
    np.add.at(counts, (s[:-1], s[1:]), 1)
    return counts


def per_state_logliks(data: PanelData, state: ChainState) -> np.ndarray:
    """T x K matrix of obs_loglik values, vectorized over periods.

    Entry [t, k] is the log-likelihood of period t under regime k at the
    current (omegas, rhos, beta, sigma2).
    """
    T, N = data.Y.shape
    K = state.rhos.shape[0]
    Yc = data.Y.T  # (N, T)
    if state.beta.size:
        Zb = np.einsum("tnm,m->nt", data.Z, state.beta)
    else:
        Zb = np.zeros((N, T))
    out = np.empty((T, K))
    const = -0.5 * N * (LOG_2PI + np.log(state.sigma2))
    for k in range(K):
        W = row_normalize(state.omegas[k])
        logdet = log_abs_det_filter(state.rhos[k], W)
        resid = Yc - state.rhos[k] * (W @ Yc) - Zb
        out[:, k] = const + logdet - 0.5 * np.einsum("nt,nt->t", resid, resid) / state.sigma2
    return out


def complete_loglik(data: PanelData, state: ChainState) -> float:
    """Complete-data log-likelihood of (y, s) given all parameters.

    Sum of the per-period observation terms under the assigned regimes, the
    transition term ``sum_kl N_kl(s) log xi_kl``, and the initial-state term
    ``log pi(s_1)`` with pi the stationary distribution of Xi. Returns -inf
    when the path requires a zero-probability transition.
    """
    K = state.rhos.shape[0]
    logliks = per_state_logliks(data, state)
    obs_term = float(logliks[np.arange(data.T), state.s].sum())

    counts = transition_counts(state.s, K)
    with np.errstate(divide="ignore"):
        log_xi = np.log(state.Xi)
    if np.any((counts > 0) & ~np.isfinite(log_xi)):
        return float("-inf")
    trans_term = float((counts * np.where(counts > 0, log_xi, 0.0)).sum())

    pi0 = stationary_distribution(state.Xi)
    p_first = pi0[state.s[0]]
    if p_first <= 0.0:
        return float("-inf")
    return obs_term + trans_term + float(np.log(p_first))
