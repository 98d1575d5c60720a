"""Pure-NumPy implementations of the two hot sampler kernels.

These are the reference semantics for the compiled twins in ``_core.pyx``:

* :func:`ffbs` -- forward filter, marginal smoother, and joint backward
  sampling of the regime path.
* :func:`omega_sweep` -- one full pass over the off-diagonal entries of a
  regime's adjacency matrix, maintaining the filter inverse and the
  log-determinant through rank-one updates.

Both kernels consume pre-drawn uniforms instead of an RNG so that the two
backends walk the same randomness.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import NumericalDegeneracyError, UnderflowCollapseError

# Full refactorization cadence bounding rank-one drift.
REFRESH_EVERY = 250

# Update ratios below this trigger a defensive refactorization.
NEAR_SINGULAR = 1e-12


def draw_index(weights: np.ndarray, u: float) -> int:
    """Inverse-CDF draw from unnormalized nonnegative weights."""
    cum = np.cumsum(weights)
    idx = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(idx, weights.shape[0] - 1)


def ffbs(loglik: np.ndarray, xi: np.ndarray, pi0: np.ndarray,
         uniforms: np.ndarray | None):
    """Forward-filter / backward-sample over a hidden regime path.

    Parameters
    ----------
    loglik : (T, K) per-period log-likelihood under each regime.
    xi : (K, K) row-stochastic transition matrix.
    pi0 : (K,) initial distribution for the forward pass.
    uniforms : (T,) draws for the backward sampling pass, or None to skip
        sampling and return only the filtered/smoothed probabilities.

    Returns
    -------
    (s, filtered, smoothed) with ``s`` None when uniforms is None. Filtered
    and smoothed rows are normalized to sum to 1.
    """
    T, K = loglik.shape
    filtered = np.empty((T, K))
    pred = np.empty((T, K))
    pred[0] = pi0
    for t in range(T):
        if t > 0:
            pred[t] = filtered[t - 1] @ xi
        with np.errstate(divide="ignore"):
            logp = np.log(pred[t]) + loglik[t]
        m = logp.max()
        if not np.isfinite(m):
            raise UnderflowCollapseError(f"all regimes impossible at period {t}")
        w = np.exp(logp - m)
        filtered[t] = w / w.sum()

    smoothed = np.empty((T, K))
    smoothed[T - 1] = filtered[T - 1]
    for t in range(T - 2, -1, -1):
        ratio = np.divide(smoothed[t + 1], pred[t + 1],
                          out=np.zeros(K), where=pred[t + 1] > 0)
        row = filtered[t] * (xi @ ratio)
        smoothed[t] = row / row.sum()

    s = None
    if uniforms is not None:
        s = np.empty(T, dtype=np.int64)
        s[T - 1] = draw_index(filtered[T - 1], uniforms[T - 1])
        for t in range(T - 2, -1, -1):
            s[t] = draw_index(filtered[t] * xi[:, s[t + 1]], uniforms[t])
    return s, filtered, smoothed


def build_filter_state(W: np.ndarray, rho: float, yk: np.ndarray,
                       zb: np.ndarray):
    """Fresh (sinv, logdet, resid) for S = I - rho*W on the assigned periods.

    ``yk`` and ``zb`` are (N, T_k) column blocks; resid = S yk - zb.
    """
    N = W.shape[0]
    S = np.eye(N) - rho * W
    sign, logdet = np.linalg.slogdet(S)
    if sign <= 0 or not np.isfinite(logdet):
        raise NumericalDegeneracyError("filter determinant nonpositive in refresh")
    sinv = np.linalg.inv(S)
    resid = S @ yk - zb
    return sinv, float(logdet), resid


def flip_stats(omega: np.ndarray, W: np.ndarray, sinv: np.ndarray,
               rho: float, i: int, j: int):
    """Quantities describing the flip of edge (i, j) from its current bit.

    Returns ``(w_new, ds, ratio)``: the renormalized candidate weight row,
    the induced change of row i of the filter, and the determinant ratio
    ``det(S_new)/det(S_old)`` from the matrix determinant lemma.
    """
    row = omega[i].astype(np.float64)
    row[j] = 1.0 - row[j]
    rs = row.sum()
    w_new = row / rs if rs > 0 else row
    ds = -rho * (w_new - W[i])
    ratio = 1.0 + ds @ sinv[:, i]
    return w_new, ds, float(ratio)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def omega_sweep(omega: np.ndarray, W: np.ndarray, sinv: np.ndarray,
                logdet: float, resid: np.ndarray, yk: np.ndarray,
                zb: np.ndarray, rho: float, sigma2: float,
                log_q: np.ndarray, log_1mq: np.ndarray,
                uniforms: np.ndarray, refresh_every: int = REFRESH_EVERY):
    """Gibbs-update every off-diagonal edge of one regime's network in place.

    Visits entries in row-major order. For each edge the posterior odds of
    presence versus absence combine the prior odds, the determinant factor
    raised to the number of assigned periods, and the residual sum-of-squares
    change on those periods; the Bernoulli draw consumes one uniform.

    ``omega``, ``W``, ``sinv`` and ``resid`` are mutated; returns the updated
    log-determinant and the number of accepted toggles.
    """
    N = omega.shape[0]
    tk = yk.shape[1]
    inv2s2 = 0.5 / sigma2
    n_flips = 0
    since_refresh = 0
    edge = 0
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            u = uniforms[edge]
            edge += 1
            b = int(omega[i, j])
            w_new, ds, ratio = flip_stats(omega, W, sinv, rho, i, j)
            if ratio < NEAR_SINGULAR:
                sinv_new, logdet, resid_new = build_filter_state(W, rho, yk, zb)
                sinv[:] = sinv_new
                resid[:] = resid_new
                since_refresh = 0
                ratio = 1.0 + ds @ sinv[:, i]
                if ratio <= 0.0:
                    raise NumericalDegeneracyError(
                        f"determinant ratio nonpositive at edge ({i}, {j})"
                    )
            dlogdet = math.log(ratio)
            d = ds @ yk
            dssr = float(d @ (2.0 * resid[i] + d))

            lq = log_q[i, j]
            l1 = log_1mq[i, j]
            if lq == -np.inf:
                qbar = 0.0
            elif l1 == -np.inf:
                qbar = 1.0
            else:
                if b == 0:
                    lr = lq - l1 + tk * dlogdet - inv2s2 * dssr
                else:
                    lr = lq - l1 - tk * dlogdet + inv2s2 * dssr
                qbar = _sigmoid(lr)

            new_bit = 1 if u < qbar else 0
            if new_bit != b:
                omega[i, j] = new_bit
                resid[i] += d
                logdet += dlogdet
                vrow = ds @ sinv
                ucol = sinv[:, i].copy()
                sinv -= np.outer(ucol, vrow) / ratio
                W[i] = w_new
                n_flips += 1
                since_refresh += 1
                if since_refresh >= refresh_every:
                    sinv_new, logdet, resid_new = build_filter_state(W, rho, yk, zb)
                    sinv[:] = sinv_new
                    resid[:] = resid_new
                    since_refresh = 0
    return float(logdet), n_flips
