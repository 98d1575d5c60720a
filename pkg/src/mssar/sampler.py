"""Gibbs sampler for the regime-switching spatial model.

One sweep cycles through: (1) the regime path via forward-filtering
backward-sampling, (2) each regime's spatial dependence parameter on a grid,
(3) every off-diagonal entry of each regime's adjacency matrix, (4) the link
probabilities, (5) the transition-matrix rows, (6) the coefficient vector,
and (7) the innovation variance. Steps 4-7 are conjugate draws.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from . import kernels, model
from .errors import MssarError, NumericalDegeneracyError, SamplerError
from .types import (ChainState, DrawStore, Hyperparams, PanelData,
                    SamplerConfig, config_hash)


def ffbs_sample_states(per_state_logliks: np.ndarray, Xi: np.ndarray,
                       rng: np.random.Generator):
    """Draw a full regime path given per-period log-likelihoods.

    The forward pass starts from the stationary distribution of Xi; the
    backward pass samples the path jointly and also returns the filtered and
    smoothed probability matrices (rows summing to 1).
    """
    L = np.ascontiguousarray(per_state_logliks, dtype=np.float64)
    pi0 = model.stationary_distribution(Xi)
    uniforms = rng.random(L.shape[0])
    return kernels.ffbs(L, np.ascontiguousarray(Xi), pi0, uniforms)


def smoothed_probabilities(per_state_logliks: np.ndarray, Xi: np.ndarray) -> np.ndarray:
    """Smoothed regime probabilities only (no path sampling)."""
    L = np.ascontiguousarray(per_state_logliks, dtype=np.float64)
    pi0 = model.stationary_distribution(Xi)
    _, _, smoothed = kernels.ffbs(L, np.ascontiguousarray(Xi), pi0, None)
    return smoothed


def rho_grid_log_weights(grid: np.ndarray, W_k: np.ndarray, yk: np.ndarray,
                         zb: np.ndarray, sigma2: float, a_rho: float,
                         b_rho: float) -> np.ndarray:
    """Unnormalized log full-conditional of rho at every grid point.

    ``yk``/``zb`` are (N, T_k) column blocks of the periods assigned to the
    regime. The residual sum of squares is quadratic in rho, so only the
    grid of log-determinants needs fresh factorizations.
    """
    N = W_k.shape[0]
    S_stack = np.eye(N) - grid[:, None, None] * W_k[None, :, :]
    signs, logdets = np.linalg.slogdet(S_stack)
    if (signs <= 0).any():
        raise NumericalDegeneracyError("nonpositive determinant on the rho grid")
    tk = yk.shape[1]
    u = yk - zb
    v = W_k @ yk
    A = float(np.einsum("nt,nt->", u, u))
    B = float(np.einsum("nt,nt->", u, v))
    C = float(np.einsum("nt,nt->", v, v))
    quad = A - 2.0 * grid * B + grid ** 2 * C
    return (
        tk * logdets
        - 0.5 * quad / sigma2
        + (a_rho - 1.0) * np.log(grid)
        + (b_rho - 1.0) * np.log1p(-grid)
    )


def rho_grid_probabilities(grid, W_k, yk, zb, sigma2, a_rho, b_rho) -> np.ndarray:
    """Normalized grid distribution (log-sum-exp in log space)."""
    logw = rho_grid_log_weights(grid, W_k, yk, zb, sigma2, a_rho, b_rho)
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def griddy_gibbs_rho(k: int, data: PanelData, s: np.ndarray, W_k: np.ndarray,
                     beta: np.ndarray, sigma2: float, hyper: Hyperparams,
                     grid: np.ndarray, rng: np.random.Generator) -> float:
    """Draw rho_k from its discretized full conditional.

    With no periods assigned to regime k the draw reduces to the discretized
    Beta prior.
    """
    idx = np.flatnonzero(s == k)
    yk = np.ascontiguousarray(data.Y[idx].T)
    if beta.size:
        zb = np.ascontiguousarray(np.einsum("tnm,m->nt", data.Z[idx], beta))
    else:
        zb = np.zeros_like(yk)
    probs = rho_grid_probabilities(grid, W_k, yk, zb, sigma2,
                                   hyper.a_rho, hyper.b_rho)
    return float(grid[kernels.draw_index(probs, rng.random())])


def row_toggle_delta(omega_k: np.ndarray, W_k: np.ndarray, sinv: np.ndarray,
                     rho: float, i: int, j: int, new_bit: int):
    """Log-determinant change and updated weight row for setting edge (i, j).

    Uses the matrix determinant lemma against the maintained inverse of
    S = I - rho*W. A near-singular update ratio falls back to a pair of
    full factorizations.
    """
    if new_bit == omega_k[i, j]:
        return 0.0, W_k[i].copy()
    w_new, ds, ratio = kernels.flip_stats(omega_k, W_k, sinv, rho, i, j)
    if ratio < kernels.pure.NEAR_SINGULAR:
        W_flip = W_k.copy()
        W_flip[i] = w_new
        dlogdet = (model.log_abs_det_filter(rho, W_flip)
                   - model.log_abs_det_filter(rho, W_k))
        return float(dlogdet), w_new
    return float(np.log(ratio)), w_new


def omega_entry_probability(i: int, j: int, k: int, state: ChainState,
                            data: PanelData) -> float:
    """Posterior probability that edge (i, j) of regime k is present.

    Builds the filter caches from scratch; the sweep kernels compute the
    same quantity incrementally.
    """
    if i == j:
        raise ValueError("diagonal entries are fixed at zero")
    idx = np.flatnonzero(state.s == k)
    yk = np.ascontiguousarray(data.Y[idx].T)
    if state.beta.size:
        zb = np.ascontiguousarray(np.einsum("tnm,m->nt", data.Z[idx], state.beta))
    else:
        zb = np.zeros_like(yk)
    W = model.row_normalize(state.omegas[k])
    rho = float(state.rhos[k])
    sinv, _, resid = kernels.build_filter_state(W, rho, yk, zb)
    tk = idx.size
    b = int(state.omegas[k][i, j])
    w_new, ds, ratio = kernels.flip_stats(state.omegas[k], W, sinv, rho, i, j)
    dlogdet = float(np.log(ratio))
    d = ds @ yk
    dssr = float(d @ (2.0 * resid[i] + d))
    q = float(state.Q[k][i, j])
    if q <= 0.0:
        return 0.0
    if q >= 1.0:
        return 1.0
    lr = np.log(q) - np.log1p(-q)
    if b == 0:
        lr += tk * dlogdet - 0.5 * dssr / state.sigma2
    else:
        lr -= tk * dlogdet - 0.5 * dssr / state.sigma2
    return float(1.0 / (1.0 + np.exp(-lr)))


def sample_omega_entry(i: int, j: int, k: int, state: ChainState,
                       data: PanelData, rng: np.random.Generator) -> int:
    """Single-edge Bernoulli draw from the full conditional."""
    qbar = omega_entry_probability(i, j, k, state, data)
    return int(rng.random() < qbar)


def sample_q(omega, a_q: float, b_q: float, rng: np.random.Generator):
    """Conjugate Beta draw(s) for link probabilities given adjacency bits."""
    omega = np.asarray(omega, dtype=np.float64)
    return rng.beta(a_q + omega, b_q + (1.0 - omega))


def sample_xi_row(k: int, s: np.ndarray, K: int, a_xi: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Dirichlet draw of transition row k from the path's transition counts."""
    counts = model.transition_counts(s, K)
    return rng.dirichlet(a_xi + counts[k])


def beta_posterior(data: PanelData, s: np.ndarray, omegas: np.ndarray,
                   rhos: np.ndarray, sigma2: float, hyper: Hyperparams):
    """Posterior mean and precision Cholesky factor of the coefficient vector.

    Posterior precision is ``Sigma_beta^-1 + sigma^-2 sum_t Z_t'Z_t`` and the
    mean stacks the filtered responses ``S_{s_t} y_t``.
    """
    M = data.M
    mu0, Sig0 = hyper.beta_prior(M)
    Sy = filtered_responses(data, s, omegas, rhos)
    prec0 = np.linalg.inv(Sig0)
    prec = prec0 + np.einsum("tnm,tnl->ml", data.Z, data.Z) / sigma2
    rhs = prec0 @ mu0 + np.einsum("tnm,tn->m", data.Z, Sy) / sigma2
    try:
        L = np.linalg.cholesky(prec)
    except np.linalg.LinAlgError as e:
        raise NumericalDegeneracyError(f"posterior precision not PD: {e}") from e
    mean = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    return mean, L


def sample_beta(data: PanelData, s: np.ndarray, omegas: np.ndarray,
                rhos: np.ndarray, sigma2: float, hyper: Hyperparams,
                rng: np.random.Generator) -> np.ndarray:
    """Gaussian conjugate draw of the coefficient vector."""
    M = data.M
    if M == 0:
        return np.zeros(0)
    mean, L = beta_posterior(data, s, omegas, rhos, sigma2, hyper)
    z = rng.standard_normal(M)
    return mean + np.linalg.solve(L.T, z)


def sigma2_posterior(data: PanelData, s: np.ndarray, omegas: np.ndarray,
                     rhos: np.ndarray, beta: np.ndarray,
                     hyper: Hyperparams) -> tuple[float, float]:
    """Inverse-Gamma posterior (shape, rate) for the innovation variance.

    Shape a_sigma + N*T/2 (the Gaussian kernel carries (sigma^2)^(-NT/2)),
    rate b_sigma + half the residual sum of squares.
    """
    Sy = filtered_responses(data, s, omegas, rhos)
    resid = Sy - (np.einsum("tnm,m->tn", data.Z, beta) if beta.size else 0.0)
    shape = hyper.a_sigma + 0.5 * data.N * data.T
    rate = hyper.b_sigma + 0.5 * float(np.einsum("tn,tn->", resid, resid))
    return shape, rate


def sample_sigma2(data: PanelData, s: np.ndarray, omegas: np.ndarray,
                  rhos: np.ndarray, beta: np.ndarray, hyper: Hyperparams,
                  rng: np.random.Generator) -> float:
    """Inverse-Gamma conjugate draw of the innovation variance."""
    shape, rate = sigma2_posterior(data, s, omegas, rhos, beta, hyper)
    return float(1.0 / rng.gamma(shape, 1.0 / rate))


def filtered_responses(data: PanelData, s: np.ndarray, omegas: np.ndarray,
                       rhos: np.ndarray) -> np.ndarray:
    """(T, N) matrix of S_{s_t} y_t, vectorized per regime."""
    Sy = data.Y.copy()
    for k in range(rhos.shape[0]):
        idx = np.flatnonzero(s == k)
        if idx.size == 0:
            continue
        W = model.row_normalize(omegas[k])
        Sy[idx] -= rhos[k] * (data.Y[idx] @ W.T)
    return Sy


def init_chain(data: PanelData, hyper: Hyperparams, config: SamplerConfig,
               rng: np.random.Generator) -> ChainState:
    """Initial chain state: prior draws, with the path either prior-simulated
    or split into K contiguous equal segments."""
    K, N, T, M = hyper.K, data.N, data.T, data.M
    Q = np.empty((K, N, N))
    omegas = np.zeros((K, N, N), dtype=np.int8)
    for k in range(K):
        Q[k] = rng.beta(hyper.a_q[k], hyper.b_q[k], size=(N, N))
        omegas[k] = rng.random((N, N)) < Q[k]
        np.fill_diagonal(omegas[k], 0)
    rhos = np.clip(rng.beta(hyper.a_rho, hyper.b_rho, size=K), 1e-9, 1.0 - 1e-9)
    Xi = np.stack([rng.dirichlet(np.full(K, hyper.a_xi)) for _ in range(K)])
    mu0, Sig0 = hyper.beta_prior(M)
    beta = mu0 + np.linalg.cholesky(Sig0) @ rng.standard_normal(M) if M else np.zeros(0)
    sigma2 = float(1.0 / rng.gamma(hyper.a_sigma, 1.0 / hyper.b_sigma))

    if config.init_strategy == "k-segments":
        s = np.repeat(np.arange(K), np.diff(np.linspace(0, T, K + 1).astype(int)))
        s = s.astype(np.int64)
    else:
        from .simulate import simulate_chain
        s = simulate_chain(Xi, T, rng)
    return ChainState(s=s, omegas=omegas, rhos=rhos, Q=Q, Xi=Xi,
                      beta=beta, sigma2=sigma2)


def run_gibbs(data: PanelData, hyper: Hyperparams, config: SamplerConfig,
              progress: Optional[Callable[[int, int], None]] = None,
              prior_only: bool = False) -> DrawStore:
    """Run the full sampler and collect retained draws.

    Deterministic given ``config.seed``. ``progress`` is invoked once per
    sweep with (sweep index, total sweeps). ``prior_only`` disables every
    likelihood contribution (data terms dropped from all steps), turning the
    sampler into a prior sampler; used by prior-reproduction checks.
    """
    rng = np.random.default_rng(config.seed)
    K, N, T, M = hyper.K, data.N, data.T, data.M
    grid = config.resolve_grid(hyper.grid_size)
    mu0, Sig0 = hyper.beta_prior(M)
    state = init_chain(data, hyper, config, rng)

    Yc = np.ascontiguousarray(data.Y.T)  # (N, T)
    n_keep = config.n_keep
    keep_states = np.empty((n_keep, T), dtype=np.int64)
    keep_omegas = np.empty((n_keep, K, N, N), dtype=np.int8)
    keep_rhos = np.empty((n_keep, K))
    keep_qs = np.empty((n_keep, K, N, N))
    keep_xis = np.empty((n_keep, K, K))
    keep_betas = np.empty((n_keep, M))
    keep_sigma2s = np.empty(n_keep)
    keep_logliks = np.empty(n_keep)
    keep_iters = np.empty(n_keep, dtype=np.int64)

    def assigned_block(k: int):
        if prior_only:
            idx = np.zeros(0, dtype=np.int64)
        else:
            idx = np.flatnonzero(state.s == k)
        yk = np.ascontiguousarray(Yc[:, idx])
        if M and idx.size:
            zb = np.ascontiguousarray(np.einsum("tnm,m->nt", data.Z[idx], state.beta))
        else:
            zb = np.zeros_like(yk)
        return yk, zb

    r = 0
    step = "init"
    for sweep in range(config.n_iter):
        try:
            step = "states"
            if prior_only:
                L = np.zeros((T, K))
            else:
                L = model.per_state_logliks(data, state)
            s_new, _, _ = ffbs_sample_states(L, state.Xi, rng)
            state.s = s_new

            step = "rho"
            Ws = [model.row_normalize(state.omegas[k]) for k in range(K)]
            for k in range(K):
                yk, zb = assigned_block(k)
                probs = rho_grid_probabilities(grid, Ws[k], yk, zb, state.sigma2,
                                               hyper.a_rho, hyper.b_rho)
                state.rhos[k] = grid[kernels.draw_index(probs, rng.random())]

            step = "omega"
            for k in range(K):
                yk, zb = assigned_block(k)
                sinv, logdet, resid = kernels.build_filter_state(
                    Ws[k], float(state.rhos[k]), yk, zb)
                with np.errstate(divide="ignore"):
                    log_q = np.log(state.Q[k])
                    log_1mq = np.log1p(-state.Q[k])
                uniforms = rng.random(N * (N - 1))
                kernels.omega_sweep(state.omegas[k], Ws[k], sinv, logdet, resid,
                                    yk, zb, float(state.rhos[k]), state.sigma2,
                                    log_q, log_1mq, uniforms, kernels.REFRESH_EVERY)

            step = "q"
            for k in range(K):
                state.Q[k] = sample_q(state.omegas[k], hyper.a_q[k], hyper.b_q[k], rng)

            step = "xi"
            counts = model.transition_counts(state.s, K)
            for k in range(K):
                state.Xi[k] = rng.dirichlet(hyper.a_xi + counts[k])

            step = "beta"
            if M:
                if prior_only:
                    state.beta = mu0 + np.linalg.cholesky(Sig0) @ rng.standard_normal(M)
                else:
                    state.beta = sample_beta(data, state.s, state.omegas,
                                             state.rhos, state.sigma2, hyper, rng)

            step = "sigma2"
            if prior_only:
                state.sigma2 = float(1.0 / rng.gamma(hyper.a_sigma, 1.0 / hyper.b_sigma))
            else:
                state.sigma2 = sample_sigma2(data, state.s, state.omegas,
                                             state.rhos, state.beta, hyper, rng)

            if sweep >= config.n_burn and (sweep - config.n_burn) % config.thin == config.thin - 1:
                step = "store"
                keep_states[r] = state.s
                keep_omegas[r] = state.omegas
                keep_rhos[r] = state.rhos
                keep_qs[r] = state.Q
                keep_xis[r] = state.Xi
                keep_betas[r] = state.beta
                keep_sigma2s[r] = state.sigma2
                keep_logliks[r] = model.complete_loglik(data, state)
                keep_iters[r] = sweep
                r += 1
        except MssarError as e:
            raise SamplerError(sweep, step, e) from e
        if progress is not None:
            progress(sweep + 1, config.n_iter)

    return DrawStore(
        states=keep_states[:r], omegas=keep_omegas[:r], rhos=keep_rhos[:r],
        qs=keep_qs[:r], xis=keep_xis[:r], betas=keep_betas[:r],
        sigma2s=keep_sigma2s[:r], logliks=keep_logliks[:r],
        iterations=keep_iters[:r], seed=config.seed,
        config_hash=config_hash(hyper, config),
    )
