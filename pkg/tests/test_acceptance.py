"""Acceptance criteria, one test per criterion.

Each test prints a PASS/FAIL line (run with ``pytest -s`` to see them all).
The heavy posterior-recovery fit is shared across criteria via module-scoped
fixtures.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.special import logsumexp
from scipy.stats import rankdata

from mssar import (Hyperparams, SamplerConfig, TruthSpec, dic5,
                   edge_inclusion, effects, relabel_draws, row_normalize,
                   run_gibbs, smoothed_state_probabilities,
                   spatial_multiplier)
from mssar import io, kernels, model
from mssar.sampler import rho_grid_probabilities, row_toggle_delta
from mssar.simulate import simulate_panel
from mssar.types import default_rho_grid

from conftest import random_adjacency, random_weights


def _report(num: int, ok: bool, detail: str):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, detail


# ---------------------------------------------------------------------------
# shared recovery fixtures

TRUTH = TruthSpec(
    N=8, T=300, K=2,
    Xi=np.array([[0.95, 0.05], [0.05, 0.95]]),
    rhos=np.array([0.6, 0.2]),
    beta=np.array([1.0, -0.8]),
    sigma2=0.25,
    link_prob=0.15,
    seed=7,
)


@pytest.fixture(scope="module")
def recovery_data():
    return simulate_panel(TRUTH)


@pytest.fixture(scope="module")
def recovery_store(recovery_data):
    data, _, _ = recovery_data
    config = SamplerConfig(n_iter=10_000, n_burn=5_000, thin=5, seed=2024)
    t0 = time.perf_counter()
    store = run_gibbs(data, Hyperparams(K=2), config)
    elapsed = time.perf_counter() - t0
    return relabel_draws(store), elapsed


# ---------------------------------------------------------------------------

def test_criterion_1_effects_identity():
    rng = np.random.default_rng(1001)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        N = int(rng.integers(2, 21))
        W = random_weights(rng, N, rng.uniform(0.05, 0.95))
        rho = float(rng.uniform(0.01, 0.99))
        w = rng.random(N)
        delta, zeta, tau = effects(rho, W, w)
        worst = max(worst, float(np.abs(tau - (delta + zeta)).max()))
    elapsed = time.perf_counter() - t0
    _report(1, worst < 1e-12 and elapsed < 5.0,
            f"effects identity max |tau-(delta+zeta)| = {worst:.2e} over 1000 "
            f"instances in {elapsed:.2f}s")


def _enumerate_paths(loglik, Xi, pi0):
    T, K = loglik.shape
    paths = list(itertools.product(range(K), repeat=T))
    logp = np.empty(len(paths))
    with np.errstate(divide="ignore"):
        log_xi = np.log(Xi)
        log_pi = np.log(pi0)
    for idx, path in enumerate(paths):
        lp = log_pi[path[0]] + loglik[0, path[0]]
        for t in range(1, T):
            lp += log_xi[path[t - 1], path[t]] + loglik[t, path[t]]
        logp[idx] = lp
    logp -= logsumexp(logp)
    probs = np.exp(logp)
    smoothed = np.zeros((T, K))
    for idx, path in enumerate(paths):
        for t in range(T):
            smoothed[t, path[t]] += probs[idx]
    return paths, probs, smoothed


def test_criterion_2_ffbs_oracle():
    rng = np.random.default_rng(1002)
    t0 = time.perf_counter()
    worst_tv = 0.0
    instances = []
    for _ in range(200):
        T = int(rng.integers(2, 9))
        K = int(rng.integers(1, 4))
        loglik = np.ascontiguousarray(2.0 * rng.normal(size=(T, K)))
        Xi = rng.dirichlet(np.ones(K), size=K)
        pi0 = model.stationary_distribution(Xi)
        _, _, smoothed = kernels.ffbs(loglik, Xi, pi0, None)
        _, probs, expected = _enumerate_paths(loglik, Xi, pi0)
        worst_tv = max(worst_tv, 0.5 * float(np.abs(smoothed - expected).sum(axis=1).max()))
        instances.append((loglik, Xi, pi0))

    # sampled-path frequencies at 50k draws; small path spaces keep the
    # per-path 3-SE bound meaningful (few enough simultaneous checks)
    n = 50_000
    freq_ok = True
    checked = 0
    for loglik, Xi, pi0 in instances:
        T, K = loglik.shape
        if K ** T > 32 or checked >= 4:
            continue
        checked += 1
        paths, probs, _ = _enumerate_paths(loglik, Xi, pi0)
        counts = dict.fromkeys(paths, 0)
        for _ in range(n):
            s, _, _ = kernels.ffbs(loglik, Xi, pi0, rng.random(T))
            counts[tuple(s)] += 1
        for path, p in zip(paths, probs):
            se = math.sqrt(p * (1 - p) / n)
            if abs(counts[path] / n - p) > 3 * se + 1e-12:
                freq_ok = False
    elapsed = time.perf_counter() - t0
    _report(2, worst_tv < 1e-12 and freq_ok and checked == 4 and elapsed < 60.0,
            f"smoothed TV max {worst_tv:.2e} over 200 instances; path "
            f"frequencies within 3 SE on {checked} x 50k draws in {elapsed:.1f}s")


def test_criterion_3_determinant_update_drift():
    rng = np.random.default_rng(1003)
    t0 = time.perf_counter()
    N = 20
    omega = random_adjacency(rng, N, 0.3)
    W = row_normalize(omega)
    rho = 0.65
    sinv = np.linalg.inv(np.eye(N) - rho * W)
    logdet = model.log_abs_det_filter(rho, W)
    worst = 0.0
    since_refresh = 0
    for toggle in range(1000):
        i, j = rng.integers(0, N, size=2)
        while i == j:
            j = rng.integers(0, N)
        new_bit = 1 - omega[i, j]
        dlogdet, w_row = row_toggle_delta(omega, W, sinv, rho, int(i), int(j),
                                          int(new_bit))
        _, ds, ratio = kernels.flip_stats(omega, W, sinv, rho, int(i), int(j))
        # commit the toggle with the same bookkeeping the sweep kernel uses
        vrow = ds @ sinv
        ucol = sinv[:, i].copy()
        sinv -= np.outer(ucol, vrow) / ratio
        omega[i, j] = new_bit
        W[i] = w_row
        logdet += dlogdet
        since_refresh += 1
        if since_refresh >= kernels.REFRESH_EVERY:
            sinv = np.linalg.inv(np.eye(N) - rho * W)
            logdet = model.log_abs_det_filter(rho, W)
            since_refresh = 0
        worst = max(worst, abs(logdet - model.log_abs_det_filter(rho, W)))
    elapsed = time.perf_counter() - t0
    _report(3, worst < 1e-8 and elapsed < 10.0,
            f"log-det drift after 1000 toggles at N=20: max {worst:.2e} "
            f"in {elapsed:.2f}s")


def test_criterion_4_conjugate_moments(small_panel):
    from mssar import sample_beta, sample_q, sample_sigma2, sample_xi_row
    from mssar.sampler import beta_posterior, sigma2_posterior

    data, s, omegas, truth = small_panel
    s = np.asarray(s)
    rng = np.random.default_rng(1004)
    n = 10_000
    t0 = time.perf_counter()
    checks = []

    def within(draws, mean, var, label):
        se = math.sqrt(var / n)
        ok = abs(draws.mean() - mean) <= 3 * se
        checks.append((label, ok))

    q1 = np.array([sample_q(1, 1.0, 1.0, rng) for _ in range(n)])
    within(q1, 2 / 3, 2 / 36, "q | edge present ~ Be(2,1)")
    q0 = np.array([sample_q(0, 1.0, 1.0, rng) for _ in range(n)])
    within(q0, 1 / 3, 2 / 36, "q | edge absent ~ Be(1,2)")

    s_fix = np.array([0, 0, 0])
    xi = np.array([sample_xi_row(0, s_fix, 2, 1.0, rng)[0] for _ in range(n)])
    within(xi, 0.75, 3 / (16 * 5), "xi row ~ Dir(3,1)")

    hyper = Hyperparams(K=2)
    mean, L = beta_posterior(data, s, omegas, truth.rhos, truth.sigma2, hyper)
    cov = np.linalg.inv(L @ L.T)
    betas = np.array([sample_beta(data, s, omegas, truth.rhos, truth.sigma2,
                                  hyper, rng) for _ in range(n)])
    for m in range(data.M):
        within(betas[:, m], mean[m], cov[m, m], f"beta_{m}")
        var_ok = abs(betas[:, m].var() - cov[m, m]) <= 3 * cov[m, m] * math.sqrt(2 / n)
        checks.append((f"beta_{m} variance", var_ok))

    shape, rate = sigma2_posterior(data, s, omegas, truth.rhos, truth.beta, hyper)
    sig = np.array([sample_sigma2(data, s, omegas, truth.rhos, truth.beta,
                                  hyper, rng) for _ in range(n)])
    ig_mean = rate / (shape - 1)
    ig_var = rate ** 2 / ((shape - 1) ** 2 * (shape - 2))
    within(sig, ig_mean, ig_var, "sigma2 ~ IG(shape, rate)")

    elapsed = time.perf_counter() - t0
    failed = [label for label, ok in checks if not ok]
    _report(4, not failed and elapsed < 30.0,
            f"{len(checks)} conjugate moment checks at 10k draws in "
            f"{elapsed:.1f}s" + (f"; failed: {failed}" if failed else ""))


def test_criterion_5_griddy_correctness():
    # empty-state draw equals the discretized Beta prior
    grid = default_rho_grid(100)
    a, b = 2.5, 1.5
    probs = rho_grid_probabilities(grid, np.zeros((3, 3)), np.zeros((3, 0)),
                                   np.zeros((3, 0)), 1.0, a, b)
    logprior = (a - 1) * np.log(grid) + (b - 1) * np.log1p(-grid)
    prior = np.exp(logprior - logsumexp(logprior))
    prior_gap = float(np.abs(probs - prior).max())

    # N=3, T_k=5 fixture against independent pointwise evaluation
    rng = np.random.default_rng(1005)
    N, tk = 3, 5
    W = random_weights(rng, N)
    yk = rng.normal(size=(N, tk))
    zb = 0.5 * rng.normal(size=(N, tk))
    sigma2 = 0.7
    probs = rho_grid_probabilities(grid, W, yk, zb, sigma2, a, b)
    logw = np.empty(grid.size)
    for g, rho in enumerate(grid):
        S = np.eye(N) - rho * W
        ssr = sum(float(np.sum((S @ yk[:, t] - zb[:, t]) ** 2)) for t in range(tk))
        logw[g] = (tk * np.linalg.slogdet(S)[1] - 0.5 * ssr / sigma2
                   + (a - 1) * math.log(rho) + (b - 1) * math.log1p(-rho))
    expected = np.exp(logw - logsumexp(logw))
    fixture_gap = float(np.abs(probs - expected).max())
    _report(5, prior_gap < 1e-15 and fixture_gap < 1e-12,
            f"empty-state vs discretized prior gap {prior_gap:.2e}; fixture "
            f"grid probabilities vs direct evaluation gap {fixture_gap:.2e}")


def test_criterion_6_posterior_recovery(recovery_data, recovery_store):
    data, s_true, omegas_true = recovery_data
    store, elapsed = recovery_store

    rho_err = np.abs(store.rhos.mean(axis=0) - TRUTH.rhos)
    smoothed = smoothed_state_probabilities(store, data)
    path_match = float((smoothed.argmax(axis=1) == s_true).mean())

    inclusion = edge_inclusion(store)
    off = ~np.eye(data.N, dtype=bool)
    labels = np.concatenate([omegas_true[k][off] for k in range(2)])
    scores = np.concatenate([inclusion[k][off] for k in range(2)])
    ranks = rankdata(scores)
    n1 = int(labels.sum())
    n0 = labels.size - n1
    auc = (ranks[labels == 1].sum() - n1 * (n1 + 1) / 2) / (n1 * n0)

    ok = (rho_err < 0.1).all() and path_match >= 0.90 and auc >= 0.9 and elapsed < 900
    _report(6, ok,
            f"rho errors {np.round(rho_err, 4).tolist()} (<0.1); path match "
            f"{path_match:.3f} (>=0.90); edge AUC {auc:.3f} (>=0.9); "
            f"fit took {elapsed:.0f}s (10k sweeps)")


def test_criterion_7_dic_ordering(recovery_data):
    data, _, _ = recovery_data
    ok = True
    details = []
    for seed in (101, 202, 303):
        dics = {}
        for K in (1, 2):
            config = SamplerConfig(n_iter=3000, n_burn=1500, thin=5, seed=seed)
            store = relabel_draws(run_gibbs(data, Hyperparams(K=K), config))
            dics[K] = dic5(store, data)
        details.append(f"seed {seed}: K1={dics[1]:.0f} K2={dics[2]:.0f}")
        ok = ok and dics[2] < dics[1]
    _report(7, ok, "DIC5(K=2) < DIC5(K=1) on the recovery fixture; " + "; ".join(details))


def test_criterion_8_determinant_positivity_and_neumann():
    rng = np.random.default_rng(1008)
    all_positive = True
    for _ in range(10_000):
        N = int(rng.integers(2, 11))
        W = random_weights(rng, N, rng.uniform(0.05, 0.95))
        rho = float(rng.uniform(1e-6, 1 - 1e-6))
        sign, _ = np.linalg.slogdet(model.spatial_filter(rho, W))
        if sign <= 0:
            all_positive = False
    worst = 0.0
    for _ in range(200):
        N = int(rng.integers(2, 11))
        W = random_weights(rng, N, rng.uniform(0.1, 0.9))
        rho = float(rng.uniform(0.05, 0.6))
        mult = spatial_multiplier(rho, W)
        acc = np.zeros((N, N))
        term = np.eye(N)
        for _ in range(50):
            acc += term
            term = rho * (term @ W)
        worst = max(worst, float(np.abs(acc - mult).max()))
    _report(8, all_positive and worst < 1e-10,
            f"det(I-rho*W) > 0 on 10k instances; 50-term Neumann gap max "
            f"{worst:.2e} (rho<=0.6, N<=10)")


def test_criterion_9_reproducibility_and_round_trips(tmp_path):
    truth = TruthSpec(N=5, T=40, K=2, Xi=np.array([[0.9, 0.1], [0.2, 0.8]]),
                      rhos=np.array([0.55, 0.25]), beta=np.array([0.7]),
                      sigma2=0.3, link_prob=0.3, seed=4)
    data, _, _ = simulate_panel(truth)
    config = SamplerConfig(n_iter=200, n_burn=100, thin=2, seed=31337)
    a = run_gibbs(data, Hyperparams(K=2), config)
    b = run_gibbs(data, Hyperparams(K=2), config)
    bitwise = a.equals(b)

    io.write_panel_csv(data, tmp_path / "panel.csv")
    loaded = io.load_panel_csv(tmp_path / "panel.csv")
    csv_exact = (np.array_equal(loaded.Y, data.Y)
                 and np.array_equal(loaded.Z, data.Z)
                 and np.array_equal(loaded.basket_weights, data.basket_weights))

    io.write_draws(a, tmp_path / "draws")
    back = io.read_draws(tmp_path / "draws")
    draws_exact = back.equals(a)

    _report(9, bitwise and csv_exact and draws_exact,
            f"same-seed DrawStore bitwise identical: {bitwise}; CSV round-trip "
            f"exact: {csv_exact}; draw files round-trip exact: {draws_exact}")


def test_criterion_10_report_surface(recovery_data, recovery_store, tmp_path):
    data, _, _ = recovery_data
    store, _ = recovery_store
    written = io.export_report(store, data, tmp_path / "report")

    kinds = {"state_probs", "network_stats", "summary"}
    kinds_present = kinds <= set(written)
    has_effects = any(k.startswith("effects_state") for k in written)
    has_edges = any(k.startswith("edges_state") for k in written)

    header = written["network_stats"].read_text().splitlines()[0].split(",")
    table1_set = header == ["state", "link_density", "network_density_W",
                            "network_density_rhoW", "rho_mean", "rho_std"]

    probs = np.loadtxt(written["state_probs"], delimiter=",", skiprows=1,
                       usecols=tuple(range(1, store.K + 1)))
    rows_sum = float(np.abs(probs.sum(axis=1) - 1).max())

    ok = (kinds_present and has_effects and has_edges and table1_set
          and rows_sum < 1e-10)
    _report(10, ok,
            f"all five artifact kinds emitted; network_stats carries the "
            f"full statistic set; smoothed rows sum to 1 within {rows_sum:.1e}")
