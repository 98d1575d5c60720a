"""Benchmark the compiled kernel core against the pure-NumPy fallback.

Times the two hot sampler kernels on a production-scale workload (default
N=39 units, T=246 periods, K=3 regimes) and a desk-scale one, then reports
per-call times and speedups. Run:

    python benchmarks/bench_kernels.py [--n N] [--t T] [--k K] [--repeat R]
"""

import argparse
import time

import numpy as np

from mssar import row_normalize
from mssar.kernels import pure

try:
    from mssar.kernels import _core as compiled
except ImportError:
    compiled = None


def make_workload(rng, N, T, K, link_prob=0.08, rho=0.5, sigma2=0.3):
    s = rng.integers(0, K, size=T)
    tk = int((s == 0).sum())
    omega = (rng.random((N, N)) < link_prob).astype(np.int8)
    np.fill_diagonal(omega, 0)
    W = row_normalize(omega)
    yk = rng.normal(size=(N, tk))
    zb = 0.2 * rng.normal(size=(N, tk))
    Q = rng.uniform(0.05, 0.95, size=(N, N))
    loglik = np.ascontiguousarray(3.0 * rng.normal(size=(T, K)))
    Xi = rng.dirichlet(np.ones(K) * 5, size=K)
    pi0 = np.full(K, 1.0 / K)
    return dict(omega=omega, W=W, yk=yk, zb=zb, Q=Q, rho=rho, sigma2=sigma2,
                loglik=loglik, Xi=Xi, pi0=pi0, N=N, T=T)


def time_omega_sweep(impl, work, rng, repeat):
    N = work["N"]
    with np.errstate(divide="ignore"):
        log_q = np.log(work["Q"])
        log_1mq = np.log1p(-work["Q"])
    times = []
    for _ in range(repeat):
        omega = work["omega"].copy()
        W = work["W"].copy()
        sinv, logdet, resid = pure.build_filter_state(W, work["rho"],
                                                      work["yk"], work["zb"])
        uniforms = rng.random(N * (N - 1))
        t0 = time.perf_counter()
        impl.omega_sweep(omega, W, sinv, logdet, resid, work["yk"], work["zb"],
                         work["rho"], work["sigma2"], log_q, log_1mq,
                         uniforms, 250)
        times.append(time.perf_counter() - t0)
    return min(times)


def time_ffbs(impl, work, rng, repeat):
    times = []
    for _ in range(repeat):
        uniforms = rng.random(work["T"])
        t0 = time.perf_counter()
        impl.ffbs(work["loglik"], work["Xi"], work["pi0"], uniforms)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=39)
    parser.add_argument("--t", type=int, default=246)
    parser.add_argument("--k", type=int, default=3)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if compiled is None:
        print("compiled extension not built; benchmarking pure backend only")

    scenarios = [("desk (N=8, T=300, K=2)", 8, 300, 2),
                 (f"paper scale (N={args.n}, T={args.t}, K={args.k})",
                  args.n, args.t, args.k)]
    print(f"{'scenario':<34} {'kernel':<12} {'pure':>10} {'compiled':>10} {'speedup':>8}")
    for label, N, T, K in scenarios:
        rng = np.random.default_rng(0)
        work = make_workload(rng, N, T, K)
        for kernel, timer in (("omega_sweep", time_omega_sweep),
                              ("ffbs", time_ffbs)):
            t_pure = timer(pure, work, np.random.default_rng(1), args.repeat)
            if compiled is not None:
                t_comp = timer(compiled, work, np.random.default_rng(1), args.repeat)
                print(f"{label:<34} {kernel:<12} {t_pure * 1e3:>8.2f}ms "
                      f"{t_comp * 1e3:>8.2f}ms {t_pure / t_comp:>7.1f}x")
            else:
                print(f"{label:<34} {kernel:<12} {t_pure * 1e3:>8.2f}ms {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
