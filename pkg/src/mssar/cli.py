"""Command-line interface.

Subcommands: ``simulate`` (write a synthetic fixture panel), ``fit`` (run
the sampler and export draws + report), ``report`` (regenerate the report
from persisted draws), ``dic-scan`` (fit a range of regime counts and
tabulate the deviance criterion), and ``validate`` (schema checks only).
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import diagnostics, io, sampler
from .errors import MssarError
from .types import Hyperparams, SamplerConfig, TruthSpec
from .simulate import simulate_panel


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mssar",
        description="Regime-switching spatial autoregressive panel estimation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic fixture panel")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--n", type=int, default=8, help="number of units")
    sim.add_argument("--t", type=int, default=300, help="number of periods")
    sim.add_argument("--k", type=int, default=2, help="number of regimes")
    sim.add_argument("--m", type=int, default=2, help="number of covariates")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--rho", type=float, nargs="+", default=None,
                     help="per-regime spatial dependence (defaults spread over (0,1))")
    sim.add_argument("--link-prob", type=float, default=0.15)
    sim.add_argument("--sigma2", type=float, default=0.25)
    sim.add_argument("--stay-prob", type=float, default=0.95,
                     help="diagonal of the transition matrix")

    fit = sub.add_parser("fit", help="run the sampler on a panel")
    _common_run_flags(fit)
    fit.add_argument("--iters", type=int, default=None, help="total sweeps")
    fit.add_argument("--burn", type=int, default=None, help="burn-in sweeps")
    fit.add_argument("--thin", type=int, default=None)
    fit.add_argument("--seed", type=int, default=None)
    fit.add_argument("--k", type=int, default=None, help="number of regimes")

    rep = sub.add_parser("report", help="regenerate report from stored draws")
    _common_run_flags(rep)

    scan = sub.add_parser("dic-scan", help="fit a range of regime counts")
    _common_run_flags(scan)
    scan.add_argument("--iters", type=int, default=None)
    scan.add_argument("--burn", type=int, default=None)
    scan.add_argument("--thin", type=int, default=None)
    scan.add_argument("--seed", type=int, default=None)
    scan.add_argument("--k", default="1,2,3",
                      help="regime counts, e.g. '1,2,3' or '1-4'")

    val = sub.add_parser("validate", help="schema checks only")
    val.add_argument("--data", default=None)
    val.add_argument("--config", default=None)
    return parser


def _common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--data", default=None, help="panel CSV")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threshold", type=float, default=None,
                   help="edge inclusion threshold for hardening")


def _load_run_config(args) -> io.RunConfig:
    cfg = io.load_config(args.config) if args.config else io.RunConfig()
    hyper_updates = {}
    sampler_updates = {}
    if getattr(args, "k", None) is not None and args.command == "fit":
        hyper_updates["K"] = args.k
    if getattr(args, "threshold", None) is not None:
        hyper_updates["harden_threshold"] = args.threshold
    for flag, attr in (("iters", "n_iter"), ("burn", "n_burn"),
                       ("thin", "thin"), ("seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            sampler_updates[attr] = value
    hyper = replace(cfg.hyper, **hyper_updates) if hyper_updates else cfg.hyper
    samp = replace(cfg.sampler, **sampler_updates) if sampler_updates else cfg.sampler
    data = args.data or cfg.data
    out = args.out or cfg.out
    return io.RunConfig(hyper=hyper, sampler=samp, data=data, out=out)


def _require(value, name: str):
    if value is None:
        raise MssarError(f"missing required argument: {name}")
    return value


def _progress(stream):
    def hook(done: int, total: int):
        step = max(1, total // 20)
        if done % step == 0 or done == total:
            print(f"sweep {done}/{total}", file=stream)
    return hook


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    K = args.k
    rhos = np.asarray(args.rho, dtype=np.float64) if args.rho else \
        np.linspace(0.7, 0.2, K) if K > 1 else np.array([0.5])
    if rhos.shape != (K,):
        raise MssarError(f"--rho needs {K} values")
    stay = args.stay_prob
    Xi = np.full((K, K), (1.0 - stay) / (K - 1)) if K > 1 else np.ones((1, 1))
    np.fill_diagonal(Xi, stay if K > 1 else 1.0)
    rng = np.random.default_rng(args.seed)
    beta = np.round(rng.uniform(-1.0, 1.0, size=args.m), 2)
    truth = TruthSpec(N=args.n, T=args.t, K=K, Xi=Xi, rhos=rhos, beta=beta,
                      sigma2=args.sigma2, link_prob=args.link_prob,
                      seed=args.seed)
    data, s, omegas = simulate_panel(truth)
    io.write_panel_csv(data, out / "panel.csv")
    truth_payload = {
        "N": args.n, "T": args.t, "K": K,
        "Xi": Xi, "rhos": rhos, "beta": beta,
        "sigma2": args.sigma2, "link_prob": args.link_prob, "seed": args.seed,
        "states": (s + 1),
        "omegas": omegas,
    }
    (out / "truth.json").write_text(io.dumps(truth_payload) + "\n", encoding="utf-8")
    print(f"wrote {out / 'panel.csv'} and {out / 'truth.json'}")
    return 0


def cmd_fit(args) -> int:
    cfg = _load_run_config(args)
    data = io.load_panel_csv(_require(cfg.data, "--data"))
    out = Path(_require(cfg.out, "--out"))
    store = sampler.run_gibbs(data, cfg.hyper, cfg.sampler,
                              progress=_progress(sys.stderr))
    store = diagnostics.relabel_draws(store)
    io.write_draws(store, out / "draws")
    io.export_report(store, data, out / "report", cfg.hyper.harden_threshold)
    print(f"retained {store.n_draws} draws; report in {out / 'report'}")
    return 0


def cmd_report(args) -> int:
    cfg = _load_run_config(args)
    data = io.load_panel_csv(_require(cfg.data, "--data"))
    out = Path(_require(cfg.out, "--out"))
    store = io.read_draws(out / "draws")
    io.export_report(store, data, out / "report", cfg.hyper.harden_threshold)
    print(f"report regenerated in {out / 'report'}")
    return 0


def _parse_k_range(spec: str) -> list[int]:
    spec = spec.strip()
    if "-" in spec and "," not in spec:
        lo, hi = spec.split("-", 1)
        ks = list(range(int(lo), int(hi) + 1))
    else:
        ks = [int(tok) for tok in spec.split(",") if tok.strip()]
    if not ks or any(k < 1 for k in ks):
        raise MssarError(f"invalid K range: {spec!r}")
    return ks


def _dic_for_k(payload) -> tuple[int, float]:
    data_path, hyper, samp, k = payload
    data = io.load_panel_csv(data_path)
    if k == hyper.K:
        hyper_k = hyper
    else:
        hyper_k = replace(hyper, K=k, a_q=float(hyper.a_q[0]), b_q=float(hyper.b_q[0]))
    # regime-count specific seed: fixed offset from the base seed
    samp_k = replace(samp, seed=samp.seed + k)
    store = sampler.run_gibbs(data, hyper_k, samp_k)
    store = diagnostics.relabel_draws(store)
    return k, diagnostics.dic5(store, data, hyper_k.harden_threshold)


def cmd_dic_scan(args) -> int:
    cfg = _load_run_config(args)
    data_path = _require(cfg.data, "--data")
    out = Path(_require(cfg.out, "--out"))
    out.mkdir(parents=True, exist_ok=True)
    ks = _parse_k_range(args.k)
    jobs = [(data_path, cfg.hyper, cfg.sampler, k) for k in ks]
    threads = int(os.environ.get("MSSAR_THREADS", "1"))
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            results = list(pool.map(_dic_for_k, jobs))
    else:
        results = [_dic_for_k(job) for job in jobs]
    results.sort(key=lambda kv: kv[0])
    lines = ["k,dic5"] + [f"{k},{io.fmt_float(v)}" for k, v in results]
    (out / "dic_scan.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for k, v in results:
        print(f"K={k}  DIC5={v:.3f}")
    best = min(results, key=lambda kv: kv[1])[0]
    print(f"lowest DIC5 at K={best}")
    return 0


def cmd_validate(args) -> int:
    checked = False
    if args.data:
        data = io.load_panel_csv(args.data)
        print(f"data ok: T={data.T} N={data.N} M={data.M}")
        checked = True
    if args.config:
        io.load_config(args.config)
        print("config ok")
        checked = True
    if not checked:
        raise MssarError("nothing to validate: pass --data and/or --config")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "report": cmd_report,
    "dic-scan": cmd_dic_scan,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except MssarError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
