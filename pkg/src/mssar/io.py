"""Data ingestion, configuration, draw persistence, and report export.

All writers are deterministic: stable field order, LF newlines, and floats
rendered at 17 significant digits (full round-trip precision), so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from . import diagnostics, model
from .errors import ConfigError, DataError
from .types import DrawStore, Hyperparams, PanelData, SamplerConfig

_PERIOD_RE = re.compile(r"^\d{4}-\d{2}(-\d{2})?$")


def fmt_float(x: float) -> str:
    """Render a float at 17 significant digits (round-trip exact)."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def dumps(value) -> str:
    """JSON text with fixed float formatting and insertion-order keys."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(float(value))
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return "null"
    if isinstance(value, np.ndarray):
        return dumps(value.tolist())
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{dumps(v)}" for k, v in value.items()) + "}"
    raise TypeError(f"cannot serialize {type(value)!r}")


# ---------------------------------------------------------------------------
# Panel CSV (long format: period,unit,y,z1..zM[,weight])

def load_panel_csv(path) -> PanelData:
    """Load a long-format panel CSV into a PanelData.

    Periods must be ISO-8601 date strings (sorted lexicographically); units
    are ordered by first appearance; the (period, unit) grid must be
    complete, with finite values throughout. Malformed input is rejected,
    never repaired.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        M, has_weight = _check_header(path, header)
        n_cols = len(header)

        units: list[str] = []
        unit_pos: dict[str, int] = {}
        rows: dict[tuple[str, str], tuple] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise DataError(f"{path}:{lineno}: expected {n_cols} fields, got {len(row)}")
            period, unit = row[0], row[1]
            if not _PERIOD_RE.match(period):
                raise DataError(f"{path}:{lineno}: period {period!r} is not ISO-8601")
            key = (period, unit)
            if key in rows:
                raise DataError(f"{path}:{lineno}: duplicate cell (period={period}, unit={unit})")
            values = _parse_floats(path, lineno, row[2:])
            rows[key] = values
            if unit not in unit_pos:
                unit_pos[unit] = len(units)
                units.append(unit)

    if not rows:
        raise DataError(f"{path}: no data rows")
    periods = sorted({p for p, _ in rows})
    T, N = len(periods), len(units)
    Y = np.empty((T, N))
    Z = np.empty((T, N, M))
    weights = np.empty((T, N)) if has_weight else None
    for t, period in enumerate(periods):
        for i, unit in enumerate(units):
            cell = rows.pop((period, unit), None)
            if cell is None:
                raise DataError(f"{path}: missing cell (period={period}, unit={unit})")
            Y[t, i] = cell[0]
            Z[t, i, :] = cell[1:1 + M]
            if has_weight:
                w = cell[1 + M]
                if w < 0:
                    raise DataError(f"{path}: negative weight at (period={period}, unit={unit})")
                weights[t, i] = w
    if rows:
        (period, unit) = next(iter(rows))
        raise DataError(f"{path}: unexpected extra cell (period={period}, unit={unit})")
    try:
        return PanelData(Y=Y, Z=Z, basket_weights=weights,
                         unit_labels=units, period_labels=periods)
    except ValueError as e:
        raise DataError(f"{path}: {e}") from e


def _check_header(path, header) -> tuple[int, bool]:
    if len(header) < 3 or header[0] != "period" or header[1] != "unit" or header[2] != "y":
        raise DataError(f"{path}: header must start with period,unit,y")
    rest = header[3:]
    has_weight = bool(rest) and rest[-1] == "weight"
    zcols = rest[:-1] if has_weight else rest
    expected = [f"z{m + 1}" for m in range(len(zcols))]
    if zcols != expected:
        raise DataError(f"{path}: covariate columns must be z1..zM, got {zcols}")
    return len(zcols), has_weight


def _parse_floats(path, lineno, fields):
    values = []
    for raw in fields:
        try:
            x = float(raw)
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric value {raw!r}") from None
        if not math.isfinite(x):
            raise DataError(f"{path}:{lineno}: non-finite value {raw!r}")
        values.append(x)
    return tuple(values)


def write_panel_csv(data: PanelData, path) -> None:
    """Write a PanelData in the long-format schema read by load_panel_csv."""
    path = Path(path)
    M = data.M
    has_weight = data.basket_weights is not None
    cols = ["period", "unit", "y"] + [f"z{m + 1}" for m in range(M)]
    if has_weight:
        cols.append("weight")
    lines = [",".join(cols)]
    for t, period in enumerate(data.period_labels):
        for i, unit in enumerate(data.unit_labels):
            parts = [period, unit, fmt_float(data.Y[t, i])]
            parts += [fmt_float(data.Z[t, i, m]) for m in range(M)]
            if has_weight:
                parts.append(fmt_float(data.basket_weights[t, i]))
            lines.append(",".join(parts))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Run configuration (JSON)

@dataclass
class RunConfig:
    """Everything a CLI run needs: priors, chain settings, and paths."""

    hyper: Hyperparams = field(default_factory=Hyperparams)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    data: Optional[str] = None
    out: Optional[str] = None


_HYPER_KEYS = {
    "k": "K", "a_q": "a_q", "b_q": "b_q", "a_rho": "a_rho", "b_rho": "b_rho",
    "a_xi": "a_xi", "mu_beta": "mu_beta", "sigma_beta": "sigma_beta",
    "a_sigma": "a_sigma", "b_sigma": "b_sigma", "grid_size": "grid_size",
    "threshold": "harden_threshold",
}
_SAMPLER_KEYS = {
    "n_iter": "n_iter", "n_burn": "n_burn", "thin": "thin", "seed": "seed",
    "rho_grid": "rho_grid", "init": "init_strategy",
}
_PATH_KEYS = {"data", "out"}


def config_from_dict(raw: dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON object; unknown keys rejected."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - set(_HYPER_KEYS) - set(_SAMPLER_KEYS) - _PATH_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    hyper_kwargs = {}
    for key, attr in _HYPER_KEYS.items():
        if key in raw:
            value = raw[key]
            if isinstance(value, list):
                value = np.asarray(value, dtype=np.float64)
            hyper_kwargs[attr] = value
    sampler_kwargs = {}
    for key, attr in _SAMPLER_KEYS.items():
        if key in raw:
            value = raw[key]
            if key == "rho_grid":
                value = np.asarray(value, dtype=np.float64)
            sampler_kwargs[attr] = value
    try:
        hyper = Hyperparams(**hyper_kwargs)
        sampler_cfg = SamplerConfig(**sampler_kwargs)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e)) from e
    return RunConfig(hyper=hyper, sampler=sampler_cfg,
                     data=raw.get("data"), out=raw.get("out"))


def load_config(path) -> RunConfig:
    """Parse a JSON config file; an empty object yields all defaults."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON: {e}") from e
    try:
        return config_from_dict(raw)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from e


def serialize_config(cfg: RunConfig) -> str:
    """Canonical JSON for a RunConfig (stable key order, 17g floats)."""
    h, s = cfg.hyper, cfg.sampler
    payload: Dict[str, object] = {
        "k": h.K,
        "a_q": h.a_q, "b_q": h.b_q,
        "a_rho": h.a_rho, "b_rho": h.b_rho,
        "a_xi": h.a_xi,
        "mu_beta": h.mu_beta, "sigma_beta": h.sigma_beta,
        "a_sigma": h.a_sigma, "b_sigma": h.b_sigma,
        "grid_size": h.grid_size,
        "threshold": h.harden_threshold,
        "n_iter": s.n_iter, "n_burn": s.n_burn, "thin": s.thin,
        "seed": s.seed, "init": s.init_strategy,
    }
    if s.rho_grid is not None:
        payload["rho_grid"] = s.rho_grid
    if cfg.data is not None:
        payload["data"] = cfg.data
    if cfg.out is not None:
        payload["out"] = cfg.out
    return dumps(payload)


# ---------------------------------------------------------------------------
# Draw persistence (JSON lines + manifest)

_FAMILY_FILES = ("states", "omegas", "rhos", "qs", "xis", "betas",
                 "sigma2s", "logliks")


def write_draws(store: DrawStore, out_dir) -> None:
    """Persist a DrawStore: one JSON-lines file per unknown family plus a
    manifest with the seed, config hash, and retained iteration indices."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    R = store.n_draws
    manifest = {
        "seed": store.seed,
        "config_hash": store.config_hash,
        "n_draws": R,
        "iterations": store.iterations,
        "dims": {
            "T": int(store.states.shape[1]) if R else 0,
            "K": int(store.rhos.shape[1]) if R else 0,
            "N": int(store.omegas.shape[2]) if R else 0,
            "M": int(store.betas.shape[1]) if R else 0,
        },
        "files": {name: R for name in _FAMILY_FILES} if R else {},
    }
    (out / "manifest.json").write_text(dumps(manifest) + "\n", encoding="utf-8")
    if R == 0:
        return
    payloads = {
        "states": store.states + 1,  # serialized labels are 1-based
        "omegas": store.omegas,
        "rhos": store.rhos,
        "qs": store.qs,
        "xis": store.xis,
        "betas": store.betas,
        "sigma2s": store.sigma2s,
        "logliks": store.logliks,
    }
    for name, arr in payloads.items():
        lines = [dumps(arr[r]) for r in range(R)]
        (out / f"{name}.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_draws(in_dir) -> DrawStore:
    """Load a DrawStore written by :func:`write_draws`.

    Row counts are validated against the manifest; any mismatch (missing or
    truncated file) is a hard error.
    """
    src = Path(in_dir)
    manifest_path = src / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"{src}: missing manifest.json")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    R = int(manifest["n_draws"])
    dims = manifest["dims"]
    T, K, N, M = (int(dims[d]) for d in ("T", "K", "N", "M"))
    if R == 0:
        return DrawStore(
            states=np.zeros((0, T), dtype=np.int64),
            omegas=np.zeros((0, K, N, N), dtype=np.int8),
            rhos=np.zeros((0, K)), qs=np.zeros((0, K, N, N)),
            xis=np.zeros((0, K, K)), betas=np.zeros((0, M)),
            sigma2s=np.zeros(0), logliks=np.zeros(0),
            iterations=np.zeros(0, dtype=np.int64),
            seed=int(manifest["seed"]), config_hash=str(manifest["config_hash"]),
        )
    raw = {}
    for name in _FAMILY_FILES:
        fpath = src / f"{name}.jsonl"
        if not fpath.exists():
            raise DataError(f"{src}: missing {name}.jsonl listed in manifest")
        lines = fpath.read_text(encoding="utf-8").splitlines()
        expected = int(manifest["files"][name])
        if len(lines) != expected:
            raise DataError(
                f"{src}/{name}.jsonl: {len(lines)} rows, manifest says {expected}")
        raw[name] = [json.loads(line) for line in lines]
    return DrawStore(
        states=np.asarray(raw["states"], dtype=np.int64) - 1,
        omegas=np.asarray(raw["omegas"], dtype=np.int8),
        rhos=np.asarray(raw["rhos"], dtype=np.float64),
        qs=np.asarray(raw["qs"], dtype=np.float64),
        xis=np.asarray(raw["xis"], dtype=np.float64),
        betas=np.asarray(raw["betas"], dtype=np.float64).reshape(R, M),
        sigma2s=np.asarray(raw["sigma2s"], dtype=np.float64),
        logliks=np.asarray(raw["logliks"], dtype=np.float64),
        iterations=np.asarray(manifest["iterations"], dtype=np.int64),
        seed=int(manifest["seed"]),
        config_hash=str(manifest["config_hash"]),
    )


# ---------------------------------------------------------------------------
# Report export

def export_report(store: DrawStore, data: PanelData, out_dir,
                  threshold: float = 0.68) -> dict:
    """Emit the plot-ready report artifacts for a (relabeled) draw store.

    Writes ``state_probs.csv`` (smoothed regime probabilities),
    ``effects_state{k}.csv`` (time-averaged direct/spillover/total effects
    per unit), ``network_stats.csv`` (link density, network density of W and
    rho*W, rho posterior mean/std per regime), ``edges_state{k}.csv``
    (hardened edges with inclusion probabilities), and ``summary.json``.
    Returns the paths written, keyed by artifact name.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    K = store.K
    written = {}

    smoothed = diagnostics.smoothed_state_probabilities(store, data)
    lines = ["period," + ",".join(f"state_{k + 1}" for k in range(K))]
    for t, period in enumerate(data.period_labels):
        lines.append(period + "," + ",".join(fmt_float(x) for x in smoothed[t]))
    path = out / "state_probs.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written["state_probs"] = path

    inclusion = diagnostics.edge_inclusion(store)
    hardened = diagnostics.harden_adjacency(inclusion, threshold)
    rho_mean = store.rhos.mean(axis=0)
    rho_std = store.rhos.std(axis=0)

    stats_lines = ["state,link_density,network_density_W,network_density_rhoW,"
                   "rho_mean,rho_std"]
    for k in range(K):
        W = model.row_normalize(hardened[k])
        stats_lines.append(",".join([
            str(k + 1),
            fmt_float(diagnostics.link_density(hardened[k])),
            fmt_float(diagnostics.network_density(W)),
            fmt_float(diagnostics.network_density(rho_mean[k] * W)),
            fmt_float(rho_mean[k]),
            fmt_float(rho_std[k]),
        ]))
    path = out / "network_stats.csv"
    path.write_text("\n".join(stats_lines) + "\n", encoding="utf-8")
    written["network_stats"] = path

    for k in range(K):
        edge_lines = ["source,target,inclusion"]
        for i in range(data.N):
            for j in range(data.N):
                if hardened[k, i, j]:
                    edge_lines.append(
                        f"{data.unit_labels[i]},{data.unit_labels[j]},"
                        f"{fmt_float(inclusion[k, i, j])}")
        path = out / f"edges_state{k + 1}.csv"
        path.write_text("\n".join(edge_lines) + "\n", encoding="utf-8")
        written[f"edges_state{k + 1}"] = path

    report = diagnostics.state_averaged_effects(store, data, threshold,
                                                smoothed=smoothed)
    for k, eff in sorted(report.per_state.items()):
        eff_lines = ["unit,direct,spillover,total"]
        for i, unit in enumerate(data.unit_labels):
            eff_lines.append(",".join([
                unit,
                fmt_float(eff.mean_delta[i]),
                fmt_float(eff.mean_zeta[i]),
                fmt_float(eff.mean_tau[i]),
            ]))
        path = out / f"effects_state{k + 1}.csv"
        path.write_text("\n".join(eff_lines) + "\n", encoding="utf-8")
        written[f"effects_state{k + 1}"] = path

    summary = {
        "n_draws": store.n_draws,
        "seed": store.seed,
        "config_hash": store.config_hash,
        "dic5": diagnostics.dic5(store, data, threshold),
        "posterior": diagnostics.posterior_summary(store),
    }
    path = out / "summary.json"
    path.write_text(dumps(summary) + "\n", encoding="utf-8")
    written["summary"] = path
    return written
