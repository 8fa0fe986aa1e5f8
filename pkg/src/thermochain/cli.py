"""Command line front end.

Subcommands: chain (coefficients only), evolve (single run), sweep (beta x
epsilon grid, parallel), spectrum (bath spectrum from a checkpoint), rates
(exponential fits over sweep outputs).

Configuration is an INI file with sections [model], [bath], [chain], [tdvp],
[output]; any value can be overridden on the command line with repeatable
--set section.key=value flags.  Every run directory receives a meta.json
sidecar with the fully resolved configuration, the package version and the
chain-coefficient digest, so outputs are reproducible from their metadata.

Output tree: OUT/<run-id>/{observables.csv, spectrum.csv, chain.csv,
meta.json, checkpoints/}; chain caches live in OUT/chains/.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import multiprocessing
import os
import shutil
import sys
from pathlib import Path

from . import __version__
from .chainmap import cached_chain, stieltjes_recurrence, transform_kernel
from .errors import InvalidInputError, NumericalFailureError
from .models import ModelKind, ModelSpec
from .observables import (
    RunResult,
    bath_spectrum,
    chain_correlation_matrix,
    physical_occupation,
    save_correlation,
)
from .ratefit import DEFAULT_TAU, fit_rate
from .spectral import SpectralDensity, thermalize
from .tdvp import TdvpConfig, run_evolution
from .tensor import load_checkpoint

__all__ = ["main", "resolve_config", "ConfigError"]


class ConfigError(Exception):
    """A config key failed validation; message names the key and constraint."""


_MODEL_ALPHA_DEFAULTS = {"ibm": 0.1, "sbm": 0.1, "et": 0.8}

DEFAULTS: dict[str, dict[str, str]] = {
    "model": {"kind": "ibm", "omega_0": "0.2", "epsilon": "0.2"},
    "bath": {"alpha": "", "s": "1.0", "omega_c": "1.0", "beta": "10", "table": ""},
    "chain": {"n_sites": "200", "nodes": "0"},
    "tdvp": {
        "dt": "0.05",
        "t_final": "40",
        "max_bond": "4",
        "fock_dim": "6",
        "growth_threshold": "1e-10",
        "growth_buffer": "10",
        "observable_stride": "4",
        "checkpoint_stride": "200",
        "krylov_tol": "1e-12",
    },
    "output": {"run_id": "", "correlation_times": "", "spectrum_nodes": "800"},
}


def _parse_float(section, key, raw, positive=False, allow_inf=False):
    try:
        val = math.inf if raw.strip().lower() in ("inf", "infinity") else float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected a number, got '{raw}'") from None
    if math.isinf(val) and not allow_inf:
        raise ConfigError(f"{section}.{key}: must be finite")
    if positive and not val > 0:
        raise ConfigError(f"{section}.{key}: must be > 0")
    return val


def _parse_int(section, key, raw, minimum=None):
    try:
        val = int(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected an integer, got '{raw}'") from None
    if minimum is not None and val < minimum:
        raise ConfigError(f"{section}.{key}: must be >= {minimum}")
    return val


def resolve_config(config_path=None, overrides=()) -> dict:
    """Merge defaults, the INI file and --set overrides into a typed dict."""
    parser = configparser.ConfigParser()
    parser.read_dict(DEFAULTS)
    if config_path is not None:
        if not Path(config_path).exists():
            raise ConfigError(f"config file not found: {config_path}")
        parser.read(config_path)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects section.key=value, got '{item}'")
        target, value = item.split("=", 1)
        section, key = target.split(".", 1)
        if section not in DEFAULTS or key not in DEFAULTS[section]:
            raise ConfigError(f"unknown config key '{section}.{key}'")
        parser.set(section, key, value)

    kind = parser.get("model", "kind").strip().lower()
    if kind not in _MODEL_ALPHA_DEFAULTS:
        raise ConfigError("model.kind: must be one of ibm, sbm, et")
    alpha_raw = parser.get("bath", "alpha").strip()
    alpha = (
        _MODEL_ALPHA_DEFAULTS[kind]
        if not alpha_raw
        else _parse_float("bath", "alpha", alpha_raw, positive=True)
    )

    corr_raw = parser.get("output", "correlation_times").strip()
    correlation_times = []
    if corr_raw:
        for piece in corr_raw.split(","):
            correlation_times.append(_parse_float("output", "correlation_times", piece))

    cfg = {
        "model": {
            "kind": kind,
            "omega_0": _parse_float("model", "omega_0", parser.get("model", "omega_0")),
            "epsilon": _parse_float("model", "epsilon", parser.get("model", "epsilon")),
        },
        "bath": {
            "alpha": alpha,
            "s": _parse_float("bath", "s", parser.get("bath", "s"), positive=True),
            "omega_c": _parse_float("bath", "omega_c", parser.get("bath", "omega_c"), positive=True),
            "beta": _parse_float("bath", "beta", parser.get("bath", "beta"), positive=True, allow_inf=True),
            "table": parser.get("bath", "table").strip(),
        },
        "chain": {
            "n_sites": _parse_int("chain", "n_sites", parser.get("chain", "n_sites"), minimum=1),
            "nodes": _parse_int("chain", "nodes", parser.get("chain", "nodes"), minimum=0),
        },
        "tdvp": {
            "dt": _parse_float("tdvp", "dt", parser.get("tdvp", "dt"), positive=True),
            "t_final": _parse_float("tdvp", "t_final", parser.get("tdvp", "t_final"), positive=True),
            "max_bond": _parse_int("tdvp", "max_bond", parser.get("tdvp", "max_bond"), minimum=1),
            "fock_dim": _parse_int("tdvp", "fock_dim", parser.get("tdvp", "fock_dim"), minimum=2),
            "growth_threshold": _parse_float(
                "tdvp", "growth_threshold", parser.get("tdvp", "growth_threshold"), positive=True
            ),
            "growth_buffer": _parse_int("tdvp", "growth_buffer", parser.get("tdvp", "growth_buffer"), minimum=1),
            "observable_stride": _parse_int(
                "tdvp", "observable_stride", parser.get("tdvp", "observable_stride"), minimum=1
            ),
            "checkpoint_stride": _parse_int(
                "tdvp", "checkpoint_stride", parser.get("tdvp", "checkpoint_stride"), minimum=0
            ),
            "krylov_tol": _parse_float("tdvp", "krylov_tol", parser.get("tdvp", "krylov_tol"), positive=True),
        },
        "output": {
            "run_id": parser.get("output", "run_id").strip(),
            "correlation_times": correlation_times,
            "spectrum_nodes": _parse_int(
                "output", "spectrum_nodes", parser.get("output", "spectrum_nodes"), minimum=16
            ),
        },
    }
    if cfg["tdvp"]["t_final"] < cfg["tdvp"]["dt"]:
        raise ConfigError("tdvp.t_final: must be at least tdvp.dt")
    return cfg


def _config_digest(cfg: dict) -> str:
    import hashlib

    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:8]


def _run_id(cfg: dict) -> str:
    if cfg["output"]["run_id"]:
        return cfg["output"]["run_id"]
    m, b = cfg["model"], cfg["bath"]
    beta = "inf" if math.isinf(b["beta"]) else f"{b['beta']:g}"
    parts = [m["kind"], f"beta{beta}"]
    if m["kind"] == "et":
        parts.append(f"eps{m['epsilon']:g}")
    parts.append(_config_digest(cfg))
    return "_".join(parts)


def _build_objects(cfg: dict):
    bath = cfg["bath"]
    if bath["table"]:
        J = SpectralDensity.from_csv(bath["table"])
    else:
        J = SpectralDensity.ohmic(alpha=bath["alpha"], s=bath["s"], omega_c=bath["omega_c"])
    Jb = thermalize(J, bath["beta"])
    model = ModelSpec(
        kind=ModelKind(cfg["model"]["kind"]),
        omega_0=cfg["model"]["omega_0"],
        epsilon=cfg["model"]["epsilon"],
        alpha=bath["alpha"],
        omega_c=bath["omega_c"],
    )
    tdvp_cfg = TdvpConfig(**cfg["tdvp"])
    return J, Jb, model, tdvp_cfg


def _write_meta(run_dir: Path, cfg: dict, chain_hash: str) -> None:
    meta = {"config": cfg, "version": __version__, "chain_hash": chain_hash}
    with open(run_dir / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_meta(run_dir: Path) -> dict:
    path = run_dir / "meta.json"
    if not path.exists():
        raise InvalidInputError(f"{run_dir} has no meta.json")
    with open(path) as fh:
        return json.load(fh)


def cmd_chain(args) -> int:
    cfg = resolve_config(args.config, args.set)
    _, Jb, _, _ = _build_objects(cfg)
    nodes = cfg["chain"]["nodes"] or None
    chain, path, hit = cached_chain(Jb, cfg["chain"]["n_sites"], Path(args.out) / "chains", nodes=nodes)
    status = "hit" if hit else "miss"
    print(f"chain cache {status}: {path} (kappa={chain.kappa:.6g}, N={chain.n_sites})")
    return 0


def _evolve_from_config(cfg: dict, out_dir: str, resume: bool = False) -> Path:
    out = Path(out_dir)
    run_dir = out / _run_id(cfg)
    run_dir.mkdir(parents=True, exist_ok=True)
    J, Jb, model, tdvp_cfg = _build_objects(cfg)
    nodes = cfg["chain"]["nodes"] or None
    chain, chain_path, _ = cached_chain(Jb, cfg["chain"]["n_sites"], out / "chains", nodes=nodes)
    shutil.copyfile(chain_path, run_dir / "chain.csv")
    shutil.copyfile(chain_path.with_suffix(".json"), run_dir / "chain.json")
    _write_meta(run_dir, cfg, chain.source_hash)

    start = None
    if resume:
        checkpoints = sorted((run_dir / "checkpoints").glob("step_*.mps"))
        if not checkpoints:
            raise InvalidInputError(f"--resume requested but {run_dir} has no checkpoints")
        psi, t0, _ = load_checkpoint(checkpoints[-1])
        start = (psi, t0)
        print(f"resuming {run_dir.name} from t={t0:g}")

    result = run_evolution(
        model,
        chain,
        tdvp_cfg,
        stream_path=run_dir / "observables.csv",
        checkpoint_dir=(run_dir / "checkpoints") if tdvp_cfg.checkpoint_stride else None,
        correlation_times=cfg["output"]["correlation_times"],
        start=start,
        metadata={"run_id": run_dir.name},
    )
    for t, cmat in result.correlations.items():
        save_correlation(run_dir / f"correlation_t{t:g}.bin", cmat, t)
    return run_dir


def _config_to_overrides(cfg: dict) -> list[str]:
    """Flatten a resolved config back into --set strings (for resume merging)."""
    out = []
    for section, entries in cfg.items():
        for key, val in entries.items():
            if key == "correlation_times":
                val = ",".join(f"{v:g}" for v in val)
            elif isinstance(val, float) and math.isinf(val):
                val = "inf"
            out.append(f"{section}.{key}={val}")
    return out


def cmd_evolve(args) -> int:
    if args.resume:
        if not args.run:
            raise InvalidInputError("--resume needs --run pointing at the run directory")
        run_dir = Path(args.run)
        stored = _load_meta(run_dir)["config"]
        cfg = resolve_config(None, _config_to_overrides(stored) + list(args.set))
        cfg["output"]["run_id"] = run_dir.name
        out_dir = str(run_dir.parent)
    else:
        cfg = resolve_config(args.config, args.set)
        out_dir = args.out
    run_dir = _evolve_from_config(cfg, out_dir, resume=args.resume)
    print(f"run complete: {run_dir}")
    return 0


def _sweep_job(payload):
    cfg, out_dir = payload
    run_dir = _evolve_from_config(cfg, out_dir)
    return str(run_dir)


def cmd_sweep(args) -> int:
    base = resolve_config(args.config, args.set)
    betas = [
        _parse_float("sweep", "betas", piece, positive=True, allow_inf=True)
        for piece in args.betas.split(",")
    ]
    epsilons = (
        [_parse_float("sweep", "epsilons", piece) for piece in args.epsilons.split(",")]
        if args.epsilons
        else [base["model"]["epsilon"]]
    )
    jobs = []
    for beta in betas:
        for eps in epsilons:
            cfg = json.loads(json.dumps(base))  # deep copy, keeps plain types
            cfg["bath"]["beta"] = beta
            cfg["model"]["epsilon"] = eps
            cfg["output"]["run_id"] = ""
            jobs.append((cfg, args.out))
    # precompute chain caches serially so parallel jobs only read them
    for cfg, _ in jobs:
        _, Jb, _, _ = _build_objects(cfg)
        cached_chain(Jb, cfg["chain"]["n_sites"], Path(args.out) / "chains",
                     nodes=cfg["chain"]["nodes"] or None)
    n_workers = max(1, min(args.jobs or os.cpu_count() or 1, len(jobs)))
    if n_workers == 1:
        run_dirs = [_sweep_job(j) for j in jobs]
    else:
        with multiprocessing.Pool(n_workers) as pool:
            run_dirs = pool.map(_sweep_job, jobs)
    for rd in run_dirs:
        print(f"run complete: {rd}")
    _write_rates_table(run_dirs, Path(args.out) / "rates.csv", args.tau)
    return 0


def cmd_spectrum(args) -> int:
    run_dir = Path(args.run)
    meta = _load_meta(run_dir)
    cfg = meta["config"]
    _, Jb, _, _ = _build_objects(cfg)
    if args.checkpoint:
        ckpt = Path(args.checkpoint)
    else:
        checkpoints = sorted((run_dir / "checkpoints").glob("step_*.mps"))
        if not checkpoints:
            raise InvalidInputError(f"{run_dir} has no checkpoints to build a spectrum from")
        ckpt = checkpoints[-1]
    psi, t, _ = load_checkpoint(ckpt)
    n_modes = psi.n_sites - 1
    cmat = chain_correlation_matrix(psi)
    save_correlation(run_dir / f"correlation_t{t:g}.bin", cmat, t)
    nodes = cfg["chain"]["nodes"] or None
    rc = stieltjes_recurrence(Jb, n_modes, nodes if nodes and nodes >= 4 * n_modes else None)
    kernel = transform_kernel(Jb, rc, nodes=cfg["output"]["spectrum_nodes"])
    spec = bath_spectrum(cmat, kernel)
    if not math.isinf(Jb.beta):
        spec = physical_occupation(spec)
    spec.to_csv(run_dir / "spectrum.csv")
    print(f"spectrum written: {run_dir / 'spectrum.csv'} (snapshot t={t:g})")
    return 0


def _write_rates_table(run_dirs, path: Path, tau: float) -> int:
    import csv as _csv

    rows = []
    for rd in map(Path, run_dirs):
        obs = rd / "observables.csv"
        if not obs.exists():
            print(f"warning: skipping {rd} (no observables.csv)", file=sys.stderr)
            continue
        meta = _load_meta(rd)
        result = RunResult.from_csv(obs)
        try:
            gamma, rmse = fit_rate(result.times, result.sigma_x, tau=tau)
        except InvalidInputError as exc:
            print(f"warning: skipping {rd.name}: {exc}", file=sys.stderr)
            continue
        rows.append(
            (meta["config"]["model"]["epsilon"], meta["config"]["bath"]["beta"], gamma, rmse, tau)
        )
    if not rows:
        raise InvalidInputError("no fit-able runs found for the rates table")
    rows.sort(key=lambda r: (r[0], r[1] if not math.isinf(r[1]) else 1e300))
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["epsilon", "beta", "gamma", "rmse", "tau"])
        for eps, beta, gamma, rmse, t in rows:
            writer.writerow([f"{eps:g}", f"{beta:g}", f"{gamma:.10e}", f"{rmse:.4e}", f"{t:g}"])
    print(f"rates table written: {path} ({len(rows)} rows)")
    return len(rows)


def cmd_rates(args) -> int:
    parent = Path(args.runs)
    run_dirs = sorted(d for d in parent.iterdir() if (d / "meta.json").exists())
    if not run_dirs:
        raise InvalidInputError(f"no run directories with meta.json under {parent}")
    _write_rates_table(run_dirs, Path(args.out) / "rates.csv", args.tau)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="thermochain", description=__doc__)
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--set", action="append", default=[], metavar="section.key=value",
                       help="override a config value (repeatable)")
        p.add_argument("--out", default="out", help="output directory (default: out)")

    p = sub.add_parser("chain", help="compute or reuse cached chain coefficients")
    common(p)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("evolve", help="run a single evolution")
    common(p)
    p.add_argument("--resume", action="store_true", help="continue from the latest checkpoint")
    p.add_argument("--run", default=None, help="existing run directory (required with --resume)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("sweep", help="run a beta x epsilon grid in parallel")
    common(p)
    p.add_argument("--betas", required=True, help="comma-separated inverse temperatures")
    p.add_argument("--epsilons", default="", help="comma-separated tunneling couplings")
    p.add_argument("--jobs", type=int, default=0, help="worker processes (default: cores)")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="transient cutoff for rate fits")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("spectrum", help="bath occupation spectrum from a checkpoint")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--checkpoint", default=None, help="specific checkpoint file")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("rates", help="fit rates over existing run directories")
    p.add_argument("--runs", required=True, help="parent directory of run directories")
    p.add_argument("--out", default="out", help="output directory for rates.csv")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="transient cutoff for rate fits")
    p.set_defaults(func=cmd_rates)
    return top


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InvalidInputError, NumericalFailureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
