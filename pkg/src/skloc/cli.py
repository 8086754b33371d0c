"""Command-line front end.

Subcommands: sample, se-table, verify, chaos, stability, quality, bench.
Settings come from built-in defaults, then an optional TOML/JSON file given
with --config, then explicit flags. Exit status: 0 success, 2 invalid
configuration, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .disorder import load_matrix, sample_goe
from .experiments import (Curve, RunRecord, run_chaos, run_sampling_quality, run_stability,
                          write_curves_csv, write_record)
from .rng import check_seed
from .sampler import ConfigError, RunConfig, localize, matvec_count, sample
from .state_evolution import build_schedule
from .tap import DEFAULT_ETA

RUN_DEFAULTS = {"delta": 0.05, "L": 100, "kamp": 25, "kngd": 50, "eta": DEFAULT_ETA}

DEFAULTS = {
    "sample": {"beta": None, "n": None, **RUN_DEFAULTS, "replicas": 1, "seed": 0},
    "se-table": {"beta": None, **{k: RUN_DEFAULTS[k] for k in ("delta", "L")}},
    "verify": {"n": 12, "seed": 1},
    "chaos": {"beta": 1.5, "n": 14, "s_grid": [0.0, 0.1, 0.3, 0.6], "disorder_samples": 100,
              "batch": 500, "seed": 0},
    "stability": {"beta": 0.3, "n": 500, **RUN_DEFAULTS, "s_grid": [0.0, 0.01, 0.05, 0.2],
                  "beta_grid": [0.3, 0.31, 0.35], "replicas": 20, "seed": 0},
    "quality": {"beta_grid": [0.0, 0.3, 0.45], "n": 10, **RUN_DEFAULTS, "replicas": 4000,
                "batch": 2000, "seed": 0},
    "bench": {"n_grid": [500, 1000, 2000], "beta": 0.3, **RUN_DEFAULTS, "repeats": 1, "seed": 0},
}

# flag name -> (type, help)
FLAGS = {
    "beta": (float, "inverse temperature"),
    "n": (int, "number of spins"),
    "delta": (float, "localization step size"),
    "L": (int, "number of localization steps"),
    "kamp": (int, "AMP iterations per mean estimate"),
    "kngd": (int, "natural-gradient iterations per mean estimate"),
    "eta": (float, "natural-gradient step size"),
    "replicas": (int, "independent sampler runs"),
    "seed": (int, "top-level 64-bit seed"),
    "s_grid": (float, "disorder interpolation values"),
    "beta_grid": (float, "inverse temperatures"),
    "n_grid": (int, "dimensions to time"),
    "disorder_samples": (int, "number of disorder draws"),
    "batch": (int, "assignment batch size"),
    "repeats": (int, "timed repetitions per dimension"),
}


class CliConfigError(ValueError):
    pass


# range checks applied to every supplied value before any work starts
CHECKS = {
    "beta": (lambda v: v >= 0, "must be nonnegative"),
    "beta_grid": (lambda v: v >= 0, "must be nonnegative"),
    "n": (lambda v: v >= 1, "must be at least 1"),
    "n_grid": (lambda v: v >= 1, "must be at least 1"),
    "delta": (lambda v: v > 0, "must be positive"),
    "L": (lambda v: v >= 0, "must be nonnegative"),
    "kamp": (lambda v: v >= 0, "must be nonnegative"),
    "kngd": (lambda v: v >= 0, "must be nonnegative"),
    "eta": (lambda v: v >= 0, "must be nonnegative"),
    "replicas": (lambda v: v >= 1, "must be at least 1"),
    "disorder_samples": (lambda v: v >= 1, "must be at least 1"),
    "batch": (lambda v: v >= 1, "must be at least 1"),
    "repeats": (lambda v: v >= 1, "must be at least 1"),
    "s_grid": (lambda v: 0 <= v <= 1, "must lie in [0, 1]"),
}


def load_config_file(path) -> dict:
    p = Path(path)
    text = p.read_bytes()
    if p.suffix.lower() == ".json":
        data = json.loads(text)
    else:
        data = tomllib.loads(text.decode())
    if not isinstance(data, dict):
        raise CliConfigError("config: file must hold a table/object")
    # records written by this tool nest the settings under "config"
    if "schema_version" in data and "config" in data:
        data = data["config"]
    aliases = {"big_l": "L", "k_amp": "kamp", "k_ngd": "kngd"}
    return {aliases.get(k, k).replace("-", "_"): v for k, v in data.items()}


def _fmt(v):
    return " ".join(map(str, v)) if isinstance(v, list) else str(v)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=f"{name} subcommand")
        p.add_argument("--config", help="TOML or JSON settings file (flags override it)")
        p.add_argument("--out", help="output path")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: $SKLOC_THREADS, else logical cores)")
        for key, default in defaults.items():
            typ, text = FLAGS[key]
            flag = "--" + key.replace("_", "-")
            nargs = "+" if isinstance(default, list) else None
            p.add_argument(flag, dest=key, type=typ, nargs=nargs, default=None,
                           help=f"{text} (default: {_fmt(default)})")
        if name == "sample":
            p.add_argument("--matrix", help="SKLM coupling-matrix file (default: GOE drawn from the seed)")
            p.add_argument("--emit-trajectory", help="CSV of |y_l| and |m_l|^2/n for replica 0")
        if name in ("chaos", "stability", "quality"):
            p.add_argument("--csv-dir", help="directory for one CSV per curve")
    return parser


def merge(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[command])
    if args.config:
        try:
            file_cfg = load_config_file(args.config)
        except (OSError, ValueError) as err:
            raise CliConfigError(f"config: cannot read {args.config}: {err}") from None
        for k, v in file_cfg.items():
            if k in cfg:
                cfg[k] = v
    for k in DEFAULTS[command]:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    for k, v in cfg.items():
        if v is not None and k in CHECKS:
            ok, msg = CHECKS[k]
            vals = v if isinstance(v, list) else [v]
            if not all(ok(x) for x in vals):
                raise CliConfigError(f"{k}: {msg}, got {v!r}")
    for k, v in cfg.items():
        if v is None:
            raise CliConfigError(f"{k}: required")
    if "seed" in cfg:
        try:
            check_seed(cfg["seed"])
        except (TypeError, ValueError) as err:
            raise CliConfigError(f"seed: {err}") from None
    return cfg


def threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SKLOC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliConfigError(f"threads: SKLOC_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


def _run_kwargs(cfg: dict) -> dict:
    return {"delta": cfg["delta"], "big_l": cfg["L"], "k_amp": cfg["kamp"], "k_ngd": cfg["kngd"],
            "eta": cfg["eta"]}


def _run_config(cfg: dict, beta: float, n: int) -> RunConfig:
    try:
        return RunConfig(beta=beta, n=n, seed=cfg["seed"], **_run_kwargs(cfg))
    except ConfigError as err:
        raise CliConfigError(str(err)) from None


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text + "\n")


def _finish(rec: RunRecord, args):
    if args.out:
        write_record(rec, args.out)
    else:
        print(json.dumps(rec.to_dict(), indent=1))
    if getattr(args, "csv_dir", None):
        write_curves_csv(rec, args.csv_dir)


def cmd_sample(cfg, args):
    rc = _run_config(cfg, cfg["beta"], cfg["n"])
    matrix = load_matrix(args.matrix) if args.matrix else sample_goe(cfg["n"], cfg["seed"])
    if matrix.n != rc.n:
        raise CliConfigError(f"n: matrix file has n={matrix.n}")
    if cfg["replicas"] < 1:
        raise CliConfigError("replicas: must be at least 1")
    result = sample(matrix, rc, cfg["replicas"])
    out = args.out or "sample.json"
    result.save(out)
    if args.emit_trajectory:
        tr = localize(matrix, rc)
        rows = np.column_stack([np.arange(rc.big_l + 1), np.linalg.norm(tr.y_path, axis=1),
                                (tr.m_path ** 2).mean(axis=1)])
        np.savetxt(args.emit_trajectory, rows, delimiter=",", header="step,y_norm,m_sq_over_n",
                   comments="", fmt=["%d", "%.17g", "%.17g"])
    print(f"wrote {cfg['replicas']} samples to {out}", file=sys.stderr)


def cmd_se_table(cfg, args):
    try:
        table = build_schedule(cfg["beta"], cfg["delta"], cfg["L"])
    except ValueError as err:
        raise CliConfigError(f"beta/delta/L: {err}") from None
    _emit(table.to_json(), args.out)


def cmd_verify(cfg, args):
    from .verify import run_checks
    report = run_checks(cfg["n"], cfg["seed"])
    _emit(json.dumps(report, indent=1), args.out)
    failed = [c["check_name"] for c in report if not c["pass"]]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def cmd_chaos(cfg, args):
    if cfg["n"] > 16:
        raise CliConfigError("n: chaos needs n <= 16")
    res = run_chaos(cfg["beta"], cfg["n"], cfg["s_grid"], cfg["disorder_samples"], cfg["seed"],
                    batch=cfg["batch"], workers=threads(args))
    _finish(res.to_record(cfg, cfg["seed"]), args)


def cmd_stability(cfg, args):
    _run_config(cfg, cfg["beta"], cfg["n"])
    for b in cfg["beta_grid"]:
        if not 0 <= b < 1:
            raise CliConfigError(f"beta_grid: {b} outside [0, 1)")
    rec = run_stability(cfg["beta"], cfg["n"], cfg["s_grid"], cfg["beta_grid"], cfg["replicas"],
                        cfg["seed"], **_run_kwargs(cfg))
    _finish(rec, args)


def cmd_quality(cfg, args):
    for b in cfg["beta_grid"]:
        _run_config(cfg, b, cfg["n"])
    if cfg["n"] > 14:
        raise CliConfigError("n: quality needs n <= 14")
    rec = run_sampling_quality(cfg["beta_grid"], cfg["n"], cfg["replicas"], _run_kwargs(cfg), cfg["seed"],
                               batch=cfg["batch"])
    _finish(rec, args)


def bench(n_grid, config: dict, seed: int = 0, beta: float = 0.3, repeats: int = 1) -> RunRecord:
    """Wall-clock per single-trajectory localize call, with a log-log slope fit."""
    n_grid = [int(n) for n in n_grid]
    if n_grid != sorted(n_grid):
        raise ValueError("n_grid must be ascending")
    times, counts = [], []
    # one untimed call so one-off costs (compilation, allocator and BLAS start-up) stay out of the fit
    localize(sample_goe(n_grid[0], seed), RunConfig(beta=beta, n=n_grid[0], seed=seed, **config))
    for n in n_grid:
        matrix = sample_goe(n, seed)
        rc = RunConfig(beta=beta, n=n, seed=seed, **config)
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            localize(matrix, rc)
            best = min(best, time.perf_counter() - t0)
        times.append(best)
        counts.append(matvec_count(rc))
    rec = RunRecord("bench", {**config, "beta": beta, "n_grid": n_grid, "repeats": repeats},
                    seeds={"seed": seed}, timestamps={"started": time.strftime("%Y-%m-%dT%H:%M:%S%z")})
    rec.curves["seconds"] = Curve(n_grid, times, [0.0] * len(n_grid))
    rec.metrics["matvecs_per_call"] = counts
    if len(n_grid) >= 2:
        rec.metrics["slope"] = float(np.polyfit(np.log(n_grid), np.log(times), 1)[0])
    return rec


def cmd_bench(cfg, args):
    _run_config(cfg, cfg["beta"], max(cfg["n_grid"]))
    if list(cfg["n_grid"]) != sorted(cfg["n_grid"]):
        raise CliConfigError("n_grid: must be ascending")
    _finish(bench(cfg["n_grid"], _run_kwargs(cfg), cfg["seed"], cfg["beta"], cfg["repeats"]), args)


COMMANDS = {"sample": cmd_sample, "se-table": cmd_se_table, "verify": cmd_verify, "chaos": cmd_chaos,
            "stability": cmd_stability, "quality": cmd_quality, "bench": cmd_bench}


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = merge(args.command, args)
        print("config: " + json.dumps({"command": args.command, **cfg}, sort_keys=True), file=sys.stderr)
        code = COMMANDS[args.command](cfg, args)
    except CliConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # runtime failure
        print(f"failed: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    return code or 0


def main() -> None:
    sys.exit(parse_and_dispatch())
