"""Command line interface: ``ppbranch {validate,simulate,montecarlo,moments}``.

Exit codes: 0 ok, 1 invalid model or failed check, 2 unreadable config, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .model import ModelConfig, ParameterError, validate_config
from .montecarlo import MEAN_SE_TOL, estimate_fate_curve, moment_check, wilson_interval
from .oracle import (
    MAX_ORACLE_STATE,
    distribution_distance,
    empirical_histogram,
    exact_carrying_prey_mean,
    exact_step_distribution,
)
from .sampling import derive_stream
from .simulator import Category, RecordMode, simulate, step_batch

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_IO = 0, 1, 2, 3

TRAJECTORY_COLUMNS = [
    "generation",
    "predators",
    "preys",
    "density_before_control",
    "predator_survivors",
    "prey_survivors",
    "competition_survivors",
]
FATE_COLUMNS = [
    "generation",
    "p_both_alive",
    "p_extinct",
    "p_prey_only",
    "p_predator_only",
    "p_exploded",
    "ci_lo_both",
    "ci_hi_both",
]
ORACLE_TV_TOL = 0.01
ORACLE_MIN_DRAWS = 1_000_000


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fmt_prob(x: float) -> str:
    return f"{x:.6f}"


def _fmt_density(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def _load(path: str, warn_invalid: bool = True) -> ModelConfig:
    try:
        cfg = load_config(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from None
    except ConfigError as exc:
        raise CliError(EXIT_PARSE, f"{path}: {exc}") from None
    except (ParameterError, ValueError) as exc:
        raise CliError(EXIT_INVALID, f"{path}: invalid model: {exc}") from None
    if warn_invalid:
        problems = validate_config(cfg)
        if problems:
            print("ppbranch: warning: model constraints violated:", file=sys.stderr)
            for p in problems:
                print(f"  - {p}", file=sys.stderr)
    return cfg


def _write(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {out}: {exc}") from None


def _write_manifest(args, out: str, started: float, **extra) -> None:
    if out == "-":
        return
    manifest = {
        "config": args.config,
        "command": args.command,
        "argv": sys.argv[1:],
        "root_seed": args.seed,
        "replicates": extra.pop("replicates", 1),
        "horizon": args.horizon,
        "outputs": [out],
        "tool_version": __version__,
        "duration_seconds": round(time.perf_counter() - started, 3),
        **extra,
    }
    _write(f"{out}.manifest.json", json.dumps(manifest, indent=2) + "\n")


def trajectory_csv(cfg: ModelConfig, horizon: int, seed: int, replicate: int = 0) -> str:
    traj = simulate(cfg, horizon, derive_stream(seed, replicate), RecordMode.FULL)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    for rec in traj.records:
        w.writerow([
            rec.n,
            rec.state_before.predators,
            rec.state_before.preys,
            _fmt_density(rec.density_before_control),
            rec.predator_survivors,
            rec.prey_survivors,
            "" if rec.competition_survivors is None else rec.competition_survivors,
        ])
    return buf.getvalue()


def fate_curve_csv(cfg: ModelConfig, horizon: int, replicates: int, seed: int, parallel: int) -> str:
    curve = estimate_fate_curve(cfg, horizon, replicates, seed, parallel)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FATE_COLUMNS)
    for n in range(curve.horizon + 1):
        both = int(curve.both_alive[n])
        lo, hi = wilson_interval(both, replicates)
        row = [n] + [
            _fmt_prob(curve[c][n] / replicates)
            for c in (Category.BOTH_ALIVE, Category.SYSTEM_EXTINCT, Category.PREY_ONLY,
                      Category.PREDATOR_ONLY, Category.EXPLODED)
        ]
        w.writerow(row + [_fmt_prob(lo), _fmt_prob(hi)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    cfg = _load(args.config, warn_invalid=False)
    problems = validate_config(cfg)
    if problems:
        print(f"{args.config}: INVALID")
        for p in problems:
            print(f"  - {p}")
        return EXIT_INVALID
    print(f"{args.config}: valid")
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    cfg = _load(args.config)
    _write(args.out, trajectory_csv(cfg, args.horizon, args.seed, args.replicate))
    _write_manifest(args, args.out, started, replicate_index=args.replicate)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    started = time.perf_counter()
    cfg = _load(args.config)
    _write(args.out, fate_curve_csv(cfg, args.horizon, args.replicates, args.seed, args.parallel))
    _write_manifest(args, args.out, started, replicates=args.replicates)
    return EXIT_OK


def cmd_moments(args) -> int:
    cfg = _load(args.config)
    state = args.state
    ok = True
    if cfg.carrying is None:
        report = moment_check(cfg, [state], args.draws, args.seed)
        for r in report.rows:
            flag = "pass" if r.ok else "FAIL"
            print(
                f"{r.species:8s} mean analytic={r.analytic_mean:.6f} empirical={r.empirical_mean:.6f} "
                f"(se={r.standard_error:.2e})  var analytic={r.analytic_variance:.6f} "
                f"empirical={r.empirical_variance:.6f}  {flag}"
            )
        ok = report.ok
        if max(state) <= MAX_ORACLE_STATE:
            rng = derive_stream(args.seed, 1_000_003).generator()
            batch = step_batch(cfg, state, args.draws, rng)
            tv = distribution_distance(
                empirical_histogram(batch.predators, batch.preys), exact_step_distribution(cfg, state)
            )
            gated = args.draws >= ORACLE_MIN_DRAWS
            tv_ok = tv < ORACLE_TV_TOL or not gated
            ok = ok and tv_ok
            note = ("pass" if tv_ok else "FAIL") if gated else "informational (< 10^6 draws)"
            print(f"oracle   total variation={tv:.6f} (tol {ORACLE_TV_TOL})  {note}")
    else:
        exact = exact_carrying_prey_mean(cfg, state)
        rng = derive_stream(args.seed, 0).generator()
        preys = step_batch(cfg, state, args.draws, rng).preys.astype(float)
        se = preys.std(ddof=1) / math.sqrt(args.draws)
        mean = float(preys.mean())
        ok = abs(mean - exact.mean) <= MEAN_SE_TOL * se if se > 0 else mean == exact.mean
        print(
            f"prey     mean exact={exact.mean:.6f} empirical={mean:.6f} (se={se:.2e}) "
            f"bound={exact.upper_bound:.6f}  {'pass' if ok else 'FAIL'}"
        )
    return EXIT_OK if ok else EXIT_INVALID


# ---------------------------------------------------------------------------


def _state(text: str) -> tuple[int, int]:
    try:
        z, zt = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("state must look like 'z,z~', e.g. 5,5") from None
    if z < 0 or zt < 0:
        raise argparse.ArgumentTypeError("state counts must be non-negative")
    return z, zt


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    default_seed = int(os.environ.get("PPBRANCH_SEED", "0"))
    parser = argparse.ArgumentParser(prog="ppbranch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ppbranch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, horizon):
        p.add_argument("config", help="config JSON path or bundled name (example1, example2, example3)")
        p.add_argument("--horizon", type=_positive, default=horizon)
        p.add_argument("--seed", type=int, default=default_seed, help="root seed (default: $PPBRANCH_SEED or 0)")
        p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")

    p = sub.add_parser("validate", help="check the model constraints of a config")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="write one trajectory as CSV")
    common(p, 40)
    p.add_argument("--replicate", type=int, default=0, help="replicate index of the stream")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("montecarlo", help="write the per-generation fate curve as CSV")
    common(p, 100)
    p.add_argument("--replicates", type=_positive, default=10_000)
    p.add_argument("--parallel", type=_positive, default=1)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("moments", help="compare one-step moments with the analytic formulas")
    p.add_argument("config")
    p.add_argument("--state", type=_state, required=True)
    p.add_argument("--draws", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=default_seed)
    p.set_defaults(func=cmd_moments)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"ppbranch: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
