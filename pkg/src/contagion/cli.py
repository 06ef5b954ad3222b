"""Command-line experiment runner.

    contagion simulate --config cfg.json --out DIR
    contagion verify   --config cfg.json --theorem 2
    contagion oracle   --config cfg.json
    contagion identity --config cfg.json
    contagion bench    [--config cfg.json]

Exit codes: 0 when every check passes, 1 when a statistical check fails,
2 on configuration errors (message as JSON on stderr).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional


from . import protocols as P
from .config import ConfigError, ExperimentConfig, load_config
from .displacement import NotDiscreteError
from .process import EnumerationOverflowError, init, replicate_rng, run
from .stats import Check, report_json

log = logging.getLogger("contagion")


def _setup_logging():
    level = os.environ.get("CONTAGION_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _emit(out: Path, name: str, checks: list[Check], started: float, **meta) -> int:
    text = report_json(checks, command=name, elapsed_seconds=round(time.perf_counter() - started, 3), **meta)
    (out / f"{name}_report.json").write_text(text + "\n", encoding="utf-8")
    for c in checks:
        print(c.line())
    return 0 if all(c.passed for c in checks) else 1


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _outdir(args)
    envs = cfg.environment()
    n = cfg.steps

    def one(i: int):
        state = init(cfg.initial, rng=replicate_rng(cfg.seed, i))
        run(state, envs, n)
        return state

    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        states = list(pool.map(one, range(cfg.replicates)))
    summary = {"steps": n, "replicates": cfg.replicates, "seed": cfg.seed, "runs": []}
    for i, state in enumerate(states):
        name = f"points_r{i:04d}.csv"
        with open(out / name, "w", encoding="utf-8", newline="") as fh:
            state.to_csv(fh)
        last = state.step_mother[n]
        summary["runs"].append({
            "replicate": i,
            "points": len(state),
            "file": name,
            "log_W": state.log_W,
            "U": state.U,
            "last_mother": [float(v) for v in state.loc[last]],
            "mean_location": [float(v) for v in state.loc[: len(state)].mean(axis=0)],
        })
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {cfg.replicates} point file(s) and summary.json to {out}")
    return 0


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    cfg = _load(args)
    out = _outdir(args)
    inst = P.Instance.from_config(cfg)
    o = cfg.options
    n, R = cfg.steps, cfg.replicates
    try:
        if args.theorem == 1:
            checks = P.thm1_check(inst, n, R, horizon=o.get("horizon", 4000))
        elif args.theorem == 2:
            checks = P.thm2_check(inst, n, R, n_limit=o.get("n_limit", n), drift_tol=o.get("drift_tol", 0.1),
                                  cov_tol=o.get("cov_tol", 0.15))
        else:
            checks = (P.thm3_normality(inst, n, R, cov_tol=o.get("cov_tol", 0.05))
                      + P.thm3_drift_check(inst, n, R, tol=o.get("drift_tol", 0.02))
                      + P.thm3_segment(inst, o.get("n_segment", n), o.get("R_segment", min(R, 100)),
                                       tol=o.get("segment_tol", 0.05)))
    except P.RegimeMismatchError as exc:
        raise ConfigError(str(exc), "$.regime") from None
    return _emit(out, "verify", checks, t0, theorem=args.theorem)


def cmd_oracle(args) -> int:
    t0 = time.perf_counter()
    cfg = _load(args)
    out = _outdir(args)
    inst = P.Instance.from_config(cfg)
    try:
        checks, law = P.oracle_triple(inst, cfg.steps, cfg.replicates, j=cfg.options.get("j", 1),
                                      tv_tol=cfg.options.get("tv_tol", 0.005))
    except NotDiscreteError as exc:
        raise ConfigError(f"exact enumeration needs finitely supported laws: {exc}", "$.displacement") from None
    except EnumerationOverflowError as exc:
        raise ConfigError(str(exc), "$.steps") from None
    pts, probs = law.support()
    with open(out / "oracle_law.csv", "w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow([f"x_{i}" for i in range(pts.shape[1])] + ["probability"])
        for x, p in zip(pts, probs):
            wr.writerow([f"{v:.17g}" for v in x] + [f"{p:.17g}"])
    return _emit(out, "oracle", checks, t0)


def cmd_identity(args) -> int:
    t0 = time.perf_counter()
    cfg = _load(args)
    out = _outdir(args)
    checks = P.identity_check(P.Instance.from_config(cfg), cfg.steps, cfg.replicates)
    return _emit(out, "identity", checks, t0)


def cmd_bench(args) -> int:
    t0 = time.perf_counter()
    out = _outdir(args)
    opts = load_config(args.config).options if args.config else {}
    sizes = [int(s) for s in opts.get("sizes", [10**3, 10**4, 10**5, 10**6])]
    checks, rows = P.performance_checks(n_steps=int(opts.get("bench_steps", 10**6)), sizes=sizes,
                                        draws=int(opts.get("draws", 10**6)),
                                        seed=args.seed if args.seed is not None else P.DEFAULT_SEED)
    with open(out / "bench.csv", "w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["N", "reads_per_draw", "ns_per_draw"])
        for N, reads, ns in rows:
            wr.writerow([N, f"{reads:.17g}", f"{ns:.17g}"])
    return _emit(out, "bench", checks, t0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contagion", description=__doc__.split("\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="experiment JSON")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="replicate workers")
    common.add_argument("--out", type=str, default="contagion_out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run replicates, write point CSVs").set_defaults(func=cmd_simulate)
    v = sub.add_parser("verify", parents=[common], help="check a limit theorem on the configured instance")
    v.add_argument("--theorem", type=int, choices=(1, 2, 3), required=True)
    v.set_defaults(func=cmd_verify)
    sub.add_parser("oracle", parents=[common], help="exact enumeration vs ch.f. vs Monte Carlo").set_defaults(func=cmd_oracle)
    sub.add_parser("identity", parents=[common], help="forward vs backward mother law").set_defaults(func=cmd_identity)
    sub.add_parser("bench", parents=[common], help="simulation and sampler timings").set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        args.threads = 1
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps(exc.as_dict(), sort_keys=True), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
