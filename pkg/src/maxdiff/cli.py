"""Command-line entry point.

Subcommands: train, eval, sweep, analyze (msd | ergodicity), gramian,
compare.  Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
Timestamps only ever go to per-run log files, so outputs are byte-identical
for identical inputs and --seed.
"""

from __future__ import annotations

import os

# must precede numpy's first import (see package __init__)
for _v in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_v, "1")

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import correlations as corr
from . import harness
from .config import parse_config
from .envs import EnvSpec, make_env
from .errors import ConfigError, InsufficientDataError, MaxDiffError
from .harness import read_eval_csv, run_and_eval, welch_t
from .trajectory import load_trajectories


def _fmt(x) -> str:
    return repr(float(x))


def _default_out() -> Path:
    return Path(os.environ.get("MAXDIFF_OUT", "results"))


def _run_dir(args, cfg_path: str) -> str:
    if args.out:
        return args.out
    stem = Path(cfg_path).stem
    algo = args.algo or "maxdiff"
    seed = args.seed if args.seed is not None else 0
    return str(_default_out() / f"{stem}_{algo}_seed{seed}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_train(args) -> int:
    cfg = parse_config(args.config, overrides={
        "seed": args.seed, "algo": args.algo, "mode": args.mode,
        "output_dir": _run_dir(args, args.config)})
    record = run_and_eval(cfg, reuse=not args.fresh)
    print(json.dumps({k: v for k, v in record.items() if k != "eval_returns"},
                     sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    cfg = parse_config(args.config, overrides={"seed": args.seed})
    run = Path(args.run)
    dyn, rew = run / "dyn.ckpt", run / "rew.ckpt"
    for p in (dyn, rew):
        if not p.exists():
            raise ConfigError(f"missing checkpoint {p}")
    returns = harness.evaluate(
        (dyn, rew), cfg.env, args.episodes or cfg.eval_episodes,
        args.seed if args.seed is not None else cfg.seed,
        cfg.planner, args.steps or cfg.eval_steps, cfg.algo)
    out = Path(args.out) if args.out else run / "eval.csv"
    harness.write_eval_csv(out, returns)
    print(json.dumps({"episodes": len(returns),
                      "mean": float(np.mean(returns)),
                      "std": float(np.std(returns, ddof=1)),
                      "out": str(out)}, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    overrides = {"mode": args.mode}
    cfg = parse_config(args.config, overrides=overrides)
    seeds = [int(s) for s in args.seeds.split(",")]
    out = args.out or str(_default_out() / (Path(args.config).stem + "_sweep"))
    if args.alphas:
        alphas = [float(a) for a in args.alphas.split(",")]
        summary = harness.alpha_sweep(cfg, alphas, seeds, out_dir=out,
                                      workers=args.workers)
        print(json.dumps(summary["curve"], sort_keys=True))
    else:
        algos = args.algos.split(",")
        summary = harness.seed_sweep(cfg, seeds, algos, out_dir=out,
                                     workers=args.workers)
        print(json.dumps({"aggregates": summary["aggregates"],
                          "stat_reports": summary["stat_reports"]},
                         sort_keys=True))
    return 0


def _load_paths(files):
    paths = []
    for fname in files:
        paths.extend(load_trajectories(fname))
    if not paths:
        raise ConfigError("no trajectories in input files")
    return paths


def _analysis_proj(args, dim: int) -> corr.ExplorationProjection:
    if args.indices:
        idx = tuple(int(i) for i in args.indices.split(","))
    else:
        idx = tuple(range(dim))
    if args.weights:
        w = tuple(float(x) for x in args.weights.split(","))
    else:
        w = (1.0,) * len(idx)
    return corr.ExplorationProjection(idx, w)


def cmd_analyze(args) -> int:
    paths = _load_paths(args.files)
    proj = _analysis_proj(args, paths[0].states.shape[1])
    if args.what == "msd":
        max_lag = args.max_lag or max(1, (min(len(p) for p in paths) - 1) // 2)
        fit_range = None
        if args.fit:
            lo, hi = args.fit.split(":")
            fit_range = (int(lo), int(hi))
        curve = corr.msd(paths, proj, max_lag, fit_range)
        out = Path(args.out) if args.out else Path("msd.csv")
        with open(out, "w") as f:
            f.write(f"# gamma = {_fmt(curve.gamma)}\n")
            f.write(f"# fit_range = {curve.fit_range[0]}:{curve.fit_range[1]}\n")
            f.write("lag,msd\n")
            for lag, val in zip(curve.lags, curve.msd):
                f.write(f"{lag},{_fmt(val)}\n")
        print(json.dumps({"gamma": curve.gamma,
                          "fit_range": list(curve.fit_range),
                          "out": str(out)}, sort_keys=True))
        return 0
    # ergodicity: time average of the first projected coordinate per path
    # against the ensemble average over final states
    observable = lambda s: float(proj.apply(s)[0])
    ens_avg = float(np.mean([observable(p.states[-1]) for p in paths]))
    out = Path(args.out) if args.out else Path("birkhoff.csv")
    with open(out, "w") as f:
        f.write(f"# ensemble_avg = {_fmt(ens_avg)}\n")
        f.write("path,time_avg,gap\n")
        for i, p in enumerate(paths):
            gap = corr.birkhoff_gap(p, observable, paths)
            tavg = float(np.mean([observable(s) for s in p.states]))
            f.write(f"{i},{_fmt(tavg)},{_fmt(gap)}\n")
    print(json.dumps({"ensemble_avg": ens_avg, "paths": len(paths),
                      "out": str(out)}, sort_keys=True))
    return 0


def _env_matrices(env_spec: EnvSpec):
    if env_spec.kind == "lti":
        return env_spec.params["A"], env_spec.params["B"]
    if env_spec.kind == "pointmass":
        return make_env(env_spec).continuous_matrices()
    raise ConfigError(f"gramian needs an lti or pointmass env, got {env_spec.kind}")


def cmd_gramian(args) -> int:
    cfg = parse_config(args.config)
    A, B = _env_matrices(cfg.env)
    res = corr.gramian_lti(A, B, args.T, args.steps)
    eig = np.linalg.eigvalsh(res.W)
    print(f"rank = {res.rank}")
    print(f"logdet = {_fmt(res.logdet)}")
    print("eigenvalues = " + " ".join(_fmt(x) for x in eig))
    out = Path(args.out) if args.out else Path("gramian.csv")
    with open(out, "w") as f:
        f.write("# controllability gramian, row-major\n")
        for row in res.W:
            f.write(",".join(_fmt(x) for x in row) + "\n")
    if args.beta_sweep:
        if cfg.env.kind != "pointmass":
            raise ConfigError("--beta-sweep requires a pointmass env")
        betas = [float(b) for b in args.beta_sweep.split(",")]
        sweep_out = out.with_name(out.stem + "_beta" + out.suffix)
        with open(sweep_out, "w") as f:
            f.write("beta,det,logdet\n")
            for beta in betas:
                Ab, Bb = make_env(EnvSpec.pointmass(beta=beta)).continuous_matrices()
                r = corr.gramian_lti(Ab, Bb, args.T, args.steps)
                f.write(f"{_fmt(beta)},{_fmt(np.linalg.det(r.W))},{_fmt(r.logdet)}\n")
        print(f"beta sweep -> {sweep_out}")
    return 0


def cmd_compare(args) -> int:
    a = read_eval_csv(args.a)
    b = read_eval_csv(args.b)
    if len(a) < 2 or len(b) < 2:
        raise InsufficientDataError("need at least 2 returns per file")
    report = welch_t(a, b)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxdiff",
                                description="max-diffusion RL experiments")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one run from a config file")
    t.add_argument("config")
    t.add_argument("--seed", type=int)
    t.add_argument("--algo", choices=["maxdiff", "nnmppi"])
    t.add_argument("--mode", choices=["multi", "single"])
    t.add_argument("--out")
    t.add_argument("--fresh", action="store_true",
                   help="ignore any completed run in the output dir")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="evaluate checkpoints from a run dir")
    e.add_argument("config")
    e.add_argument("--run", required=True)
    e.add_argument("--episodes", type=int)
    e.add_argument("--steps", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.set_defaults(fn=cmd_eval)

    s = sub.add_parser("sweep", help="seed sweep (or alpha sweep) of a config")
    s.add_argument("config")
    s.add_argument("--seeds", required=True, help="comma-separated seeds")
    s.add_argument("--algos", default="maxdiff,nnmppi")
    s.add_argument("--alphas", help="run an alpha sweep over these values")
    s.add_argument("--mode", choices=["multi", "single"])
    s.add_argument("--workers", type=int)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_sweep)

    a = sub.add_parser("analyze", help="diffusion/ergodicity diagnostics")
    a.add_argument("what", choices=["msd", "ergodicity"])
    a.add_argument("files", nargs="+")
    a.add_argument("--max-lag", type=int, dest="max_lag")
    a.add_argument("--fit", help="fit range LO:HI in lag steps")
    a.add_argument("--indices", help="projected state indices, comma-separated")
    a.add_argument("--weights", help="projection weights, comma-separated")
    a.add_argument("--out")
    a.set_defaults(fn=cmd_analyze)

    g = sub.add_parser("gramian", help="controllability gramian of the config env")
    g.add_argument("config")
    g.add_argument("--T", type=float, default=1.0)
    g.add_argument("--steps", type=int, default=256)
    g.add_argument("--beta-sweep", dest="beta_sweep",
                   help="comma-separated beta values (pointmass only)")
    g.add_argument("--out")
    g.set_defaults(fn=cmd_gramian)

    c = sub.add_parser("compare", help="Welch's t-test between two eval CSVs")
    c.add_argument("a")
    c.add_argument("b")
    c.set_defaults(fn=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MaxDiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:       # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
