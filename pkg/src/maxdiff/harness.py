"""Training loops, policy evaluation, seed/alpha sweeps and statistics.

Every run is a pure function of its config: all randomness flows from
numpy SeedSequence streams spawned off the run seed, files are written with
round-trip float formatting, and wall-clock timing goes to a separate log
file so run artifacts are byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import multiprocessing
import numpy as np
import scipy.special

from . import envs as envs_mod
from . import learning
from . import planners
from .correlations import ExplorationProjection
from .envs import EnvSpec, make_env
from .errors import ConfigError, InsufficientDataError, MaxDiffError, NumericalError
from .learning import (AdamState, NetParams, ReplayBuffer, Transition,
                       dynamics_update, init_params, load_checkpoint,
                       reward_update, save_checkpoint)
from .planners import (GroundTruthDynamics, GroundTruthReward,
                       LearnedDynamics, LearnedReward, PlannerConfig, mppi_plan)
from .trajectory import Trajectory, save_trajectories

ALGO_MAXDIFF = "maxdiff"
ALGO_NNMPPI = "nnmppi"
MODE_MULTI = "multi"
MODE_SINGLE = "single"
MODEL_LEARNED = "learned"
MODEL_GROUND_TRUTH = "ground_truth"


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class LearnConfig:
    layers: tuple = (128, 128)
    lr: float = 0.0005
    batch_size: int = 128
    replay_capacity: int = 1_000_000


@dataclass(frozen=True)
class RunConfig:
    env: EnvSpec
    planner: PlannerConfig
    learn: LearnConfig = field(default_factory=LearnConfig)
    algo: str = ALGO_MAXDIFF
    mode: str = MODE_MULTI
    total_steps: int = 50_000
    epoch_len: int = 1000
    warmup_steps: int = 1000
    seed: int = 0
    model_source: str = MODEL_LEARNED
    eval_episodes: int = 100
    eval_steps: int = 300
    save_traj: bool = False
    output_dir: str = "results/run"

    def __post_init__(self):
        if self.algo not in (ALGO_MAXDIFF, ALGO_NNMPPI):
            raise ConfigError(f"unknown algo {self.algo!r}")
        if self.mode not in (MODE_MULTI, MODE_SINGLE):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.model_source not in (MODEL_LEARNED, MODEL_GROUND_TRUTH):
            raise ConfigError(f"unknown model_source {self.model_source!r}")
        if self.total_steps % self.epoch_len != 0:
            raise ConfigError("total_steps must be a multiple of epoch_len")
        if self.warmup_steps < 0 or self.warmup_steps > self.total_steps:
            raise ConfigError("warmup_steps out of range")


def config_to_dict(cfg: RunConfig) -> dict:
    """Plain-JSON view of a run config (embedded in every summary)."""
    env = cfg.env
    env_params = {}
    for k, v in env.params.items():
        if isinstance(v, np.ndarray):
            env_params[k] = v.tolist()
        elif isinstance(v, envs_mod.PotentialField):
            env_params[k] = {"kind": v.kind, "centers": v.centers.tolist(),
                             "scales": v.scales.tolist()}
        else:
            env_params[k] = v
    p = cfg.planner
    return {
        "env": {"kind": env.kind, "d": env.d, "m": env.m, "dt": env.dt,
                "params": env_params},
        "planner": {"horizon": p.horizon, "samples": p.samples, "lambda": p.lam,
                    "alpha": p.alpha, "gamma": p.gamma,
                    "proj_indices": list(p.proj.indices),
                    "proj_weights": list(p.proj.weights),
                    "noise_sigma": (None if p.noise_sigma is None
                                    else np.asarray(p.noise_sigma).tolist()),
                    "entropy_mode": p.entropy_mode},
        "learning": {"layers": list(cfg.learn.layers), "lr": cfg.learn.lr,
                     "batch_size": cfg.learn.batch_size,
                     "replay_capacity": cfg.learn.replay_capacity},
        "run": {"algo": cfg.algo, "mode": cfg.mode,
                "total_steps": cfg.total_steps, "epoch_len": cfg.epoch_len,
                "warmup_steps": cfg.warmup_steps, "seed": cfg.seed,
                "model_source": cfg.model_source,
                "eval_episodes": cfg.eval_episodes,
                "eval_steps": cfg.eval_steps},
    }


def config_hash(cfg: RunConfig) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# run metrics

@dataclass
class RunMetrics:
    epochs: list                  # 1-based epoch indices
    returns: list                 # episodic mean (multi) / windowed sum (single)
    nll: list                     # mean model NLL per epoch (nan when untrained)
    checkpoint_dyn: Optional[str] = None
    checkpoint_rew: Optional[str] = None
    planner_calls: int = 0
    blowups: int = 0
    wall_clock: float = float("nan")   # informational; never serialized

    @property
    def final_return(self) -> float:
        return self.returns[-1]


def _fmt(x: float) -> str:
    return repr(float(x))


def write_metrics_row(f, epoch: int, ret: float, nll: float):
    f.write(f"{epoch},{_fmt(ret)},{_fmt(nll)}\n")
    f.flush()


def parse_metrics(path) -> RunMetrics:
    epochs, rets, nlls = [], [], []
    with open(path) as f:
        header = f.readline().strip()
        if header != "epoch,return,nll":
            raise ConfigError(f"{path}: unexpected metrics header {header!r}")
        for line in f:
            e, r, n = line.strip().split(",")
            epochs.append(int(e))
            rets.append(float(r))
            nlls.append(float(n))
    return RunMetrics(epochs, rets, nlls)


# ---------------------------------------------------------------------------
# training

def _make_models(cfg: RunConfig, env, dyn_params, rew_params):
    if cfg.model_source == MODEL_GROUND_TRUTH:
        return GroundTruthDynamics(env), GroundTruthReward(env)
    return LearnedDynamics(dyn_params), LearnedReward(rew_params)


def train(cfg: RunConfig) -> RunMetrics:
    """Run one training configuration, writing metrics.csv, checkpoints and
    summary.json into cfg.output_dir.

    Warmup takes uniform random actions to fill the replay buffer; afterwards
    each step plans, acts, stores the transition and applies one dynamics and
    one reward gradient step.  Multi-shot resets on done or at epoch
    boundaries; single-shot never resets and ignores done.  An environment
    blowup aborts the epoch (multi-shot resets and continues, single-shot
    terminates with a diagnostic).
    """
    t_start = time.monotonic()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    env = make_env(cfg.env)
    pcfg = cfg.planner.resolved(env)
    if cfg.algo == ALGO_NNMPPI:
        pcfg = replace(pcfg, alpha=0.0)

    ss = np.random.SeedSequence(cfg.seed)
    init_ss, env_ss, warmup_ss, plan_ss, replay_ss = ss.spawn(5)
    init_rng = np.random.default_rng(init_ss)
    env_rng = np.random.default_rng(env_ss)
    warmup_rng = np.random.default_rng(warmup_ss)
    plan_rng = np.random.default_rng(plan_ss)
    replay_rng = np.random.default_rng(replay_ss)

    learned = cfg.model_source == MODEL_LEARNED
    dyn_params = rew_params = None
    dyn_opt = rew_opt = None
    if learned:
        sizes = [env.d + env.m, *cfg.learn.layers]
        dyn_params = init_params(sizes + [env.d], init_rng, with_log_var=True)
        rew_params = init_params(sizes + [1], init_rng)
        dyn_opt = AdamState.init(dyn_params.flat_weights.size + env.d, cfg.learn.lr)
        rew_opt = AdamState.init(rew_params.flat_weights.size, cfg.learn.lr)
    buffer = ReplayBuffer(cfg.learn.replay_capacity)

    log = open(out / "run.log", "a")
    def logline(msg):
        log.write(f"[{time.strftime('%Y-%m-%d %H:%M:%S')}] {msg}\n")
        log.flush()
    logline(f"start seed={cfg.seed} algo={cfg.algo} mode={cfg.mode} "
            f"hash={config_hash(cfg)}")

    bounds = pcfg.action_bounds
    state = env.reset(int(env_rng.integers(2 ** 63)))
    nominal = np.zeros((pcfg.horizon, env.m))
    just_reset = True
    metrics = RunMetrics([], [], [])
    epoch_episode_returns = []
    episode_return = 0.0
    window_return = 0.0
    epoch_nll = []
    epoch_states = [] if cfg.save_traj else None

    mfile = open(out / "metrics.csv", "w")
    mfile.write("epoch,return,nll\n")
    mfile.flush()

    def do_reset():
        nonlocal state, nominal, just_reset
        state = env.reset(int(env_rng.integers(2 ** 63)))
        nominal = np.zeros((pcfg.horizon, env.m))
        just_reset = True

    for step in range(1, cfg.total_steps + 1):
        if step <= cfg.warmup_steps:
            action = warmup_rng.uniform(bounds[0], bounds[1])
        else:
            model, rsrc = _make_models(cfg, env, dyn_params, rew_params)
            res = mppi_plan(model, rsrc, state, nominal, pcfg, plan_rng)
            action = res.action
            nominal = res.nominal
            metrics.planner_calls += 1

        try:
            sr = env.step(state, action)
        except NumericalError as exc:
            metrics.blowups += 1
            logline(f"step {step}: blowup: {exc}")
            if cfg.mode == MODE_SINGLE:
                mfile.close()
                log.close()
                raise MaxDiffError(
                    f"single-shot run aborted by blowup at step {step}") from exc
            epoch_episode_returns.append(episode_return)
            episode_return = 0.0
            do_reset()
            continue

        if not just_reset:
            buffer.attach_next_action(action)
        buffer.push(Transition(state, action, sr.reward, sr.next_state, sr.done))
        just_reset = False
        episode_return += sr.reward
        window_return += sr.reward
        if epoch_states is not None:
            epoch_states.append(state.copy())

        if learned and step > cfg.warmup_steps and len(buffer) >= cfg.learn.batch_size:
            s, a, r, ns, dn, na = buffer.sample_arrays(cfg.learn.batch_size,
                                                       replay_rng)
            dyn_params, dyn_opt, nll = dynamics_update(dyn_params, dyn_opt,
                                                       s, a, ns - s)
            rew_params, rew_opt, _ = reward_update(rew_params, rew_opt,
                                                   s, a, r, ns, na)
            epoch_nll.append(nll)

        epoch_end = step % cfg.epoch_len == 0
        if cfg.mode == MODE_MULTI and (sr.done or epoch_end):
            epoch_episode_returns.append(episode_return)
            episode_return = 0.0
            do_reset()
        else:
            state = sr.next_state

        if epoch_end:
            epoch = step // cfg.epoch_len
            if cfg.mode == MODE_MULTI:
                ret = float(np.mean(epoch_episode_returns))
            else:
                ret = window_return
            nll_val = float(np.mean(epoch_nll)) if epoch_nll else float("nan")
            metrics.epochs.append(epoch)
            metrics.returns.append(ret)
            metrics.nll.append(nll_val)
            write_metrics_row(mfile, epoch, ret, nll_val)
            if learned:
                save_checkpoint(out / "dyn.ckpt", dyn_params)
                save_checkpoint(out / "rew.ckpt", rew_params)
            if epoch_states is not None:
                save_trajectories(out / f"traj_epoch{epoch:04d}.jsonl",
                                  [Trajectory(np.asarray(epoch_states))])
                epoch_states.clear()
            logline(f"epoch {epoch}: return={ret:.4f} nll={nll_val:.4f}")
            epoch_episode_returns = []
            window_return = 0.0
            epoch_nll = []

    mfile.close()
    if learned:
        metrics.checkpoint_dyn = str(out / "dyn.ckpt")
        metrics.checkpoint_rew = str(out / "rew.ckpt")
    metrics.wall_clock = time.monotonic() - t_start
    summary = {
        "config": config_to_dict(cfg),
        "config_hash": config_hash(cfg),
        "final_return": metrics.final_return,
        "epochs": len(metrics.epochs),
        "planner_calls": metrics.planner_calls,
        "blowups": metrics.blowups,
        "checkpoints": {"dyn": metrics.checkpoint_dyn,
                        "rew": metrics.checkpoint_rew},
    }
    with open(out / "summary.json", "w") as f:
        json.dump(summary, f, indent=1, sort_keys=True)
        f.write("\n")
    logline(f"done in {metrics.wall_clock:.1f}s")
    log.close()
    return metrics


# ---------------------------------------------------------------------------
# evaluation

class PlannerPolicy:
    """Receding-horizon policy wrapper around mppi_plan."""

    def __init__(self, model, reward, pcfg: PlannerConfig):
        self.model = model
        self.reward = reward
        self.pcfg = pcfg
        self.nominal = None
        self.rng = None

    def start_episode(self, rng: np.random.Generator):
        self.nominal = np.zeros((self.pcfg.horizon,
                                 self.pcfg.action_bounds.shape[1]))
        self.rng = rng

    def __call__(self, state):
        res = mppi_plan(self.model, self.reward, state, self.nominal,
                        self.pcfg, self.rng)
        self.nominal = res.nominal
        return res.action


class StaticPolicy:
    """Wraps a plain state -> action function (e.g. an LQR gain)."""

    def __init__(self, fn):
        self.fn = fn

    def start_episode(self, rng):
        pass

    def __call__(self, state):
        return self.fn(state)


def evaluate_policy(policy, env_spec: EnvSpec, episodes: int, seed: int,
                    eval_steps: int) -> list:
    """Episodic returns of a policy under randomized initial conditions.

    Each episode draws its reset seed and planner RNG from a dedicated
    SeedSequence, so results are reproducible given (policy, seed) and
    independent of episode order.
    """
    if episodes < 1:
        raise ConfigError("episodes must be >= 1")
    env = make_env(env_spec)
    returns = []
    for ep in range(episodes):
        ep_ss = np.random.SeedSequence(entropy=seed, spawn_key=(ep,))
        reset_ss, plan_ss = ep_ss.spawn(2)
        rng = np.random.default_rng(plan_ss)
        policy.start_episode(rng)
        state = env.reset(int(np.random.default_rng(reset_ss).integers(2 ** 63)))
        total = 0.0
        for _ in range(eval_steps):
            action = policy(state)
            sr = env.step(state, action)
            total += sr.reward
            if sr.done:
                break
            state = sr.next_state
        returns.append(total)
    return returns


def evaluate(checkpoint, env_spec: EnvSpec, episodes: int, seed: int,
             planner: PlannerConfig, eval_steps: int = 300,
             algo: str = ALGO_MAXDIFF) -> list:
    """Evaluate a (dyn, rew) checkpoint pair with the planner as the policy.

    `checkpoint` is a (NetParams, NetParams) pair or a pair of file paths.
    """
    dyn, rew = checkpoint
    if not isinstance(dyn, NetParams):
        dyn = load_checkpoint(dyn)
    if not isinstance(rew, NetParams):
        rew = load_checkpoint(rew)
    env = make_env(env_spec)
    if dyn.in_dim != env.d + env.m or dyn.out_dim != env.d:
        raise ConfigError(
            f"checkpoint dims ({dyn.in_dim} -> {dyn.out_dim}) do not match "
            f"environment (d={env.d}, m={env.m})")
    pcfg = planner.resolved(env)
    if algo == ALGO_NNMPPI:
        pcfg = replace(pcfg, alpha=0.0)
    policy = PlannerPolicy(LearnedDynamics(dyn), LearnedReward(rew), pcfg)
    return evaluate_policy(policy, env_spec, episodes, seed, eval_steps)


def transfer_eval(checkpoint, env_b: EnvSpec, episodes: int, seed: int,
                  planner: PlannerConfig, eval_steps: int = 300,
                  algo: str = ALGO_MAXDIFF) -> list:
    """Evaluate representations trained on one environment on another with
    the same state/action dimensions."""
    return evaluate(checkpoint, env_b, episodes, seed, planner, eval_steps,
                    algo)


def write_eval_csv(path, returns):
    with open(path, "w") as f:
        f.write("episode,return\n")
        for i, r in enumerate(returns):
            f.write(f"{i},{_fmt(r)}\n")


def read_eval_csv(path) -> list:
    out = []
    with open(path) as f:
        header = f.readline().strip()
        if header != "episode,return":
            raise ConfigError(f"{path}: unexpected eval header {header!r}")
        for line in f:
            out.append(float(line.strip().split(",")[1]))
    return out


# ---------------------------------------------------------------------------
# statistics

@dataclass(frozen=True)
class StatReport:
    mean_a: float
    mean_b: float
    std_a: float
    std_b: float
    n_a: int
    n_b: int
    t_statistic: float
    dof: float
    p_value: float
    significant: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("mean_a", "mean_b", "std_a", "std_b", "n_a", "n_b",
                 "t_statistic", "dof", "p_value", "significant")}


def welch_t(a, b) -> StatReport:
    """Unpaired two-sided Welch's t-test.

    Two-sided p from the regularized incomplete beta function with
    Welch-Satterthwaite degrees of freedom.  If both samples have zero
    variance: p = 1 for equal means, p = 0 otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise InsufficientDataError("welch_t needs at least 2 samples per side")
    ma, mb = float(np.mean(a)), float(np.mean(b))
    va, vb = float(np.var(a, ddof=1)), float(np.var(b, ddof=1))
    na, nb = a.size, b.size
    sa, sb = va / na, vb / nb
    if sa + sb == 0.0:
        t = 0.0 if ma == mb else np.inf * np.sign(ma - mb)
        p = 1.0 if ma == mb else 0.0
        dof = float(na + nb - 2)
    else:
        t = (ma - mb) / np.sqrt(sa + sb)
        dof = (sa + sb) ** 2 / (sa ** 2 / (na - 1) + sb ** 2 / (nb - 1))
        p = float(scipy.special.betainc(dof / 2.0, 0.5, dof / (dof + t * t)))
    return StatReport(ma, mb, float(np.sqrt(va)), float(np.sqrt(vb)), na, nb,
                      float(t), float(dof), float(p), bool(p < 0.05))


# ---------------------------------------------------------------------------
# sweeps

def run_and_eval(cfg: RunConfig, reuse: bool = True) -> dict:
    """Train + evaluate one config, skipping work already on disk.

    A run directory is reused when its summary carries the same config hash;
    likewise the evaluation CSV.  Returns a plain-dict record.
    """
    out = Path(cfg.output_dir)
    h = config_hash(cfg)
    summary_path = out / "summary.json"
    done = False
    if reuse and summary_path.exists():
        with open(summary_path) as f:
            summary = json.load(f)
        done = summary.get("config_hash") == h
    if not done:
        train(cfg)
        with open(summary_path) as f:
            summary = json.load(f)
    metrics = parse_metrics(out / "metrics.csv")
    record = {"seed": cfg.seed, "algo": cfg.algo,
              "alpha": cfg.planner.alpha, "dir": str(out),
              "final_return": metrics.final_return,
              "returns": metrics.returns}
    if (cfg.model_source == MODEL_LEARNED and cfg.eval_episodes > 0
            and cfg.mode == MODE_MULTI):
        eval_path = out / "eval.csv"
        if not (reuse and done and eval_path.exists()):
            rets = evaluate((out / "dyn.ckpt", out / "rew.ckpt"), cfg.env,
                            cfg.eval_episodes, cfg.seed, cfg.planner,
                            cfg.eval_steps, cfg.algo)
            write_eval_csv(eval_path, rets)
        record["eval_returns"] = read_eval_csv(eval_path)
        record["eval_mean"] = float(np.mean(record["eval_returns"]))
        record["eval_std"] = float(np.std(record["eval_returns"], ddof=1))
    return record


def _worker(args):
    cfg, reuse = args
    try:
        return run_and_eval(cfg, reuse)
    except Exception as exc:      # individual failures recorded, sweep continues
        return {"seed": cfg.seed, "algo": cfg.algo, "alpha": cfg.planner.alpha,
                "dir": cfg.output_dir, "error": f"{type(exc).__name__}: {exc}"}


def _run_parallel(cfgs, workers: Optional[int], reuse: bool) -> list:
    args = [(cfg, reuse) for cfg in cfgs]
    if workers is None:
        workers = max(1, min(len(cfgs), os.cpu_count() or 1))
    if workers <= 1 or len(cfgs) <= 1:
        return [_worker(a) for a in args]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(_worker, args))


def seed_sweep(cfg_template: RunConfig, seeds: Sequence[int],
               algos: Sequence[str] = (ALGO_MAXDIFF, ALGO_NNMPPI),
               out_dir: Optional[str] = None, workers: Optional[int] = None,
               reuse: bool = True) -> dict:
    """Train/evaluate over (seed, algo) pairs and aggregate across seeds.

    Statistics between algorithm pairs are Welch tests over the pooled
    evaluation returns (episodes x seeds per condition).  Failed runs are
    recorded and excluded from aggregates.
    """
    root = Path(out_dir if out_dir is not None else cfg_template.output_dir)
    cfgs = [replace(cfg_template, seed=int(seed), algo=algo,
                    output_dir=str(root / f"{algo}_seed{seed}"))
            for algo in algos for seed in sorted(seeds)]
    records = _run_parallel(cfgs, workers, reuse)
    summary = {"runs": records, "aggregates": {}, "stat_reports": {}}
    pooled = {}
    for algo in algos:
        recs = [r for r in records if r["algo"] == algo and "error" not in r]
        if not recs:
            continue
        finals = [r["final_return"] for r in recs]
        agg = {"seeds": [r["seed"] for r in recs],
               "final_returns": finals,
               "final_mean": float(np.mean(finals)),
               "final_std": float(np.std(finals, ddof=1)) if len(finals) > 1 else 0.0}
        if "eval_mean" in recs[0]:
            ev = [r["eval_mean"] for r in recs]
            agg["eval_means"] = ev
            agg["eval_mean"] = float(np.mean(ev))
            agg["eval_std_across_seeds"] = (float(np.std(ev, ddof=1))
                                            if len(ev) > 1 else 0.0)
            pooled[algo] = np.concatenate([r["eval_returns"] for r in recs])
        summary["aggregates"][algo] = agg
    done_algos = [a for a in algos if a in pooled]
    for i, a in enumerate(done_algos):
        for b in done_algos[i + 1:]:
            summary["stat_reports"][f"{a}_vs_{b}"] = \
                welch_t(pooled[a], pooled[b]).to_dict()
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "sweep_summary.json", "w") as f:
        json.dump(summary, f, indent=1, sort_keys=True)
        f.write("\n")
    return summary


def alpha_sweep(cfg_template: RunConfig, alphas: Sequence[float],
                seeds: Sequence[int] = (0,), out_dir: Optional[str] = None,
                workers: Optional[int] = None, reuse: bool = True) -> dict:
    """Terminal training return as a function of the entropy temperature.

    Runs the maxdiff algorithm per (alpha, seed) on a fixed seed set and
    reports the median-over-seeds terminal return per alpha.
    """
    if len(alphas) < 2:
        raise ConfigError("alpha_sweep needs at least 2 alpha values")
    root = Path(out_dir if out_dir is not None else cfg_template.output_dir)
    cfgs = []
    for alpha in alphas:
        for seed in sorted(seeds):
            name = f"alpha{alpha:g}_seed{seed}"
            cfgs.append(replace(
                cfg_template, seed=int(seed), algo=ALGO_MAXDIFF,
                planner=replace(cfg_template.planner, alpha=float(alpha)),
                output_dir=str(root / name)))
    records = _run_parallel(cfgs, workers, reuse)
    curve = []
    for alpha in alphas:
        recs = [r for r in records
                if r["alpha"] == float(alpha) and "error" not in r]
        finals = [r["final_return"] for r in recs]
        curve.append({"alpha": float(alpha),
                      "median_final_return": float(np.median(finals)) if finals else float("nan"),
                      "final_returns": finals})
    summary = {"runs": records, "curve": curve}
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "alpha_summary.json", "w") as f:
        json.dump(summary, f, indent=1, sort_keys=True)
        f.write("\n")
    return summary


# ---------------------------------------------------------------------------
# baselines

def random_policy_returns(env_spec: EnvSpec, episodes: int, seed: int,
                          eval_steps: int) -> list:
    """Uniform-random-action baseline, measured fresh on this rig."""
    env = make_env(env_spec)
    lo, hi = env.action_bounds

    class RandomPolicy:
        def start_episode(self, rng):
            self.rng = rng

        def __call__(self, state):
            return self.rng.uniform(lo, hi)

    return evaluate_policy(RandomPolicy(), env_spec, episodes, seed, eval_steps)
