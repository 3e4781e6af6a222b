"""Run-config files: flat INI-style sections with strict key checking.

Sections [env], [planner], [learning], [run]; every key is validated against
a whitelist (and, for [env], against the environment kind) so typos fail
loudly with the offending key name.
"""

from __future__ import annotations

import configparser

import numpy as np

from .correlations import ExplorationProjection
from .envs import EnvSpec, PotentialField
from .errors import ConfigError
from .harness import LearnConfig, RunConfig
from .planners import PlannerConfig

ENV_KEYS = {
    "pointmass": {"kind", "dt", "beta", "init_noise"},
    "diffdrive": {"kind", "dt", "potential", "potential_k", "potential_center",
                  "potential_sigma"},
    "slip": {"kind", "dt", "mass", "stiffness", "rest_length", "gravity",
             "substeps"},
    "lti": {"kind", "dt", "a", "b", "x0"},
}
PLANNER_KEYS = {"horizon", "samples", "lambda", "alpha", "gamma",
                "entropy_mode", "proj_indices", "proj_weights", "noise_sigma"}
LEARNING_KEYS = {"layers", "lr", "batch_size", "replay_capacity"}
RUN_KEYS = {"algo", "mode", "total_steps", "epoch_len", "warmup_steps",
            "seed", "model_source", "eval_episodes", "eval_steps",
            "save_trajectories"}


def _floats(text: str) -> list:
    return [float(x) for x in text.replace(",", " ").split()]


def _ints(text: str) -> list:
    return [int(x) for x in text.replace(",", " ").split()]


def _matrix(text: str) -> np.ndarray:
    return np.array([[float(x) for x in row.split()]
                     for row in text.split(";")])


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"bad boolean value {text!r}")


def _check_keys(section: str, keys, allowed):
    for k in keys:
        if k not in allowed:
            raise ConfigError(f"unknown key '{k}' in section [{section}]")


def _parse_env(sec) -> EnvSpec:
    if "kind" not in sec:
        raise ConfigError("missing key 'kind' in section [env]")
    kind = sec["kind"].strip().lower()
    if kind not in ENV_KEYS:
        raise ConfigError(f"unknown environment kind {kind!r}")
    _check_keys("env", sec.keys(), ENV_KEYS[kind])
    if kind == "pointmass":
        return EnvSpec.pointmass(beta=float(sec.get("beta", 1.0)),
                                 dt=float(sec.get("dt", 0.1)),
                                 init_noise=float(sec.get("init_noise", 0.01)))
    if kind == "diffdrive":
        pot_kind = sec.get("potential", "quadratic").strip().lower()
        if pot_kind == "quadratic":
            center = _floats(sec.get("potential_center", "0 0"))
            pot = PotentialField.quadratic(center,
                                           k=float(sec.get("potential_k", 1.0)))
        elif pot_kind == "bimodal":
            pot = PotentialField.bimodal(
                sigma=float(sec.get("potential_sigma", 1.0)))
        elif pot_kind == "flat":
            pot = PotentialField.flat()
        else:
            raise ConfigError(f"unknown potential {pot_kind!r}")
        return EnvSpec.diffdrive(pot, dt=float(sec.get("dt", 0.1)))
    if kind == "slip":
        return EnvSpec.slip(mass=float(sec.get("mass", 1.0)),
                            stiffness=float(sec.get("stiffness", 1000.0)),
                            rest_length=float(sec.get("rest_length", 1.0)),
                            gravity=float(sec.get("gravity", 9.81)),
                            dt=float(sec.get("dt", 1e-3)),
                            substeps=int(sec.get("substeps", 10)))
    for key in ("a", "b"):
        if key not in sec:
            raise ConfigError(f"missing key '{key}' in section [env] for lti")
    A = _matrix(sec["a"])
    B = _matrix(sec["b"])
    x0 = np.array(_floats(sec["x0"])) if "x0" in sec else None
    return EnvSpec.lti(A, B, x0, dt=float(sec.get("dt", 0.1)))


def _parse_planner(sec, env: EnvSpec) -> PlannerConfig:
    _check_keys("planner", sec.keys(), PLANNER_KEYS)
    if "proj_indices" in sec:
        indices = _ints(sec["proj_indices"])
    else:
        indices = list(range(env.d))
    if "proj_weights" in sec:
        weights = _floats(sec["proj_weights"])
    else:
        weights = [1.0] * len(indices)
    proj = ExplorationProjection(tuple(indices), tuple(weights))
    sigma = None
    if "noise_sigma" in sec:
        vals = _floats(sec["noise_sigma"])
        sigma = np.array(vals[0] if len(vals) == 1 else vals)
    return PlannerConfig(horizon=int(sec.get("horizon", 30)),
                         samples=int(sec.get("samples", 500)),
                         lam=float(sec.get("lambda", 0.5)),
                         alpha=float(sec.get("alpha", 5.0)),
                         gamma=float(sec.get("gamma", 0.95)),
                         proj=proj, noise_sigma=sigma,
                         entropy_mode=sec.get("entropy_mode", "full").strip())


def _parse_learning(sec) -> LearnConfig:
    _check_keys("learning", sec.keys(), LEARNING_KEYS)
    return LearnConfig(layers=tuple(_ints(sec.get("layers", "128,128"))),
                       lr=float(sec.get("lr", 0.0005)),
                       batch_size=int(sec.get("batch_size", 128)),
                       replay_capacity=int(sec.get("replay_capacity", 1_000_000)))


def parse_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse a config file into a RunConfig; `overrides` wins over file keys
    for seed/algo/mode/output_dir."""
    cp = configparser.ConfigParser(interpolation=None)
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    known_sections = {"env", "planner", "learning", "run"}
    for s in cp.sections():
        if s not in known_sections:
            raise ConfigError(f"unknown section [{s}]")
    if not cp.has_section("env"):
        raise ConfigError("missing section [env]")
    env = _parse_env(cp["env"])
    planner = _parse_planner(cp["planner"] if cp.has_section("planner") else {},
                             env)
    learn = _parse_learning(cp["learning"] if cp.has_section("learning") else {})
    run_sec = cp["run"] if cp.has_section("run") else {}
    _check_keys("run", run_sec.keys(), RUN_KEYS)
    kwargs = dict(
        env=env, planner=planner, learn=learn,
        algo=run_sec.get("algo", "maxdiff").strip(),
        mode=run_sec.get("mode", "multi").strip(),
        total_steps=int(run_sec.get("total_steps", 50_000)),
        epoch_len=int(run_sec.get("epoch_len", 1000)),
        warmup_steps=int(run_sec.get("warmup_steps", 1000)),
        seed=int(run_sec.get("seed", 0)),
        model_source=run_sec.get("model_source", "learned").strip(),
        eval_episodes=int(run_sec.get("eval_episodes", 100)),
        eval_steps=int(run_sec.get("eval_steps", 300)),
        save_traj=_bool(run_sec.get("save_trajectories", "false")),
    )
    if overrides:
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**kwargs)
