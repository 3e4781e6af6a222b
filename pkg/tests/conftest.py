import os

# keep BLAS single-threaded before numpy loads: float-reproducible runs,
# no oversubscription when sweeps fork workers
for _v in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_v, "1")

from pathlib import Path

import numpy as np
import pytest

from maxdiff import envs, learning


RESULTS_ROOT = Path(__file__).resolve().parent.parent / "results"


@pytest.fixture(scope="session")
def results_root():
    RESULTS_ROOT.mkdir(exist_ok=True)
    return RESULTS_ROOT


def collect_pointmass_transitions(n, seed, beta=1.0):
    """Random-action transitions from the point mass, with next actions."""
    rng = np.random.default_rng(seed)
    env = envs.make_env(envs.EnvSpec.pointmass(beta=beta))
    lo, hi = env.action_bounds
    states = np.empty((n, env.d))
    actions = np.empty((n, env.m))
    rewards = np.empty(n)
    next_states = np.empty((n, env.d))
    next_actions = np.full((n, env.m), np.nan)
    state = env.reset(int(rng.integers(2 ** 63)))
    prev = None
    for i in range(n):
        a = rng.uniform(lo, hi)
        sr = env.step(state, a)
        states[i], actions[i], rewards[i], next_states[i] = state, a, sr.reward, sr.next_state
        if prev is not None:
            next_actions[prev] = a
        prev = None if sr.done else i
        state = env.reset(int(rng.integers(2 ** 63))) if sr.done else sr.next_state
    return states, actions, rewards, next_states, next_actions


@pytest.fixture(scope="session")
def trained_pointmass_models():
    """Dynamics + reward nets trained on 10^4 random-action transitions.

    Shared by the model-quality, reward-correlation and rollout-accuracy
    tests; takes about a minute.
    """
    n = 10_000
    s, a, r, ns, na = collect_pointmass_transitions(n, seed=123)
    rng = np.random.default_rng(7)
    dyn = learning.init_params([6, 128, 128, 4], rng, with_log_var=True)
    rew = learning.init_params([6, 128, 128, 1], rng)
    dyn_opt = learning.AdamState.init(dyn.flat_weights.size + 4, 5e-4)
    rew_opt = learning.AdamState.init(rew.flat_weights.size, 5e-4)
    batch = 128
    n_train = 9000
    for epoch in range(200):
        perm = rng.permutation(n_train)
        for k in range(0, n_train, batch):
            idx = perm[k:k + batch]
            dyn, dyn_opt, _ = learning.dynamics_update(
                dyn, dyn_opt, s[idx], a[idx], ns[idx] - s[idx])
            rew, rew_opt, _ = learning.reward_update(
                rew, rew_opt, s[idx], a[idx], r[idx], ns[idx], na[idx])
    holdout = (s[n_train:], a[n_train:], r[n_train:], ns[n_train:])
    return dyn, rew, holdout
