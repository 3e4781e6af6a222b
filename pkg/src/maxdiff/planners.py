"""Sampling-based receding-horizon planner over learned or ground-truth
models, scored by discounted reward plus an optional path-entropy bonus.

With alpha = 0 the scorer is plain discounted return and the planner is an
ordinary MPPI loop; the entropy bonus is the only difference between the two
algorithms, so that code path is skipped entirely at alpha = 0.

The K sampled rollouts are evaluated as one batch; weights are reduced in
fixed index order, so planning is deterministic given the RNG state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg

from .correlations import (ExplorationProjection, batched_logdet_entropy,
                           batched_window_corr, estimate_corr, logdet_entropy)
from .envs import Env
from .errors import ConfigError, NonConvergenceError
from .learning import NetParams
from .trajectory import Trajectory

try:
    import numba
    HAVE_NUMBA = True
except ImportError:      # pragma: no cover - numba is an optional speedup
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# planning models

class _CachedNet:
    """Float32 copy of a trained net; planning is GEMM-bound and the extra
    precision buys nothing over the model error."""

    def __init__(self, params: NetParams, dtype=np.float32):
        self.dtype = dtype
        self.layers = [(np.ascontiguousarray(w, dtype=dtype),
                        b.astype(dtype)) for w, b in params.views()]

    def make_buffers(self, n: int):
        return [np.empty((n, w.shape[1]), dtype=self.dtype)
                for w, _ in self.layers]

    def forward_into(self, x, bufs):
        """Forward pass writing each layer into a preallocated buffer; the
        returned array is bufs[-1]."""
        h = x
        last = len(self.layers) - 1
        for li, (w, b) in enumerate(self.layers):
            out = bufs[li]
            np.matmul(h, w, out=out)
            out += b
            if li != last:
                np.maximum(out, 0.0, out=out)
            h = out
        return h

    def forward(self, x):
        return self.forward_into(np.asarray(x, dtype=self.dtype),
                                 self.make_buffers(x.shape[0]))


class LearnedDynamics(_CachedNet):
    """Mean-residual rollout model backed by a trained network."""

    def predict_batch(self, states, actions):
        x = np.concatenate([states, actions], axis=-1, dtype=self.dtype)
        return states + self.forward(x)


class LearnedReward(_CachedNet):
    """Reward network evaluated at the visited (state, action) pairs."""

    def reward_rollout(self, states, actions):
        """states (K, H+1, d), actions (K, H, m) -> rewards (K, H)."""
        k, h, m = actions.shape
        x = np.concatenate([states[:, :h].reshape(k * h, -1),
                            actions.reshape(k * h, m)],
                           axis=-1, dtype=self.dtype)
        return self.forward(x).reshape(k, h)


def _fused_learned_rollout(dyn: LearnedDynamics, rew: LearnedReward,
                           x0, actions):
    """Rollout + reward for the learned pair.

    Time-major internally so every horizon step works on contiguous
    cache-resident blocks, with all intermediates preallocated.
    """
    k, h, m = actions.shape
    d = x0.shape[-1]
    dt32 = dyn.dtype
    states_tm = np.empty((h + 1, k, d), dtype=dt32)
    states_tm[0] = x0
    rewards_tm = np.empty((h, k), dtype=dt32)
    xu = np.empty((k, d + m), dtype=dt32)
    acts_tm = np.ascontiguousarray(actions.swapaxes(0, 1), dtype=dt32)
    dyn_bufs = dyn.make_buffers(k)
    rew_bufs = rew.make_buffers(k)
    for t in range(h):
        xu[:, :d] = states_tm[t]
        xu[:, d:] = acts_tm[t]
        delta = dyn.forward_into(xu, dyn_bufs)
        rewards_tm[t] = rew.forward_into(xu, rew_bufs)[:, 0]
        np.add(states_tm[t], delta, out=states_tm[t + 1])
    states = np.ascontiguousarray(states_tm.swapaxes(0, 1))
    return states, rewards_tm.T.copy()


if HAVE_NUMBA:

    @numba.njit(cache=True, fastmath=True)
    def _rollout_kernel_2h(x0, acts_tm, w1d, b1d, w2d, b2d, w3d, b3d,
                           w1r, b1r, w2r, b2r, w3r, b3r):
        h, k, m = acts_tm.shape
        d = x0.shape[1]
        states = np.empty((h + 1, k, d), dtype=np.float32)
        states[0] = x0
        rewards = np.empty((h, k), dtype=np.float32)
        xu = np.empty((k, d + m), dtype=np.float32)
        for t in range(h):
            xu[:, :d] = states[t]
            xu[:, d:] = acts_tm[t]
            h1 = np.maximum(np.dot(xu, w1d) + b1d, np.float32(0.0))
            h2 = np.maximum(np.dot(h1, w2d) + b2d, np.float32(0.0))
            delta = np.dot(h2, w3d) + b3d
            g1 = np.maximum(np.dot(xu, w1r) + b1r, np.float32(0.0))
            g2 = np.maximum(np.dot(g1, w2r) + b2r, np.float32(0.0))
            r = np.dot(g2, w3r) + b3r
            rewards[t] = r[:, 0]
            states[t + 1] = states[t] + delta
        return states, rewards


def _learned_rollout(dyn: LearnedDynamics, rew: LearnedReward, x0, actions):
    """Dispatch to the jitted kernel for the common two-hidden-layer nets."""
    if (HAVE_NUMBA and dyn.dtype == np.float32
            and len(dyn.layers) == 3 and len(rew.layers) == 3):
        k, h, m = actions.shape
        x0_rows = np.broadcast_to(
            np.asarray(x0, dtype=np.float32), (k, x0.shape[-1])).copy()
        acts_tm = np.ascontiguousarray(actions.swapaxes(0, 1), dtype=np.float32)
        (w1d, b1d), (w2d, b2d), (w3d, b3d) = dyn.layers
        (w1r, b1r), (w2r, b2r), (w3r, b3r) = rew.layers
        states_tm, rewards_tm = _rollout_kernel_2h(
            x0_rows, acts_tm, w1d, b1d, w2d, b2d, w3d, b3d,
            w1r, b1r, w2r, b2r, w3r, b3r)
        return (np.ascontiguousarray(states_tm.swapaxes(0, 1)),
                rewards_tm.T.copy())
    return _fused_learned_rollout(dyn, rew, x0, actions)


class GroundTruthDynamics:
    """Environment stepper used directly as the rollout model (oracle runs)."""

    def __init__(self, env: Env):
        self.env = env
        self.dtype = np.float64

    def predict_batch(self, states, actions):
        nxt, _, _ = self.env.step_batch(states, actions)
        return nxt


class GroundTruthReward:
    def __init__(self, env: Env):
        self.env = env

    def reward_rollout(self, states, actions):
        h = actions.shape[1]
        return np.stack([self.env.reward_batch(states[:, t], actions[:, t])
                         for t in range(h)], axis=1)


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class PlannerConfig:
    """Horizon, sampling and scoring parameters of the planner."""

    horizon: int = 30
    samples: int = 500
    lam: float = 0.5
    alpha: float = 5.0
    gamma: float = 0.95
    proj: ExplorationProjection = field(
        default_factory=lambda: ExplorationProjection.identity(4))
    noise_sigma: Optional[np.ndarray] = None
    action_bounds: Optional[np.ndarray] = None
    entropy_mode: str = "full"

    def __post_init__(self):
        if self.horizon < 2:
            raise ConfigError("horizon must be >= 2")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.lam <= 0:
            raise ConfigError("lambda must be positive")
        if self.alpha < 0:
            raise ConfigError("alpha must be nonnegative")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must be in [0, 1)")

    def resolved(self, env: Env) -> "PlannerConfig":
        """Fill action bounds from the env and default the noise scale to
        0.3 x action range per dimension."""
        bounds = self.action_bounds if self.action_bounds is not None \
            else env.action_bounds
        bounds = np.asarray(bounds, dtype=float)
        if bounds.shape != (2, env.m):
            raise ConfigError(f"action_bounds shape {bounds.shape} != (2, {env.m})")
        sigma = self.noise_sigma
        if sigma is None:
            rng_width = bounds[1] - bounds[0]
            if not np.all(np.isfinite(rng_width)):
                raise ConfigError(
                    "noise_sigma must be given explicitly for unbounded actions")
            sigma = 0.3 * rng_width
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (env.m,)).copy()
        if np.any(sigma <= 0):
            raise ConfigError("noise_sigma must be positive")
        return replace(self, action_bounds=bounds, noise_sigma=sigma)


# ---------------------------------------------------------------------------
# rollouts and scoring

def rollout_batch(model, reward, x0, actions):
    """Mean rollouts of K action sequences from a shared start state.

    actions: (K, H, m).  Returns states (K, H+1, d), rewards (K, H) and a
    failure mask for rollouts that left the finite range.  Non-finite values
    propagate through the remaining steps, so checking the final state
    catches a blowup anywhere along the rollout.
    """
    k, h, _ = actions.shape
    x0 = np.asarray(x0, dtype=model.dtype)
    if isinstance(model, LearnedDynamics) and isinstance(reward, LearnedReward):
        states, rewards = _learned_rollout(model, reward, x0, actions)
    else:
        states = np.empty((k, h + 1, x0.shape[-1]), dtype=model.dtype)
        states[:, 0] = x0
        acts = actions.astype(model.dtype, copy=False)
        for t in range(h):
            states[:, t + 1] = model.predict_batch(states[:, t], acts[:, t])
        rewards = reward.reward_rollout(states, acts)
    failed = ~np.all(np.isfinite(states[:, -1]), axis=-1)
    failed |= ~np.all(np.isfinite(rewards), axis=-1)
    if np.any(failed):
        states = np.where(failed[:, None, None],
                          np.nan_to_num(states, nan=0.0, posinf=0.0, neginf=0.0),
                          states)
        rewards = np.where(failed[:, None],
                           np.nan_to_num(rewards, nan=0.0, posinf=0.0, neginf=0.0),
                           rewards)
    return states, rewards, failed


def rollout(model, reward, x0, actions) -> Trajectory:
    """Single mean rollout; failed rollouts carry total reward -inf."""
    actions = np.asarray(actions, dtype=float)
    if actions.ndim != 2:
        raise ConfigError(f"actions must be (H, m), got {actions.shape}")
    states, rewards, failed = rollout_batch(model, reward, x0, actions[None])
    traj = Trajectory(states[0].astype(float), actions,
                      rewards[0].astype(float), failed=bool(failed[0]))
    if traj.failed:
        traj.rewards = np.full(actions.shape[0], -np.inf)
    return traj


def maxdiff_return(traj: Trajectory, cfg: PlannerConfig) -> float:
    """Discounted return plus the per-rollout path-entropy bonus.

    The correlation window is the H predicted states; the bonus is applied
    once per rollout and is not discounted.
    """
    if traj.failed:
        return -np.inf
    h = traj.rewards.shape[0]
    disc = cfg.gamma ** np.arange(h)
    total = float(traj.rewards @ disc)
    if cfg.alpha > 0:
        c = estimate_corr(traj.states[1:], cfg.proj, dt=1.0)
        total += cfg.alpha * logdet_entropy(c, cfg.entropy_mode)
    return total


def score_rollouts(states, rewards, failed, cfg: PlannerConfig) -> np.ndarray:
    """Vectorized maxdiff_return over a rollout batch."""
    h = rewards.shape[1]
    disc = cfg.gamma ** np.arange(h)
    total = rewards.astype(float) @ disc
    if cfg.alpha > 0:
        c = batched_window_corr(states[:, 1:].astype(float), cfg.proj)
        total = total + cfg.alpha * batched_logdet_entropy(c, cfg.entropy_mode)
    total[failed] = -np.inf
    return total


@dataclass
class PlanResult:
    action: np.ndarray
    nominal: np.ndarray          # warm start for the next call (shifted)
    weighted_plan: np.ndarray    # softmax-averaged sequence before the shift
    returns: np.ndarray
    weights: np.ndarray
    failed: bool = False


def mppi_plan(model, reward, x0, nominal, cfg: PlannerConfig,
              rng: np.random.Generator) -> PlanResult:
    """One receding-horizon step.

    Samples K Gaussian perturbations of the nominal sequence, clamps to the
    action bounds, scores the rollouts, and softmax-averages the sequences
    with a max-shifted exponent for numerical stability.  The executed action
    is the first step of the averaged plan; the carried nominal is that plan
    shifted left with its last action repeated.
    """
    if cfg.action_bounds is None or cfg.noise_sigma is None:
        raise ConfigError("planner config must be resolved against an env first")
    nominal = np.asarray(nominal, dtype=float)
    h, m = cfg.horizon, nominal.shape[1]
    if nominal.shape != (h, m):
        raise ConfigError(f"nominal shape {nominal.shape} != ({h}, {m})")
    u = rng.standard_normal((cfg.samples, h, m))
    u *= cfg.noise_sigma
    u += nominal
    np.maximum(u, cfg.action_bounds[0], out=u)
    np.minimum(u, cfg.action_bounds[1], out=u)
    states, rewards, failed = rollout_batch(model, reward, x0, u)
    returns = score_rollouts(states, rewards, failed, cfg)
    if not np.any(np.isfinite(returns)):
        weights = np.zeros(cfg.samples)
        return PlanResult(np.zeros(m), nominal, nominal.copy(),
                          returns, weights, failed=True)
    shifted = returns - np.max(returns[np.isfinite(returns)])
    weights = np.exp(shifted / cfg.lam)
    weights[~np.isfinite(returns)] = 0.0
    weights /= weights.sum()
    plan = np.einsum("k,khm->hm", weights, u)
    next_nominal = np.concatenate([plan[1:], plan[-1:]], axis=0)
    return PlanResult(plan[0].copy(), next_nominal, plan, returns, weights)


# ---------------------------------------------------------------------------
# discrete LQR oracle

@dataclass(frozen=True)
class LqrResult:
    gain: np.ndarray
    P: np.ndarray
    iterations: int
    residual: float


def discretize_lti(A, B, dt: float):
    """Exact zero-order-hold discretization via the augmented exponential."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    d, m = B.shape
    aug = np.zeros((d + m, d + m))
    aug[:d, :d] = A * dt
    aug[:d, d:] = B * dt
    e = scipy.linalg.expm(aug)
    return e[:d, :d], e[:d, d:]


def lqr_solve(A, B, Q, R, iters: int = 100_000, tol: float = 1e-10) -> LqrResult:
    """Fixed point of the discrete Riccati recursion; u = -K x.

    Converges for stabilizable (A, B); divergence (e.g. an unstable
    uncontrollable mode) raises NonConvergenceError carrying the residual.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    d = A.shape[0]
    if A.shape != (d, d) or B.shape[0] != d:
        raise ConfigError("A/B dimensions inconsistent")
    if Q.shape != (d, d) or R.shape != (B.shape[1], B.shape[1]):
        raise ConfigError("Q/R dimensions inconsistent")
    P = Q.copy()
    residual = np.inf
    for it in range(1, iters + 1):
        btp = B.T @ P
        gain = np.linalg.solve(R + btp @ B, btp @ A)
        P_new = Q + A.T @ P @ (A - B @ gain)
        P_new = 0.5 * (P_new + P_new.T)
        residual = float(np.max(np.abs(P_new - P)) / max(1.0, np.max(np.abs(P))))
        P = P_new
        if not np.all(np.isfinite(P)) or np.max(np.abs(P)) > 1e14:
            raise NonConvergenceError(
                f"Riccati recursion diverged after {it} iterations",
                residual=residual)
        if residual < tol:
            btp = B.T @ P
            gain = np.linalg.solve(R + btp @ B, btp @ A)
            return LqrResult(gain, P, it, residual)
    raise NonConvergenceError(
        f"Riccati recursion did not converge in {iters} iterations",
        residual=residual)
