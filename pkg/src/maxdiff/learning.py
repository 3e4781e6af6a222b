"""Fully-connected dynamics/reward models trained from scratch.

The dynamics model predicts the state residual (next = state + mean) under a
Gaussian likelihood with a globally learned diagonal log-variance.  The
reward model is trained with a bootstrapped squared error where the target
term is treated as a constant.  Gradients are hand-derived; the optimizer is
standard Adam with bias correction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, InsufficientDataError

LOG_VAR_MIN = -10.0
LOG_VAR_MAX = 4.0
REWARD_BOOTSTRAP = 0.95

CKPT_MAGIC = "maxdiff-ckpt 1"
REPLAY_MAGIC = {"format": "maxdiff-replay", "version": 1}


# ---------------------------------------------------------------------------
# parameters

@dataclass
class NetParams:
    """Flat parameter vector plus the layer-shape manifest.

    Layout: per layer in order, the row-major (fan_in, fan_out) weight block
    followed by the bias block.  log_var is the learned observation
    log-variance of the dynamics model (None for the reward model).
    """

    layer_shapes: list
    flat_weights: np.ndarray
    log_var: Optional[np.ndarray] = None

    def __post_init__(self):
        expected = sum(i * o + o for i, o in self.layer_shapes)
        if self.flat_weights.shape != (expected,):
            raise ConfigError(
                f"flat_weights length {self.flat_weights.shape} != expected ({expected},)")

    def views(self):
        """(W, b) array views into the flat vector, one pair per layer."""
        out = []
        pos = 0
        for fan_in, fan_out in self.layer_shapes:
            w = self.flat_weights[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out)
            pos += fan_in * fan_out
            b = self.flat_weights[pos:pos + fan_out]
            pos += fan_out
            out.append((w, b))
        return out

    @property
    def in_dim(self) -> int:
        return self.layer_shapes[0][0]

    @property
    def out_dim(self) -> int:
        return self.layer_shapes[-1][1]

    def copy(self) -> "NetParams":
        return NetParams(list(self.layer_shapes), self.flat_weights.copy(),
                         None if self.log_var is None else self.log_var.copy())


def init_params(sizes: Sequence[int], rng: np.random.Generator,
                with_log_var: bool = False) -> NetParams:
    """Uniform +-1/sqrt(fan_in) initialization for weights and biases."""
    shapes = [(int(sizes[i]), int(sizes[i + 1])) for i in range(len(sizes) - 1)]
    blocks = []
    for fan_in, fan_out in shapes:
        bound = 1.0 / np.sqrt(fan_in)
        blocks.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
        blocks.append(rng.uniform(-bound, bound, size=fan_out))
    flat = np.concatenate(blocks)
    log_var = np.zeros(shapes[-1][1]) if with_log_var else None
    return NetParams(shapes, flat, log_var)


def clamp_log_var(log_var: np.ndarray) -> np.ndarray:
    return np.clip(log_var, LOG_VAR_MIN, LOG_VAR_MAX)


# ---------------------------------------------------------------------------
# forward / backward

def mlp_forward(params: NetParams, x: np.ndarray, want_cache: bool = False):
    """ReLU MLP with a linear output layer.  x: (n, in_dim) or (in_dim,)."""
    single = x.ndim == 1
    h = x[None] if single else x
    if h.shape[-1] != params.in_dim:
        raise ConfigError(f"input dim {h.shape[-1]} != network in_dim {params.in_dim}")
    layers = params.views()
    activations = [h]
    for w, b in layers[:-1]:
        h = h @ w + b
        np.maximum(h, 0.0, out=h)
        activations.append(h)
    w, b = layers[-1]
    out = h @ w + b
    if want_cache:
        return out, activations
    return out[0] if single else out


def mlp_backward(params: NetParams, activations, d_out: np.ndarray) -> np.ndarray:
    """Gradient of a scalar loss w.r.t. the flat parameter vector, given the
    loss gradient at the network output (same batch shape as the output)."""
    layers = params.views()
    grads = [None] * len(layers)
    dh = d_out
    for li in range(len(layers) - 1, -1, -1):
        w, _ = layers[li]
        a = activations[li]
        gw = a.T @ dh
        gb = dh.sum(axis=0)
        grads[li] = (gw, gb)
        if li > 0:
            dh = (dh @ w.T) * (activations[li] > 0.0)
    return np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])


# ---------------------------------------------------------------------------
# dynamics model

def forward_dynamics(params: NetParams, state: np.ndarray, action: np.ndarray):
    """Residual mean prediction and the shared log-variance vector.

    state (d,) or (n, d); action (m,) or (n, m).  Predicted next state is
    state + delta_mean.
    """
    x = np.concatenate([state, action], axis=-1)
    delta_mean = mlp_forward(params, x)
    return delta_mean, params.log_var


def nll_loss(delta_mean, log_var, target_delta) -> float:
    """Gaussian negative log-likelihood, summed over output dims and averaged
    over the batch: 0.5 * sum_i [(t_i - mu_i)^2 / exp(lv_i) + lv_i + log 2pi]."""
    mu = np.atleast_2d(np.asarray(delta_mean, dtype=float))
    t = np.atleast_2d(np.asarray(target_delta, dtype=float))
    lv = np.asarray(log_var, dtype=float)
    err2 = (t - mu) ** 2
    per_sample = 0.5 * np.sum(err2 / np.exp(lv) + lv + np.log(2.0 * np.pi), axis=-1)
    return float(np.mean(per_sample))


def dynamics_loss_and_grad(params: NetParams, states, actions, target_deltas):
    """NLL loss, flat-weight gradient, and log-var gradient for one batch."""
    x = np.concatenate([states, actions], axis=-1)
    mu, cache = mlp_forward(params, x, want_cache=True)
    t = np.asarray(target_deltas, dtype=float)
    n = mu.shape[0]
    lv = params.log_var
    inv_var = np.exp(-lv)
    err = mu - t
    loss = float(np.mean(
        0.5 * np.sum(err ** 2 * inv_var + lv + np.log(2.0 * np.pi), axis=-1)))
    d_out = err * inv_var / n
    g_flat = mlp_backward(params, cache, d_out)
    g_lv = 0.5 * np.mean(1.0 - err ** 2 * inv_var, axis=0)
    return loss, g_flat, g_lv


# ---------------------------------------------------------------------------
# reward model

def forward_reward(params: NetParams, state: np.ndarray, action: np.ndarray):
    """Scalar reward prediction; returns shape () for single inputs, (n,) for batches."""
    x = np.concatenate([state, action], axis=-1)
    out = mlp_forward(params, x)
    return out[..., 0]


def _reward_targets(params_r, rewards, next_states, next_actions):
    """Bootstrapped targets with the next-step term held constant.  Rows with
    a non-finite next action (episode end, or successor not yet recorded)
    fall back to the plain reward."""
    rewards = np.asarray(rewards, dtype=float)
    has_next = np.all(np.isfinite(next_actions), axis=-1)
    targets = rewards.copy()
    if np.any(has_next):
        r_next = forward_reward(params_r, next_states[has_next],
                                next_actions[has_next])
        targets[has_next] = rewards[has_next] + REWARD_BOOTSTRAP * r_next
    return targets


def reward_loss(params_r: NetParams, batch, next_actions) -> float:
    """Mean squared bootstrap error over a batch of transitions."""
    states = np.stack([tr.state for tr in batch])
    actions = np.stack([tr.action for tr in batch])
    rewards = np.array([tr.reward for tr in batch], dtype=float)
    next_states = np.stack([tr.next_state for tr in batch])
    next_actions = np.stack([
        np.full(actions.shape[-1], np.nan) if ua is None else np.asarray(ua, dtype=float)
        for ua in next_actions])
    loss, _ = reward_loss_and_grad(params_r, states, actions, rewards,
                                   next_states, next_actions)
    return loss


def reward_loss_and_grad(params_r: NetParams, states, actions, rewards,
                         next_states, next_actions):
    targets = _reward_targets(params_r, rewards, next_states, next_actions)
    x = np.concatenate([states, actions], axis=-1)
    out, cache = mlp_forward(params_r, x, want_cache=True)
    pred = out[:, 0]
    n = pred.shape[0]
    err = pred - targets
    loss = float(np.mean(err ** 2))
    d_out = (2.0 * err / n)[:, None]
    g_flat = mlp_backward(params_r, cache, d_out)
    return loss, g_flat


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def init(n: int, lr: float) -> "AdamState":
        return AdamState(np.zeros(n), np.zeros(n), 0, lr)


def adam_step(params: np.ndarray, grads: np.ndarray, opt: AdamState):
    """One bias-corrected Adam update; returns (new_params, new_state)."""
    if params.shape != grads.shape:
        raise ConfigError("params/grads shape mismatch")
    t = opt.t + 1
    m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grads
    v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grads ** 2
    m_hat = m / (1.0 - opt.beta1 ** t)
    v_hat = v / (1.0 - opt.beta2 ** t)
    new_params = params - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)
    return new_params, replace(opt, m=m, v=v, t=t)


def dynamics_update(params: NetParams, opt: AdamState, states, actions,
                    target_deltas):
    """One Adam step on (flat weights + log_var); clamps log_var after."""
    loss, g_flat, g_lv = dynamics_loss_and_grad(params, states, actions,
                                                target_deltas)
    p = np.concatenate([params.flat_weights, params.log_var])
    g = np.concatenate([g_flat, g_lv])
    p_new, opt = adam_step(p, g, opt)
    nw = p_new[:params.flat_weights.size]
    lv = clamp_log_var(p_new[params.flat_weights.size:])
    return NetParams(params.layer_shapes, nw, lv), opt, loss


def reward_update(params_r: NetParams, opt: AdamState, states, actions,
                  rewards, next_states, next_actions):
    loss, g_flat = reward_loss_and_grad(params_r, states, actions, rewards,
                                        next_states, next_actions)
    p_new, opt = adam_step(params_r.flat_weights, g_flat, opt)
    return NetParams(params_r.layer_shapes, p_new, None), opt, loss


def lipschitz_bound(params: NetParams) -> float:
    """Product of layer spectral norms; ReLU is 1-Lipschitz."""
    bound = 1.0
    for w, _ in params.views():
        bound *= float(np.linalg.norm(w, 2))
    return bound


# ---------------------------------------------------------------------------
# replay buffer

@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """Ring buffer of transitions with uniform with-replacement sampling.

    Alongside each transition the action taken from its next state is
    recorded once known (NaN otherwise), for the bootstrapped reward loss.
    """

    def __init__(self, capacity: int = 1_000_000):
        if capacity < 1:
            raise ConfigError("capacity must be positive")
        self.capacity = int(capacity)
        self._n = 0
        self._head = 0
        self._last = None          # index of the most recently pushed record
        self._states = None

    def _alloc(self, d: int, m: int):
        c = self.capacity
        self._states = np.empty((c, d))
        self._actions = np.empty((c, m))
        self._rewards = np.empty(c)
        self._next_states = np.empty((c, d))
        self._dones = np.empty(c, dtype=bool)
        self._next_actions = np.full((c, m), np.nan)

    def __len__(self):
        return self._n

    def push(self, tr: Transition):
        s = np.asarray(tr.state, dtype=float)
        a = np.asarray(tr.action, dtype=float)
        if self._states is None:
            self._alloc(s.shape[0], a.shape[0])
        i = self._head
        self._states[i] = s
        self._actions[i] = a
        self._rewards[i] = tr.reward
        self._next_states[i] = np.asarray(tr.next_state, dtype=float)
        self._dones[i] = tr.done
        self._next_actions[i] = np.nan
        self._last = i
        self._head = (i + 1) % self.capacity
        self._n = min(self._n + 1, self.capacity)

    def attach_next_action(self, action):
        """Record the action taken from the newest transition's next state.

        No-op after a terminal transition: the following action belongs to a
        fresh episode.
        """
        if self._last is None or self._dones[self._last]:
            return
        self._next_actions[self._last] = np.asarray(action, dtype=float)

    def _require(self, batch_size: int):
        if batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self._n < batch_size:
            raise InsufficientDataError(
                f"buffer holds {self._n} transitions, need {batch_size}")

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample with replacement, as a list of Transitions."""
        self._require(batch_size)
        idx = rng.integers(0, self._n, size=batch_size)
        return [Transition(self._states[i].copy(), self._actions[i].copy(),
                           float(self._rewards[i]), self._next_states[i].copy(),
                           bool(self._dones[i])) for i in idx]

    def sample_arrays(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample as stacked arrays (training fast path)."""
        self._require(batch_size)
        idx = rng.integers(0, self._n, size=batch_size)
        return (self._states[idx], self._actions[idx], self._rewards[idx],
                self._next_states[idx], self._dones[idx],
                self._next_actions[idx])

    # persistence ----------------------------------------------------------

    def save(self, path):
        with open(path, "w") as f:
            f.write(json.dumps(REPLAY_MAGIC) + "\n")
            for i in range(self._n):
                na = self._next_actions[i]
                rec = {"state": self._states[i].tolist(),
                       "action": self._actions[i].tolist(),
                       "reward": float(self._rewards[i]),
                       "next_state": self._next_states[i].tolist(),
                       "done": bool(self._dones[i]),
                       "next_action": (na.tolist() if np.all(np.isfinite(na))
                                       else None)}
                f.write(json.dumps(rec) + "\n")

    @classmethod
    def load(cls, path, capacity: int = 1_000_000) -> "ReplayBuffer":
        buf = cls(capacity)
        with open(path) as f:
            magic = json.loads(f.readline())
            if magic.get("format") != REPLAY_MAGIC["format"]:
                raise ConfigError(f"{path}: not a replay file")
            for line in f:
                if not line.strip():
                    continue
                rec = json.loads(line)
                buf.push(Transition(np.asarray(rec["state"]),
                                    np.asarray(rec["action"]),
                                    float(rec["reward"]),
                                    np.asarray(rec["next_state"]),
                                    bool(rec["done"])))
                if rec.get("next_action") is not None:
                    buf._next_actions[buf._last] = np.asarray(rec["next_action"])
        return buf


def replay_push(buffer: ReplayBuffer, tr: Transition):
    buffer.push(tr)


def replay_sample(buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator):
    return buffer.sample(batch_size, rng)


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path, params: NetParams):
    """Text header (magic line + shape manifest) followed by the raw
    little-endian float64 payload: flat weights, then log_var if present."""
    manifest = {"layer_shapes": [list(s) for s in params.layer_shapes],
                "log_var": 0 if params.log_var is None else int(params.log_var.size)}
    with open(path, "wb") as f:
        f.write((CKPT_MAGIC + "\n").encode())
        f.write((json.dumps(manifest) + "\n").encode())
        f.write(params.flat_weights.astype("<f8").tobytes())
        if params.log_var is not None:
            f.write(params.log_var.astype("<f8").tobytes())


def load_checkpoint(path) -> NetParams:
    with open(path, "rb") as f:
        magic = f.readline().decode().strip()
        if magic != CKPT_MAGIC:
            raise ConfigError(f"{path}: bad checkpoint magic {magic!r}")
        manifest = json.loads(f.readline().decode())
        shapes = [tuple(s) for s in manifest["layer_shapes"]]
        n_weights = sum(i * o + o for i, o in shapes)
        n_lv = int(manifest["log_var"])
        payload = np.frombuffer(f.read(), dtype="<f8")
    if payload.size != n_weights + n_lv:
        raise ConfigError(f"{path}: payload size {payload.size} != manifest "
                          f"{n_weights + n_lv}")
    flat = payload[:n_weights].astype(float)
    log_var = payload[n_weights:].astype(float) if n_lv else None
    return NetParams(shapes, flat, log_var)
