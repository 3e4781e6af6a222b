"""Physics environments with a uniform reset/step interface.

All environments are deterministic given (spec, seed, action sequence):
dynamics are integrated with fixed-step RK4 and the only randomness is the
seeded reset noise.  Instances hold parameters only, no mutable state, so a
single env object can serve many concurrent rollouts through ``step_batch``.

State and action vectors are plain float64 numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericalError

# ---------------------------------------------------------------------------
# potential fields (used by the differential-drive tasks)

QUADRATIC = "quadratic"
BIMODAL_GAUSSIAN = "bimodal_gaussian"
FLAT = "flat"


@dataclass(frozen=True)
class PotentialField:
    """Scalar potential V(x, y), bounded below with min normalized to 0."""

    kind: str
    centers: np.ndarray = field(default_factory=lambda: np.zeros((1, 2)))
    scales: np.ndarray = field(default_factory=lambda: np.ones(1))

    @staticmethod
    def quadratic(center=(0.0, 0.0), k=1.0) -> "PotentialField":
        return PotentialField(QUADRATIC, np.asarray([center], dtype=float),
                              np.asarray([k], dtype=float))

    @staticmethod
    def bimodal(centers=((-2.0, 0.0), (2.0, 0.0)), sigma=1.0) -> "PotentialField":
        c = np.asarray(centers, dtype=float)
        return PotentialField(BIMODAL_GAUSSIAN, c,
                              np.full(len(c), float(sigma)))

    @staticmethod
    def flat() -> "PotentialField":
        return PotentialField(FLAT)


def _mixture_logpdf(field_: PotentialField, pos: np.ndarray) -> np.ndarray:
    """Log density of the equal-weight isotropic Gaussian mixture."""
    c = field_.centers
    sig2 = field_.scales ** 2
    d2 = np.sum((pos[..., None, :] - c) ** 2, axis=-1)       # (..., n_modes)
    comp = -0.5 * d2 / sig2 - np.log(2.0 * np.pi * sig2) - np.log(len(c))
    m = np.max(comp, axis=-1)
    return m + np.log(np.sum(np.exp(comp - m[..., None]), axis=-1))


def potential_eval(field_: PotentialField, position) -> np.ndarray | float:
    """Evaluate the potential at planar position(s) of shape (..., 2).

    The bimodal well is the negative log of the mixture density shifted so
    that the value at the component centers is exactly zero.
    """
    pos = np.asarray(position, dtype=float)
    if pos.shape[-1] != 2:
        raise ConfigError(f"potential positions must be 2-D, got dim {pos.shape[-1]}")
    if field_.kind == FLAT:
        v = np.zeros(pos.shape[:-1])
    elif field_.kind == QUADRATIC:
        d2 = np.sum((pos - field_.centers[0]) ** 2, axis=-1)
        v = field_.scales[0] * d2
    elif field_.kind == BIMODAL_GAUSSIAN:
        ref = np.max(_mixture_logpdf(field_, field_.centers))
        v = ref - _mixture_logpdf(field_, pos)
    else:
        raise ConfigError(f"unknown potential kind {field_.kind!r}")
    return float(v) if v.ndim == 0 else v


# ---------------------------------------------------------------------------
# environment specification

POINT_MASS = "pointmass"
DIFF_DRIVE = "diffdrive"
SLIP = "slip"
LTI = "lti"


@dataclass(frozen=True)
class EnvSpec:
    """Environment kind, dimensions, step size and per-kind parameters."""

    kind: str
    d: int
    m: int
    dt: float
    params: dict

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")

    @staticmethod
    def pointmass(beta: float = 1.0, dt: float = 0.1,
                  init_noise: float = 0.01) -> "EnvSpec":
        if not 0.0 <= beta <= 1.0:
            raise ConfigError(f"beta must be in [0, 1], got {beta}")
        return EnvSpec(POINT_MASS, 4, 2, dt,
                       {"beta": float(beta), "init_noise": float(init_noise)})

    @staticmethod
    def diffdrive(potential: Optional[PotentialField] = None,
                  dt: float = 0.1) -> "EnvSpec":
        if potential is None:
            potential = PotentialField.quadratic()
        return EnvSpec(DIFF_DRIVE, 3, 2, dt, {"potential": potential})

    @staticmethod
    def slip(mass: float = 1.0, stiffness: float = 1000.0,
             rest_length: float = 1.0, gravity: float = 9.81,
             dt: float = 1e-3, substeps: int = 10) -> "EnvSpec":
        return EnvSpec(SLIP, 9, 3, dt,
                       {"mass": float(mass), "stiffness": float(stiffness),
                        "rest_length": float(rest_length),
                        "gravity": float(gravity), "substeps": int(substeps)})

    @staticmethod
    def lti(A, B, x0=None, dt: float = 0.1) -> "EnvSpec":
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ConfigError(f"A must be square, got {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise ConfigError(f"B shape {B.shape} inconsistent with A {A.shape}")
        if x0 is None:
            x0 = np.zeros(A.shape[0])
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (A.shape[0],):
            raise ConfigError(f"x0 shape {x0.shape} inconsistent with A {A.shape}")
        return EnvSpec(LTI, A.shape[0], B.shape[1], dt,
                       {"A": A, "B": B, "x0": x0})


@dataclass(frozen=True)
class StepResult:
    next_state: np.ndarray
    reward: float
    done: bool


# ---------------------------------------------------------------------------
# integrator

def rk4_step(deriv, x, u, dt):
    """One fixed-step RK4 update; vectorized over leading axes of x/u."""
    k1 = deriv(x, u)
    k2 = deriv(x + 0.5 * dt * k1, u)
    k3 = deriv(x + 0.5 * dt * k2, u)
    k4 = deriv(x + dt * k3, u)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# ---------------------------------------------------------------------------
# environments

class Env:
    """Base class: parameter container plus pure transition functions."""

    spec: EnvSpec

    def __init__(self, spec: EnvSpec):
        self.spec = spec
        self.d = spec.d
        self.m = spec.m
        self.dt = spec.dt

    # bounds as (2, m): row 0 lower, row 1 upper
    @property
    def action_bounds(self) -> np.ndarray:
        raise NotImplementedError

    def reset(self, seed: int) -> np.ndarray:
        raise NotImplementedError

    def clamp(self, action: np.ndarray) -> np.ndarray:
        lo, hi = self.action_bounds
        return np.clip(action, lo, hi)

    def step_batch(self, states, actions):
        """Vectorized transition: (K, d), (K, m) -> next (K, d), rewards (K,), dones (K,).

        Does not raise on non-finite output; callers flag failed rollouts.
        """
        raise NotImplementedError

    def step(self, state, action) -> StepResult:
        state = np.asarray(state, dtype=float)
        action = np.asarray(action, dtype=float)
        if state.shape != (self.d,):
            raise ConfigError(f"state shape {state.shape} != ({self.d},)")
        if action.shape != (self.m,):
            raise ConfigError(f"action shape {action.shape} != ({self.m},)")
        nxt, rew, done = self.step_batch(state[None], action[None])
        if not np.all(np.isfinite(nxt[0])):
            raise NumericalError("non-finite state after integration")
        return StepResult(nxt[0], float(rew[0]), bool(done[0]))

    def reward_batch(self, states, actions):
        """Reward of (state, action) pairs without stepping; vectorized."""
        raise NotImplementedError


class PointMassEnv(Env):
    """Planar double integrator with anisotropic actuation.

    The x-channel acceleration is scaled by beta, so beta = 0 removes all
    authority over (x, vx) while leaving the y-channel intact.
    """

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        self.beta = spec.params["beta"]
        self.init_noise = spec.params["init_noise"]
        self._bounds = np.array([[-1.0, -1.0], [1.0, 1.0]])

    @property
    def action_bounds(self):
        return self._bounds

    def reset(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        eps = self.init_noise * rng.standard_normal(4)
        return np.array([-1.0, -1.0, 0.0, 0.0]) + eps

    def continuous_matrices(self):
        """(A, B) of the underlying LTI system, state order [x, y, vx, vy]."""
        A = np.zeros((4, 4))
        A[0, 2] = 1.0
        A[1, 3] = 1.0
        B = np.zeros((4, 2))
        B[2, 0] = self.beta
        B[3, 1] = 1.0
        return A, B

    def _deriv(self, x, u):
        dx = np.empty_like(x)
        dx[..., 0] = x[..., 2]
        dx[..., 1] = x[..., 3]
        dx[..., 2] = self.beta * u[..., 0]
        dx[..., 3] = u[..., 1]
        return dx

    def reward_batch(self, states, actions):
        return -(states[..., 0] ** 2 + states[..., 1] ** 2)

    def step_batch(self, states, actions):
        u = self.clamp(actions)
        rew = self.reward_batch(states, u)
        nxt = rk4_step(self._deriv, states, u, self.dt)
        done = (np.abs(nxt[..., 0]) > 5.0) | (np.abs(nxt[..., 1]) > 5.0)
        return nxt, rew, done


class DiffDriveEnv(Env):
    """Unicycle-model vehicle descending a planar potential."""

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        self.potential = spec.params["potential"]
        self._bounds = np.array([[0.0, -2.0], [2.0, 2.0]])  # v, omega

    @property
    def action_bounds(self):
        return self._bounds

    def reset(self, seed: int) -> np.ndarray:
        return np.array([-4.0, -2.0, 0.0])

    def _deriv(self, x, u):
        dx = np.empty_like(x)
        dx[..., 0] = u[..., 0] * np.cos(x[..., 2])
        dx[..., 1] = u[..., 0] * np.sin(x[..., 2])
        dx[..., 2] = u[..., 1]
        return dx

    def reward_batch(self, states, actions):
        return -potential_eval(self.potential, states[..., :2])

    def step_batch(self, states, actions):
        u = self.clamp(actions)
        rew = np.asarray(self.reward_batch(states, u))
        nxt = rk4_step(self._deriv, states, u, self.dt)
        done = np.zeros(states.shape[:-1], dtype=bool)
        return nxt, rew, done


class SlipEnv(Env):
    """Spring-loaded inverted pendulum hopper.

    State: [xh, vxh, yh, vyh, zh, vzh, xt, yt, q] where q is the contact
    indicator (recomputed, not integrated).  Contact holds while the leg
    length is below the spring rest length; in contact the head is pushed
    along the leg axis by spring plus thrust, in the air the head is
    ballistic and the toe tracks the head velocity plus a steering offset.
    Actions: [thrust, toe_vx, toe_vy].  One step integrates `substeps` RK4
    substeps of length dt with the action held.
    """

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        p = spec.params
        self.mass = p["mass"]
        self.k = p["stiffness"]
        self.l0 = p["rest_length"]
        self.g = p["gravity"]
        self.substeps = p["substeps"]
        self.z_ground = 0.0
        self._bounds = np.array([[-50.0, -5.0, -5.0], [50.0, 5.0, 5.0]])

    @property
    def action_bounds(self):
        return self._bounds

    def reset(self, seed: int) -> np.ndarray:
        # standing at rest length, toe under the head
        s = np.zeros(9)
        s[4] = self.l0
        return s

    def leg_length(self, x):
        return np.sqrt((x[..., 0] - x[..., 6]) ** 2
                       + (x[..., 2] - x[..., 7]) ** 2
                       + (x[..., 4] - self.z_ground) ** 2)

    def _deriv(self, x, u):
        lc = self.leg_length(x)
        contact = lc < self.l0
        # force per unit length along the leg axis while in contact
        coef = np.where(contact,
                        (self.k * (self.l0 - lc) + u[..., 0])
                        / (self.mass * np.maximum(lc, 1e-9)),
                        0.0)
        dx = np.empty_like(x)
        dx[..., 0] = x[..., 1]
        dx[..., 1] = coef * (x[..., 0] - x[..., 6])
        dx[..., 2] = x[..., 3]
        dx[..., 3] = coef * (x[..., 2] - x[..., 7])
        dx[..., 4] = x[..., 5]
        dx[..., 5] = coef * (x[..., 4] - self.z_ground) - self.g
        air = ~contact
        dx[..., 6] = np.where(air, x[..., 1] + u[..., 1], 0.0)
        dx[..., 7] = np.where(air, x[..., 3] + u[..., 2], 0.0)
        dx[..., 8] = 0.0
        return dx

    def mechanical_energy(self, x):
        """Kinetic + gravitational + spring energy (contact phase only for spring)."""
        v2 = x[..., 1] ** 2 + x[..., 3] ** 2 + x[..., 5] ** 2
        lc = self.leg_length(x)
        compression = np.where(lc < self.l0, self.l0 - lc, 0.0)
        return (0.5 * self.mass * v2 + self.mass * self.g * x[..., 4]
                + 0.5 * self.k * compression ** 2)

    def reward_batch(self, states, actions):
        return np.zeros(states.shape[:-1])

    def step_batch(self, states, actions):
        u = self.clamp(actions)
        x = states
        for _ in range(self.substeps):
            x = rk4_step(self._deriv, x, u, self.dt)
        x = x.copy() if x is states else x
        x[..., 8] = (self.leg_length(x) < self.l0).astype(float)
        rew = self.reward_batch(states, u)
        done = x[..., 4] < self.z_ground
        return x, rew, done


class LtiEnv(Env):
    """Generic linear system xdot = A x + B u, zero reward, never done."""

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        self.A = spec.params["A"]
        self.B = spec.params["B"]
        self.x0 = spec.params["x0"]
        self._bounds = np.array([np.full(self.m, -np.inf),
                                 np.full(self.m, np.inf)])

    @property
    def action_bounds(self):
        return self._bounds

    def reset(self, seed: int) -> np.ndarray:
        return self.x0.copy()

    def _deriv(self, x, u):
        return x @ self.A.T + u @ self.B.T

    def reward_batch(self, states, actions):
        return np.zeros(states.shape[:-1])

    def step_batch(self, states, actions):
        u = self.clamp(actions)
        nxt = rk4_step(self._deriv, states, u, self.dt)
        rew = self.reward_batch(states, u)
        done = np.zeros(states.shape[:-1], dtype=bool)
        return nxt, rew, done


_ENV_CLASSES = {POINT_MASS: PointMassEnv, DIFF_DRIVE: DiffDriveEnv,
                SLIP: SlipEnv, LTI: LtiEnv}


def make_env(spec: EnvSpec) -> Env:
    try:
        cls = _ENV_CLASSES[spec.kind]
    except KeyError:
        raise ConfigError(f"unknown environment kind {spec.kind!r}") from None
    return cls(spec)


def reset(spec: EnvSpec, seed: int) -> np.ndarray:
    return make_env(spec).reset(seed)


def step(spec: EnvSpec, state, action) -> StepResult:
    return make_env(spec).step(state, action)
