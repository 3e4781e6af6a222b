import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxdiff import envs
from maxdiff.envs import EnvSpec, PotentialField, make_env, potential_eval
from maxdiff.errors import ConfigError, NumericalError
from maxdiff.planners import discretize_lti


# ---------------------------------------------------------------------------
# reset

def test_pointmass_reset_center():
    env = make_env(EnvSpec.pointmass(init_noise=0.0))
    assert np.array_equal(env.reset(0), [-1.0, -1.0, 0.0, 0.0])


def test_pointmass_reset_noise_scale():
    env = make_env(EnvSpec.pointmass())
    samples = np.stack([env.reset(s) for s in range(2000)])
    dev = samples - np.array([-1.0, -1.0, 0.0, 0.0])
    assert abs(dev.std() - 0.01) < 0.002


def test_diffdrive_reset():
    env = make_env(EnvSpec.diffdrive())
    assert np.array_equal(env.reset(3), [-4.0, -2.0, 0.0])


def test_slip_reset_standing():
    env = make_env(EnvSpec.slip())
    s = env.reset(0)
    assert s[4] == 1.0           # head at spring rest length
    assert np.all(s[[0, 1, 2, 3, 5, 6, 7]] == 0.0)


def test_reset_deterministic():
    for spec in (EnvSpec.pointmass(), EnvSpec.slip(),
                 EnvSpec.lti(np.zeros((2, 2)), np.eye(2))):
        a = envs.reset(spec, 42)
        b = envs.reset(spec, 42)
        assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# stepping

def test_pointmass_fixed_point():
    sr = envs.step(EnvSpec.pointmass(), np.zeros(4), np.zeros(2))
    assert np.array_equal(sr.next_state, np.zeros(4))
    assert sr.reward == 0.0
    assert not sr.done


def test_pointmass_beta_zero_x_unactuated():
    env = make_env(EnvSpec.pointmass(beta=0.0))
    state = np.array([-1.0, -1.0, 0.0, 0.0])
    for _ in range(50):
        state = env.step(state, np.array([1.0, 0.3])).next_state
    assert state[0] == -1.0
    assert state[2] == 0.0
    assert state[3] != 0.0       # y-channel still actuated


def test_pointmass_reward_and_done():
    env = make_env(EnvSpec.pointmass())
    sr = env.step(np.array([3.0, 4.0, 0.0, 0.0]), np.zeros(2))
    assert sr.reward == -25.0
    sr = env.step(np.array([5.05, 0.0, 10.0, 0.0]), np.zeros(2))
    assert sr.done                # drifted past the boundary


def test_action_clamped_before_integration():
    env = make_env(EnvSpec.pointmass())
    big = env.step(np.zeros(4), np.array([100.0, 0.0])).next_state
    one = env.step(np.zeros(4), np.array([1.0, 0.0])).next_state
    assert np.array_equal(big, one)


def test_dimension_mismatch_rejected():
    env = make_env(EnvSpec.pointmass())
    with pytest.raises(ConfigError):
        env.step(np.zeros(3), np.zeros(2))
    with pytest.raises(ConfigError):
        env.step(np.zeros(4), np.zeros(3))


def test_blowup_raises_numerical_error():
    env = make_env(EnvSpec.lti(np.array([[1e8]]), np.eye(1), dt=10.0))
    state = np.array([1.0])
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(NumericalError):
            for _ in range(100):
                state = env.step(state, np.zeros(1)).next_state


# ---------------------------------------------------------------------------
# integrator accuracy

STABLE_A = np.array([[0.0, 1.0], [-0.5, -0.4]])


def test_lti_rk4_vs_matrix_exponential():
    # constant action: exact solution via zero-order-hold discretization
    spec = EnvSpec.lti(STABLE_A, np.eye(2), x0=np.array([1.0, -0.5]), dt=0.1)
    env = make_env(spec)
    ad, bd = discretize_lti(STABLE_A, np.eye(2), 0.1)
    u = np.array([0.3, -0.2])
    x_rk4 = env.reset(0)
    x_exact = env.reset(0)
    worst = 0.0
    for _ in range(10):
        x_rk4 = env.step(x_rk4, u).next_state
        x_exact = ad @ x_exact + bd @ u
        worst = max(worst, float(np.max(np.abs(x_rk4 - x_exact))))
    assert worst < 1e-6


def test_rk4_order_at_least_three():
    x0 = np.array([1.0, -0.5])
    u = np.array([0.3, -0.2])
    ref_a, ref_b = discretize_lti(STABLE_A, np.eye(2), 0.2)
    exact = ref_a @ x0 + ref_b @ u

    def one_step_err(dt, n):
        env = make_env(EnvSpec.lti(STABLE_A, np.eye(2), dt=dt))
        x = x0
        for _ in range(n):
            x = env.step(x, u).next_state
        return float(np.max(np.abs(x - exact)))

    err_h = one_step_err(0.2, 1)
    err_h2 = one_step_err(0.1, 2)
    assert err_h / err_h2 >= 8.0


# ---------------------------------------------------------------------------
# SLIP

def test_slip_air_phase_ballistic():
    env = make_env(EnvSpec.slip())
    state = env.reset(0)
    state[4] = 2.0               # drop from above the rest length
    z0 = 2.0
    t = 0.0
    for _ in range(40):
        state = env.step(state, np.zeros(3)).next_state
        t += env.dt * env.spec.params["substeps"]
        if state[4] <= env.l0:   # contact begins, free fall ends
            break
        assert abs(state[4] - (z0 - 0.5 * env.g * t ** 2)) < 1e-9


def test_slip_contact_energy_conservation():
    env = make_env(EnvSpec.slip())
    # oscillate inside the contact phase: equilibrium compression, small push
    state = env.reset(0)
    state[4] = env.l0 - env.mass * env.g / env.k
    state[5] = 0.1
    e0 = env.mechanical_energy(state)
    drift = 0.0
    for _ in range(100):         # 1 s of simulated time
        state = env.step(state, np.zeros(3)).next_state
        assert state[8] == 1.0   # still in contact
        drift = max(drift, abs(env.mechanical_energy(state) - e0))
    assert drift / e0 < 1e-4


def test_slip_bounces_and_conserves_energy_across_hops():
    env = make_env(EnvSpec.slip())
    state = env.reset(0)
    state[4] = 1.3               # drop height makes it alternate phases
    e0 = env.mechanical_energy(state)
    seen_contact = seen_air = False
    for _ in range(200):
        state = env.step(state, np.zeros(3)).next_state
        seen_contact |= state[8] == 1.0
        seen_air |= state[8] == 0.0
    assert seen_contact and seen_air
    assert abs(env.mechanical_energy(state) - e0) / e0 < 5e-3


def test_slip_done_below_ground():
    env = make_env(EnvSpec.slip())
    state = env.reset(0)
    state[4] = 0.5
    state[6] = 5.0               # toe far away: no contact force, free fall
    done = False
    for _ in range(100):
        sr = env.step(state, np.zeros(3))
        state = sr.next_state
        if sr.done:
            done = True
            break
    assert done and state[4] < 0.0


# ---------------------------------------------------------------------------
# potentials

def test_quadratic_potential_values():
    f = PotentialField.quadratic()
    assert potential_eval(f, (0.0, 0.0)) == 0.0
    assert potential_eval(f, (3.0, 4.0)) == 25.0


def test_bimodal_potential_zero_at_modes():
    f = PotentialField.bimodal()
    assert abs(potential_eval(f, (-2.0, 0.0))) < 1e-9
    assert abs(potential_eval(f, (2.0, 0.0))) < 1e-9
    assert potential_eval(f, (0.0, 0.0)) > 0.1
    assert potential_eval(f, (10.0, 10.0)) > potential_eval(f, (3.0, 0.0))


def test_flat_potential():
    assert potential_eval(PotentialField.flat(), (7.0, -3.0)) == 0.0


def test_potential_requires_planar_position():
    with pytest.raises(ConfigError):
        potential_eval(PotentialField.quadratic(), (1.0, 2.0, 3.0))


def test_diffdrive_reward_is_negative_potential():
    env = make_env(EnvSpec.diffdrive(PotentialField.quadratic()))
    sr = env.step(np.array([3.0, 4.0, 0.0]), np.zeros(2))
    assert sr.reward == -25.0


def test_diffdrive_action_bounds():
    env = make_env(EnvSpec.diffdrive())
    # forward speed cannot go negative
    sr = env.step(np.array([0.0, 0.0, 0.0]), np.array([-5.0, 0.0]))
    assert np.array_equal(sr.next_state, np.zeros(3))


# ---------------------------------------------------------------------------
# controllability structure

def _kalman_rank(beta):
    env = make_env(EnvSpec.pointmass(beta=beta))
    A, B = env.continuous_matrices()
    blocks = [B]
    for _ in range(3):
        blocks.append(A @ blocks[-1])
    return np.linalg.matrix_rank(np.hstack(blocks))


def test_pointmass_kalman_rank():
    assert _kalman_rank(1.0) == 4
    assert _kalman_rank(0.001) == 4
    assert _kalman_rank(0.0) == 2


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_determinism_bitwise(seed):
    spec = EnvSpec.pointmass(beta=0.3)
    env = make_env(spec)
    rng = np.random.default_rng(seed)
    actions = rng.uniform(-1, 1, size=(20, 2))

    def run():
        s = env.reset(seed)
        out = [s]
        for a in actions:
            s = env.step(s, a).next_state
            out.append(s)
        return np.stack(out)

    t1, t2 = run(), run()
    assert np.array_equal(t1, t2)


def test_env_spec_validation():
    with pytest.raises(ConfigError):
        EnvSpec.pointmass(beta=1.5)
    with pytest.raises(ConfigError):
        EnvSpec.pointmass(dt=0.0)
    with pytest.raises(ConfigError):
        EnvSpec.lti(np.zeros((2, 3)), np.eye(2))
    with pytest.raises(ConfigError):
        EnvSpec.lti(np.zeros((2, 2)), np.eye(3))
