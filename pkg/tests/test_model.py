import math

import numpy as np
import pytest

from conftest import nudge, random_se2, random_state
from slamlab.geom import rot2
from slamlab.integrate import rk4_step
from slamlab.invariance import apply_left_action
from slamlab.model import (
    ConstantProfile,
    Inputs,
    NoiseConfig,
    PiecewiseProfile,
    SlamState,
    dynamics,
    eval_profile,
    noisy_observe,
    observe,
)


class TestDynamics:
    def test_straight_line(self):
        state = SlamState([0.0, 0.0], 0.0, [[1.0, 1.0]])
        d = dynamics(state, Inputs(1.0, 0.0))
        np.testing.assert_array_equal(d.x, [1.0, 0.0])
        assert d.theta == 0.0
        np.testing.assert_array_equal(d.landmarks, [[0.0, 0.0]])

    def test_heading_rate_is_u_times_v(self):
        state = SlamState([0.0, 0.0], 0.3, [[1.0, 1.0]])
        d = dynamics(state, Inputs(2.0, 0.5))
        assert d.theta == 1.0

    def test_zero_speed(self):
        state = SlamState([1.0, 2.0], 0.7, [[1.0, 1.0], [0.0, 3.0]])
        d = dynamics(state, Inputs(0.0, 5.0))
        assert np.all(d.to_vector() == 0.0)

    def test_advances_along_heading(self):
        state = SlamState([0.0, 0.0], math.pi / 2, [[1.0, 1.0]])
        d = dynamics(state, Inputs(2.0, 0.0))
        np.testing.assert_allclose(d.x, [0.0, 2.0], atol=1e-15)


class TestObserve:
    def test_identity_pose(self):
        state = SlamState([0.0, 0.0], 0.0, [[1.0, 1.0]])
        np.testing.assert_array_equal(observe(state), [[1.0, 1.0]])

    def test_quarter_turn_pose(self):
        state = SlamState([1.0, 0.0], math.pi / 2, [[1.0, 1.0]])
        np.testing.assert_allclose(observe(state), [[1.0, 0.0]], atol=1e-15)

    def test_invariant_under_reference_frame_change(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            state = random_state(rng, 3)
            g = random_se2(rng)
            gap = np.abs(observe(apply_left_action(g, state)) - observe(state)).max()
            assert gap < 1e-12


class TestNoisyObserve:
    def test_zero_noise_is_exact(self):
        state = SlamState([0.3, -0.4], 0.8, [[2.0, 1.0]])
        cfg = NoiseConfig(0.0, 42)
        np.testing.assert_array_equal(noisy_observe(state, cfg, 0), observe(state))

    def test_same_seed_same_draw(self):
        state = SlamState([0.3, -0.4], 0.8, [[2.0, 1.0], [0.0, 5.0]])
        cfg = NoiseConfig(0.2, 42)
        a = noisy_observe(state, cfg, 17)
        b = noisy_observe(state, cfg, 17)
        np.testing.assert_array_equal(a, b)

    def test_different_step_different_draw(self):
        state = SlamState([0.3, -0.4], 0.8, [[2.0, 1.0]])
        cfg = NoiseConfig(0.2, 42)
        assert not np.array_equal(noisy_observe(state, cfg, 0), noisy_observe(state, cfg, 1))

    def test_empirical_std_matches_configuration(self):
        # unit range, so the per-component std should be relative_std itself
        state = SlamState([0.0, 0.0], 0.0, [[1.0, 0.0]])
        cfg = NoiseConfig(0.2, 123)
        draws = np.empty((100_000, 2))
        z = observe(state)
        for k in range(draws.shape[0]):
            draws[k] = noisy_observe(state, cfg, k)[0] - z[0]
        stds = draws.std(axis=0)
        assert np.all(stds > 0.196) and np.all(stds < 0.204)

    def test_rejects_negative_std(self):
        with pytest.raises(ValueError):
            NoiseConfig(-0.1, 0)


class TestProfiles:
    def test_constant_profile(self):
        prof = ConstantProfile(1.0, 0.5)
        inp = eval_profile(prof, 3.0)
        assert (inp.u, inp.v) == (1.0, 0.5)

    def test_constant_profile_horizon_enforced(self):
        prof = ConstantProfile(1.0, 0.5, horizon=10.0)
        eval_profile(prof, 10.0)
        with pytest.raises(ValueError):
            eval_profile(prof, 10.1)
        with pytest.raises(ValueError):
            eval_profile(prof, -0.5)

    def test_piecewise_lookup(self):
        prof = PiecewiseProfile([(0.0, 5.0, 1.0, 0.0), (5.0, 10.0, 1.0, 0.5)])
        assert eval_profile(prof, 6.0).v == 0.5
        assert eval_profile(prof, 4.999).v == 0.0
        assert eval_profile(prof, 5.0).v == 0.5  # segment start is inclusive
        assert eval_profile(prof, 10.0).v == 0.5

    def test_piecewise_rejects_gaps_and_disorder(self):
        with pytest.raises(ValueError):
            PiecewiseProfile([(0.0, 5.0, 1.0, 0.0), (6.0, 10.0, 1.0, 0.5)])
        with pytest.raises(ValueError):
            PiecewiseProfile([(5.0, 10.0, 1.0, 0.5), (0.0, 5.0, 1.0, 0.0)])
        with pytest.raises(ValueError):
            PiecewiseProfile([(0.0, 0.0, 1.0, 0.0)])

    def test_piecewise_out_of_horizon(self):
        prof = PiecewiseProfile([(0.0, 5.0, 1.0, 0.0)])
        with pytest.raises(ValueError):
            eval_profile(prof, 5.5)


def _integrate_plant(state, profile, horizon, dt):
    n = state.n_landmarks

    def rhs(t, y):
        s = SlamState.from_vector(y, n)
        return dynamics(s, eval_profile(profile, min(t, horizon))).to_vector()

    y = state.to_vector()
    steps = int(round(horizon / dt))
    traj = np.empty((steps + 1, y.size))
    traj[0] = y
    for k in range(steps):
        y = rk4_step(rhs, k * dt, y, dt)
        traj[k + 1] = y
    return traj


class TestTrajectories:
    def test_circle_matches_closed_form(self):
        # u=1, v=0.5: x(t) = 2 sin(t/2), y(t) = 2 (1 - cos(t/2)), radius 2
        state = SlamState([0.0, 0.0], 0.0, [[10.0, 0.0]])
        traj = _integrate_plant(state, ConstantProfile(1.0, 0.5), 4.0, 1e-3)
        t = np.arange(traj.shape[0]) * 1e-3
        np.testing.assert_allclose(traj[:, 0], 2 * np.sin(0.5 * t), atol=1e-9)
        np.testing.assert_allclose(traj[:, 1], 2 * (1 - np.cos(0.5 * t)), atol=1e-9)
        center = np.array([0.0, 2.0])
        radii = np.linalg.norm(traj[:, 0:2] - center, axis=1)
        np.testing.assert_allclose(radii, 2.0, atol=1e-9)

    def test_straight_line_along_heading(self):
        state = SlamState([0.0, 0.0], 0.0, [[10.0, 0.0]])
        traj = _integrate_plant(state, ConstantProfile(1.0, 0.0), 5.0, 1e-2)
        np.testing.assert_allclose(traj[-1, 0:2], [5.0, 0.0], atol=1e-12)

    def test_circle_closure(self):
        # constant (u, v) with v != 0 returns to the start after 2*pi/(u*v)
        u, v = 1.3, 0.4
        state = SlamState([0.7, -0.2], 0.9, [[10.0, 0.0]])
        period = 2 * math.pi / (u * v)
        dt = period / 20000
        traj = _integrate_plant(state, ConstantProfile(u, v), period, dt)
        assert np.abs(traj[-1, 0:2] - traj[0, 0:2]).max() < 1e-9

    def test_landmarks_never_move(self):
        state = SlamState([0.0, 0.0], 0.0, [[3.5, -1.25], [0.1, 2.2]])
        traj = _integrate_plant(state, ConstantProfile(1.0, 0.3), 5.0, 1e-2)
        # derivative is exactly zero, so RK4 must preserve them bit for bit
        assert np.array_equal(traj[-1, 3:], traj[0, 3:])


class TestEquivariance:
    def test_dynamics_commutes_with_reference_frame_change(self):
        rng = np.random.default_rng(9)
        h = 1e-5
        for _ in range(20):
            state = random_state(rng, 2)
            g = random_se2(rng)
            inp = Inputs(rng.uniform(-2, 2), rng.uniform(-1, 1))
            deriv = dynamics(state, inp)
            plus = apply_left_action(g, nudge(state, deriv, h))
            minus = apply_left_action(g, nudge(state, deriv, -h))
            fd = (plus.to_vector() - minus.to_vector()) / (2 * h)
            target = dynamics(apply_left_action(g, state), inp).to_vector()
            assert np.abs(fd - target).max() < 1e-6

    def test_rotated_heading_consistency(self):
        # moving the reference frame by g then observing equals observing first
        state = SlamState([1.0, 2.0], 0.4, [[0.0, 0.0], [5.0, 5.0]])
        g = random_se2(np.random.default_rng(2))
        np.testing.assert_allclose(
            observe(apply_left_action(g, state)), observe(state), atol=1e-12
        )


def test_state_vector_round_trip():
    state = SlamState([1.0, 2.0], 0.5, [[3.0, 4.0], [5.0, 6.0]])
    back = SlamState.from_vector(state.to_vector(), 2)
    np.testing.assert_array_equal(back.to_vector(), state.to_vector())
    with pytest.raises(ValueError):
        SlamState.from_vector(np.zeros(6), 2)


def test_observe_row_convention():
    # row i must equal R(-theta) @ (p_i - x)
    state = SlamState([0.2, -0.3], 0.8, [[1.0, 2.0], [-1.0, 0.5]])
    z = observe(state)
    for i in range(2):
        expected = rot2(-state.theta) @ (state.landmarks[i] - state.x)
        np.testing.assert_allclose(z[i], expected, atol=1e-14)
