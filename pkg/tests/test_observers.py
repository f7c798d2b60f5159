import math

import numpy as np
import pytest

from conftest import (
    fd_dynamics_jacobian,
    fd_error_flow_jacobian,
    fd_observation_jacobian,
    random_se2,
    random_state,
)
from slamlab.geom import rot2
from slamlab.invariance import (
    apply_right_action,
    estimate_from_error,
    invariant_state_error,
    simulate_observer,
    InvariantError,
)
from slamlab.model import ConstantProfile, Inputs, SlamState, dynamics, observe
from slamlab.observers import (
    constant_gain_step,
    ekf_jacobians,
    ekf_step,
    error_output_matrix,
    iekf_step,
    invariantized_step,
    output_error,
    stabilizing_iekf_gain,
)


class TestOutputError:
    def test_zero_for_perfect_estimate(self):
        truth = SlamState([0.4, -0.2], 0.9, [[1.0, 2.0], [3.0, -1.0]])
        err = output_error(truth.copy(), observe(truth))
        assert np.abs(err).max() == 0.0

    def test_direct_evaluation(self):
        est = SlamState([0.0, 0.0], 0.0, [[1.0, 0.0]])
        truth = SlamState([0.0, 0.0], 0.0, [[0.0, 0.0]])
        np.testing.assert_allclose(output_error(est, observe(truth)), [[1.0, 0.0]], atol=1e-15)

    def test_equals_landmark_error_minus_position_error(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            n = int(rng.integers(1, 6))
            truth = random_state(rng, n, span=10.0)
            est = random_state(rng, n, span=10.0)
            err = output_error(est, observe(truth))
            eta = invariant_state_error(est, truth)
            assert np.abs(err - (eta.landmarks - eta.position)).max() < 1e-12

    def test_invariant_under_vehicle_frame_change(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            n = int(rng.integers(1, 4))
            truth = random_state(rng, n)
            est = random_state(rng, n)
            g = random_se2(rng)
            base = output_error(est, observe(truth))
            moved = output_error(
                apply_right_action(g, est), observe(apply_right_action(g, truth))
            )
            assert np.abs(base - moved).max() < 1e-12

    def test_shape_mismatch_rejected(self):
        est = SlamState([0.0, 0.0], 0.0, [[1.0, 0.0]])
        with pytest.raises(ValueError):
            output_error(est, np.zeros((2, 2)))


class TestJacobians:
    def test_heading_column_at_zero_heading(self):
        est = SlamState([0.0, 0.0], 0.0, [[1.0, 1.0]])
        a_mat, _ = ekf_jacobians(est, Inputs(1.0, 0.0))
        np.testing.assert_allclose(a_mat[0:2, 2], [0.0, 1.0], atol=1e-15)

    def test_landmark_block_at_zero_heading(self):
        est = SlamState([0.0, 0.0], 0.0, [[1.0, 1.0]])
        _, c_mat = ekf_jacobians(est, Inputs(1.0, 0.0))
        np.testing.assert_allclose(c_mat[0:2, 3:5], np.eye(2), atol=1e-15)
        np.testing.assert_allclose(c_mat[0:2, 0:2], -np.eye(2), atol=1e-15)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            n = int(rng.integers(1, 4))
            est = random_state(rng, n)
            inp = Inputs(rng.uniform(-2, 2), rng.uniform(-1, 1))
            a_mat, c_mat = ekf_jacobians(est, inp)
            a_fd = fd_dynamics_jacobian(est, inp)
            c_fd = fd_observation_jacobian(est)
            rel_a = np.abs(a_mat - a_fd).max() / max(1.0, np.abs(a_fd).max())
            rel_c = np.abs(c_mat - c_fd).max() / max(1.0, np.abs(c_fd).max())
            assert rel_a < 1e-5
            assert rel_c < 1e-5


class TestEkfStep:
    def test_zero_gain_is_dead_reckoning(self):
        est = SlamState([0.5, 0.1], 0.3, [[1.0, 2.0]])
        truth = SlamState([0.0, 0.0], 0.0, [[1.5, 1.5]])
        inp = Inputs(1.2, 0.4)
        d = ekf_step(est, inp, observe(truth), np.zeros((5, 2)))
        np.testing.assert_array_equal(d.to_vector(), dynamics(est, inp).to_vector())

    def test_zero_residual_is_dynamics(self):
        est = SlamState([0.5, 0.1], 0.3, [[1.0, 2.0]])
        inp = Inputs(1.2, 0.4)
        L = np.arange(10.0).reshape(5, 2)
        d = ekf_step(est, inp, observe(est), L)
        np.testing.assert_array_equal(d.to_vector(), dynamics(est, inp).to_vector())

    def test_hand_computed_euler_step(self):
        # one Euler step of length 0.1, worked out by hand:
        # est (x=(0,0), theta=0, p=(1,0)), measurements from the true state
        # (x=(0.5,0), theta=0, p=(1,0.5)) give z=(0.5,0.5), zhat=(1,0),
        # residual r=(0.5,-0.5). With rows L_x=-I, L_theta=(-1,-1), L_p=-I and
        # inputs u=1, v=0.2: corrections (-0.5,0.5), 0, (-0.5,0.5); dynamics
        # (1,0), 0.2, (0,0). Euler: x=(0.05,0.05), theta=0.02, p=(0.95,0.05).
        est = SlamState([0.0, 0.0], 0.0, [[1.0, 0.0]])
        truth = SlamState([0.5, 0.0], 0.0, [[1.0, 0.5]])
        L = np.array(
            [
                [-1.0, 0.0],
                [0.0, -1.0],
                [-1.0, -1.0],
                [-1.0, 0.0],
                [0.0, -1.0],
            ]
        )
        d = ekf_step(est, Inputs(1.0, 0.2), observe(truth), L)
        new = est.to_vector() + 0.1 * d.to_vector()
        np.testing.assert_allclose(
            new, [0.05, 0.05, 0.02, 0.95, 0.05], rtol=0, atol=1e-12
        )

    def test_dimension_mismatch_rejected(self):
        est = SlamState([0.0, 0.0], 0.0, [[1.0, 0.0]])
        with pytest.raises(ValueError):
            ekf_step(est, Inputs(1.0, 0.0), observe(est), np.zeros((4, 2)))


class TestInvariantizedStep:
    def test_coincides_with_ekf_at_zero_heading(self):
        est = SlamState([0.2, -0.1], 0.0, [[1.0, 2.0], [0.0, -1.0]])
        truth = SlamState([0.0, 0.0], 0.0, [[1.5, 1.5], [0.5, -0.5]])
        inp = Inputs(1.0, 0.3)
        rng = np.random.default_rng(1)
        L = rng.normal(size=(7, 4))
        a = ekf_step(est, inp, observe(truth), L)
        b = invariantized_step(est, inp, observe(truth), L)
        assert np.abs(a.to_vector() - b.to_vector()).max() < 1e-14

    def test_zero_residual_is_dynamics(self):
        est = SlamState([0.5, 0.1], 1.2, [[1.0, 2.0]])
        inp = Inputs(0.7, -0.2)
        L = np.arange(10.0).reshape(5, 2)
        d = invariantized_step(est, inp, observe(est), L)
        np.testing.assert_array_equal(d.to_vector(), dynamics(est, inp).to_vector())

    def test_fixed_heading_counterexample(self):
        # with heading held at pi/2 and a pure landmark gain -k*I, the raw
        # correction is orthogonal to the landmark error (no progress), while
        # the frame-aligned correction contracts it at rate 2k
        k = 0.7
        theta = math.pi / 2
        truth = SlamState([0.0, 0.0], theta, [[2.0, 1.0]])
        est = SlamState([0.0, 0.0], theta, [[3.5, -0.5]])
        inp = Inputs(0.0, 0.0)  # both poses stay fixed
        L = np.zeros((5, 2))
        L[3:5, 0:2] = -k * np.eye(2)
        p_err = est.landmarks[0] - truth.landmarks[0]

        d_raw = ekf_step(est, inp, observe(truth), L)
        deriv_sq_raw = 2.0 * p_err @ d_raw.landmarks[0]
        assert abs(deriv_sq_raw) < 1e-12

        d_inv = invariantized_step(est, inp, observe(truth), L)
        deriv_sq_inv = 2.0 * p_err @ d_inv.landmarks[0]
        expected = -2.0 * k * (p_err @ p_err)
        assert abs(deriv_sq_inv - expected) < 1e-6


class TestConstantGainStep:
    def test_zero_error_equilibrium(self):
        truth = SlamState([0.3, 0.1], 0.4, [[1.0, 2.0], [3.0, 0.0]])
        d = constant_gain_step(truth.copy(), Inputs(1.0, 0.2), observe(truth), np.array([1.0, 2.0]))
        base = dynamics(truth, Inputs(1.0, 0.2))
        np.testing.assert_array_equal(d.to_vector(), base.to_vector())

    def test_closed_form_decay(self):
        # ||E(0)|| = 1 and k = 2, so after one second ||E|| = exp(-2)
        truth0 = SlamState([0.0, 0.0], 0.0, [[2.0, 0.0]])
        est0 = SlamState([0.0, 0.0], 0.0, [[3.0, 0.0]])
        _, truth_traj, est_traj = simulate_observer(
            "prop1", np.array([2.0]), ConstantProfile(1.0, 0.3), truth0, est0, 1.0, 1e-3
        )
        truth1 = SlamState.from_vector(truth_traj[-1], 1)
        est1 = SlamState.from_vector(est_traj[-1], 1)
        err = output_error(est1, observe(truth1))
        assert abs(np.linalg.norm(err) - math.exp(-2.0)) < 1e-6

    def test_decay_rate_by_regression(self):
        # log-linear fit of ||E_i(t)|| recovers -k_i on a curving path
        truth0 = SlamState([0.0, 0.0], 0.2, [[2.0, 0.0], [-1.0, 3.0]])
        est0 = SlamState([0.0, 0.0], 0.2, [[2.8, 0.7], [-2.1, 2.5]])
        k = np.array([0.8, 1.6])
        dt = 1e-3
        _, truth_traj, est_traj = simulate_observer(
            "prop1", k, ConstantProfile(1.0, 0.4), truth0, est0, 3.0, dt
        )
        t = np.arange(truth_traj.shape[0]) * dt
        norms = np.empty((t.size, 2))
        for i in range(t.size):
            truth = SlamState.from_vector(truth_traj[i], 2)
            est = SlamState.from_vector(est_traj[i], 2)
            norms[i] = np.linalg.norm(output_error(est, observe(truth)), axis=1)
        for j in range(2):
            slope = np.polyfit(t, np.log(norms[:, j]), 1)[0]
            assert abs(slope + k[j]) < 0.01 * k[j]
        # and the decay is monotone the whole way down
        assert np.all(np.diff(norms, axis=0) < 0)

    def test_rejects_nonpositive_gains(self):
        truth = SlamState([0.0, 0.0], 0.0, [[1.0, 0.0]])
        with pytest.raises(ValueError):
            constant_gain_step(truth, Inputs(1.0, 0.0), observe(truth), np.array([0.0]))
        with pytest.raises(ValueError):
            constant_gain_step(truth, Inputs(1.0, 0.0), observe(truth), np.array([-1.0]))


class TestIekfStep:
    def test_perfect_estimate_is_pure_dynamics(self):
        truth = SlamState([0.4, -0.2], 0.9, [[1.0, 2.0]])
        inp = Inputs(1.1, 0.5)
        L = np.arange(10.0).reshape(5, 2)
        d = iekf_step(truth.copy(), inp, observe(truth), L)
        np.testing.assert_array_equal(d.to_vector(), dynamics(truth, inp).to_vector())

    def test_dimension_mismatch_rejected(self):
        truth = SlamState([0.0, 0.0], 0.0, [[1.0, 0.0]])
        with pytest.raises(ValueError):
            iekf_step(truth, Inputs(1.0, 0.0), observe(truth), np.zeros((5, 4)))

    def test_linearized_error_flow_is_gain_times_output_matrix(self):
        rng = np.random.default_rng(31)
        for n in (1, 2):
            truth = random_state(rng, n)
            inp = Inputs(1.0, 0.4)
            L = rng.normal(size=(3 + 2 * n, 2 * n))
            jac = fd_error_flow_jacobian("iekf", L, truth, inp)
            target = L @ error_output_matrix(n)
            assert np.abs(jac - target).max() < 1e-5

    def test_error_trajectory_ignores_input_profile(self):
        eta0 = InvariantError(0.2, [0.5, -0.3], [[0.4, 0.8]])
        truth0 = SlamState([0.0, 0.0], 0.0, [[2.0, 1.0]])
        est0 = estimate_from_error(truth0, eta0)
        L = stabilizing_iekf_gain(1)

        def eta_series(profile):
            _, truth_traj, est_traj = simulate_observer(
                "iekf", L, profile, truth0, est0, 4.0, 1e-3
            )
            out = np.empty((truth_traj.shape[0], 5))
            for i in range(truth_traj.shape[0]):
                out[i] = invariant_state_error(
                    SlamState.from_vector(est_traj[i], 1),
                    SlamState.from_vector(truth_traj[i], 1),
                ).to_vector()
            return out

        a = eta_series(ConstantProfile(1.0, 0.6))
        b = eta_series(ConstantProfile(0.5, -0.2))
        assert np.abs(a - b).max() < 1e-6


def test_error_output_matrix_blocks():
    c = error_output_matrix(2)
    assert c.shape == (4, 7)
    np.testing.assert_array_equal(c[:, 0], np.zeros(4))
    np.testing.assert_array_equal(c[0:2, 1:3], -np.eye(2))
    np.testing.assert_array_equal(c[0:2, 3:5], np.eye(2))
    np.testing.assert_array_equal(c[2:4, 5:7], np.eye(2))
