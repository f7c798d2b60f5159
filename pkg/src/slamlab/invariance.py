"""Invariant error coordinates, the two SE(2) symmetry actions of planar
SLAM, and executable checks for the structural properties the observers'
convergence rests on: closure of the group-error flow, trajectory
independence of the invariant error, and equivariance of the plant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import SE2, SE2Velocity, rot2, slam_embed
from .integrate import n_steps, rk4_step
from .model import SlamState, dynamics, eval_profile, observe
from .observers import OBSERVER_STEPS


@dataclass
class InvariantError:
    """Estimation-error coordinates unchanged by vehicle-frame remapping.

    heading = theta_hat - theta; position and landmark components are the
    differences after rotating the true quantities by the heading error.
    Zero exactly when the estimate equals the truth.
    """

    heading: float
    position: np.ndarray  # (2,)
    landmarks: np.ndarray  # (N, 2)

    def __post_init__(self):
        self.heading = float(self.heading)
        self.position = np.asarray(self.position, dtype=float).reshape(2)
        self.landmarks = np.asarray(self.landmarks, dtype=float).reshape(-1, 2)

    @property
    def n_landmarks(self) -> int:
        return self.landmarks.shape[0]

    def to_vector(self) -> np.ndarray:
        """Flatten to [heading, position (2), p_1 (2), ...] (the gain-row
        order of the invariant EKF)."""
        return np.concatenate(([self.heading], self.position, self.landmarks.ravel()))

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_landmarks: int) -> "InvariantError":
        vec = np.asarray(vec, dtype=float)
        return cls(vec[0], vec[1:3], vec[3:].reshape(n_landmarks, 2))


def invariant_state_error(est: SlamState, truth: SlamState) -> InvariantError:
    """Invariant error between an estimate and the true state."""
    if est.n_landmarks != truth.n_landmarks:
        raise ValueError("estimate and truth disagree on the landmark count")
    dtheta = est.theta - truth.theta
    rot = rot2(dtheta)
    return InvariantError(
        heading=dtheta,
        position=est.x - rot @ truth.x,
        landmarks=est.landmarks - truth.landmarks @ rot.T,
    )


def estimate_from_error(truth: SlamState, eta: InvariantError) -> SlamState:
    """The estimate whose invariant error relative to `truth` equals `eta`."""
    rot = rot2(eta.heading)
    return SlamState(
        x=eta.position + rot @ truth.x,
        theta=truth.theta + eta.heading,
        landmarks=eta.landmarks + truth.landmarks @ rot.T,
    )


def apply_left_action(g: SE2, state: SlamState) -> SlamState:
    """Reference-frame change: rotate and translate every position, shift the
    heading. The plant dynamics and the observations are both unchanged by
    this remapping."""
    rot = g.rotation()
    return SlamState(
        x=rot @ state.x + g.trans,
        theta=state.theta + g.angle,
        landmarks=state.landmarks @ rot.T + g.trans,
    )


def apply_right_action(g: SE2, state: SlamState) -> SlamState:
    """Vehicle-frame change: right-multiply the pose and landmark transforms
    by g. Positions shift by the offset of g carried through the heading;
    the heading shifts by g's angle.

    Note the composition order: acting by h then by g equals acting by the
    product h*g (right actions compose in reverse).
    """
    shift = rot2(state.theta) @ g.trans
    return SlamState(
        x=state.x + shift,
        theta=state.theta + g.angle,
        landmarks=state.landmarks + shift,
    )


def group_error(xhat: SE2, x: SE2, side: str) -> SE2:
    """Group difference of two transforms.

    'left' gives x^-1 * xhat, unchanged by a common left factor (reference-
    frame change); 'right' gives xhat * x^-1, unchanged by a common right
    factor (vehicle-frame change).
    """
    if side == "left":
        return x.inverse().compose(xhat)
    if side == "right":
        return xhat.compose(x.inverse())
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def _se2_algebra(w: float, lin: np.ndarray) -> np.ndarray:
    return SE2Velocity(w, lin).matrix()


def right_error_flow_check(
    L: np.ndarray, truth_traj: np.ndarray, est_traj: np.ndarray, dt: float
) -> float:
    """Residual of the closed-form flow of the vehicle-frame group errors.

    The trajectories are arrays of flat state vectors [x, theta, landmarks]
    sampled every dt, produced by simulating the plant together with the
    invariant-EKF observer with gain L. For each factor (pose, one per
    landmark), the group error eta = est_factor * truth_factor^-1 should obey
    d(eta)/dt = W(E) @ eta, where W(E) is the rigid-velocity correction the
    gain produces from the output error E, read off eta itself. Returns the
    sup-norm gap between a central finite difference of eta and that closed
    form, over all interior samples and factors.
    """
    truth_traj = np.asarray(truth_traj, dtype=float)
    est_traj = np.asarray(est_traj, dtype=float)
    if truth_traj.shape != est_traj.shape:
        raise ValueError("trajectory arrays must have the same shape")
    steps = truth_traj.shape[0]
    if steps < 3:
        raise ValueError("need at least three samples for a central difference")
    n = (truth_traj.shape[1] - 3) // 2

    def factors(flat):
        state = SlamState.from_vector(flat, n)
        return [SE2(state.theta, state.x)] + [SE2(state.theta, p) for p in state.landmarks]

    # (steps, n+1, 3, 3) group errors per factor
    etas = np.empty((steps, n + 1, 3, 3))
    for k in range(steps):
        t_factors = factors(truth_traj[k])
        e_factors = factors(est_traj[k])
        for j, (ef, tf) in enumerate(zip(e_factors, t_factors)):
            etas[k, j] = group_error(ef, tf, "right").matrix()

    worst = 0.0
    for k in range(1, steps - 1):
        eta_dot = (etas[k + 1] - etas[k - 1]) / (2.0 * dt)
        # output errors from the group errors themselves
        err = etas[k, 1:, :2, 2] - etas[k, 0, :2, 2]
        corr = L @ err.ravel()
        w = corr[0]
        rhs = np.empty_like(eta_dot)
        rhs[0] = _se2_algebra(w, corr[1:3]) @ etas[k, 0]
        for j in range(n):
            rhs[j + 1] = _se2_algebra(w, corr[3 + 2 * j : 5 + 2 * j]) @ etas[k, j + 1]
        gap = np.abs(eta_dot - rhs).max()
        if gap > worst:
            worst = gap
    return float(worst)


def simulate_observer(
    observer: str,
    gain,
    profile,
    truth0: SlamState,
    est0: SlamState,
    horizon: float,
    dt: float,
):
    """Co-integrate the noiseless plant and an observer with a fixed gain.

    Returns (t_grid, truth_traj, est_traj) with one flat state vector per
    sample. Measurements are evaluated continuously from the true state at
    every integration stage.
    """
    if observer not in OBSERVER_STEPS:
        raise ValueError(f"unknown observer {observer!r}")
    step_fn = OBSERVER_STEPS[observer]
    n = truth0.n_landmarks
    d = 3 + 2 * n
    steps = n_steps(horizon, dt)

    def rhs(t, y):
        truth = SlamState.from_vector(y[:d], n)
        est = SlamState.from_vector(y[d:], n)
        inp = eval_profile(profile, min(t, horizon))
        obs = observe(truth)
        d_truth = dynamics(truth, inp)
        d_est = step_fn(est, inp, obs, gain)
        return np.concatenate((d_truth.to_vector(), d_est.to_vector()))

    y = np.concatenate((truth0.to_vector(), est0.to_vector()))
    t_grid = np.arange(steps + 1) * dt
    out = np.empty((steps + 1, 2 * d))
    out[0] = y
    for k in range(steps):
        y = rk4_step(rhs, t_grid[k], y, dt)
        out[k + 1] = y
    return t_grid, out[:, :d], out[:, d:]


def default_landmarks(n: int, radius: float = 3.0) -> np.ndarray:
    """Landmarks spread on a circle; a deterministic default layout for the
    property checks."""
    angles = 2.0 * np.pi * np.arange(n) / max(n, 1)
    return radius * np.stack((np.cos(angles), np.sin(angles)), axis=1)


def autonomy_check(
    observer: str,
    gain,
    profile_a,
    profile_b,
    eta0: InvariantError,
    horizon: float,
    dt: float,
    truth0: SlamState | None = None,
) -> float:
    """Largest component-wise gap between the invariant-error trajectories of
    two noiseless runs that share the initial invariant error but follow
    different input profiles.

    For an observer whose invariant-error flow is autonomous the gap is at
    integration-tolerance level; for the plain EKF form it is not.
    Heading errors are compared unwrapped, so keep horizons short enough
    that they stay within one turn.
    """
    n = eta0.n_landmarks
    if truth0 is None:
        truth0 = SlamState(np.zeros(2), 0.0, default_landmarks(n))
    est0 = estimate_from_error(truth0, eta0)

    def error_traj(profile):
        _, truth_traj, est_traj = simulate_observer(
            observer, gain, profile, truth0, est0, horizon, dt
        )
        rows = np.empty((truth_traj.shape[0], 3 + 2 * n))
        for k in range(truth_traj.shape[0]):
            eta = invariant_state_error(
                SlamState.from_vector(est_traj[k], n),
                SlamState.from_vector(truth_traj[k], n),
            )
            rows[k] = eta.to_vector()
        return rows

    eta_a = error_traj(profile_a)
    eta_b = error_traj(profile_b)
    return float(np.abs(eta_a - eta_b).max())


def _sample_state(rng: np.random.Generator, n: int) -> SlamState:
    return SlamState(
        x=rng.uniform(-5, 5, 2),
        theta=rng.uniform(-np.pi, np.pi),
        landmarks=rng.uniform(-5, 5, (n, 2)),
    )


def _sample_se2(rng: np.random.Generator) -> SE2:
    return SE2(rng.uniform(-np.pi, np.pi), rng.uniform(-5, 5, 2))


@dataclass
class EquivarianceResidual:
    """Residuals of an equivariance check, split by what was tested."""

    output: float  # exact-algebra identity on the observations
    dynamics: float  # finite-difference check on the flow

    @property
    def max(self) -> float:
        return max(self.output, self.dynamics)


def equivariance_check(
    action: str, n_samples: int = 100, seed: int = 0, fd_step: float = 1e-5
) -> EquivarianceResidual:
    """Residuals of the plant's equivariance under one symmetry action.

    action='left' (reference-frame change): the observations must be
    unchanged (output part), and pushing the dynamics through the action must
    match the dynamics at the transformed state, by central finite
    differences along the flow (dynamics part).

    action='right' (vehicle-frame change): the observations must rotate by
    the inverse of the action's angle (output part), and the flow of the
    embedded pose and landmark transforms, right-multiplied by g, must follow
    the same dynamics with the body velocity conjugated by g (dynamics part).
    """
    from .model import Inputs

    if action not in ("left", "right"):
        raise ValueError(f"action must be 'left' or 'right', got {action!r}")
    rng = np.random.default_rng(seed)
    worst_out = 0.0
    worst_dyn = 0.0
    for _ in range(n_samples):
        n = int(rng.integers(1, 4))
        state = _sample_state(rng, n)
        g = _sample_se2(rng)
        inp = Inputs(rng.uniform(-2, 2), rng.uniform(-1, 1))

        if action == "left":
            res = np.abs(observe(apply_left_action(g, state)) - observe(state)).max()
            worst_out = max(worst_out, float(res))
            deriv = dynamics(state, inp)
            plus = apply_left_action(g, _nudge(state, deriv, fd_step))
            minus = apply_left_action(g, _nudge(state, deriv, -fd_step))
            fd = (plus.to_vector() - minus.to_vector()) / (2.0 * fd_step)
            res = np.abs(fd - dynamics(apply_left_action(g, state), inp).to_vector()).max()
            worst_dyn = max(worst_dyn, float(res))
        else:
            res = np.abs(
                observe(apply_right_action(g, state)) - observe(state) @ rot2(-g.angle).T
            ).max()
            worst_out = max(worst_out, float(res))
            deriv = dynamics(state, inp)
            g_mat = g.matrix()
            g_inv = g.inverse().matrix()
            xp, lmp, om, om_lm = slam_embed(_nudge(state, deriv, fd_step), inp)
            xm, lmm, _, _ = slam_embed(_nudge(state, deriv, -fd_step), inp)
            xb, lmb, _, _ = slam_embed(state, inp)
            pairs = [(xp, xm, xb, om.matrix())] + [
                (a, b, c, om_lm.matrix()) for a, b, c in zip(lmp, lmm, lmb)
            ]
            for fplus, fminus, fbase, om_mat in pairs:
                fd = (fplus.matrix() - fminus.matrix()) @ g_mat / (2.0 * fd_step)
                rhs = (fbase.matrix() @ g_mat) @ (g_inv @ om_mat @ g_mat)
                worst_dyn = max(worst_dyn, float(np.abs(fd - rhs).max()))
    return EquivarianceResidual(worst_out, worst_dyn)


def _nudge(state: SlamState, deriv: SlamState, h: float) -> SlamState:
    return SlamState(
        x=state.x + h * deriv.x,
        theta=state.theta + h * deriv.theta,
        landmarks=state.landmarks + h * deriv.landmarks,
    )
