"""The four SLAM estimators, written as continuous-time derivative functions.

All four observers share the signature step(estimate, inputs, observations,
gain) -> derivative, where the estimate is a SlamState and the derivative is
returned in the same container. Gains act on continuous-time corrections;
there is no discrete predict/update cycle.

Two gain-matrix layouts are used:

* `ekf_step` and `invariantized_step` take L of shape (3+2N, 2N) whose rows
  follow the state layout [x (2 rows), theta (1 row), landmarks (2 rows
  each)] and whose columns follow the stacked per-landmark residuals.
* `iekf_step` takes L of the same shape but with rows following the
  invariant-error layout [theta (1 row), x (2 rows), landmarks (2 rows
  each)], applied to the stacked rotated output error.

Residuals are always stacked in landmark-index order.
"""

from __future__ import annotations

import math

import numpy as np

from .geom import e3_cross, rot2
from .model import Inputs, SlamState, dynamics, observe


def raw_residual(est: SlamState, obs: np.ndarray) -> np.ndarray:
    """Predicted-minus-measured observations, one row per landmark."""
    return observe(est) - obs


def output_error(est: SlamState, obs: np.ndarray) -> np.ndarray:
    """Observation residual rotated by the estimated heading, one row per
    landmark.

    Equivalently (p_hat_i - x_hat) - R(theta_hat) z_i: the residual expressed
    in the reference frame. It is unchanged when estimate and truth are both
    remapped by a common vehicle-frame rotation-translation, which is what
    lets the invariant observers consume it.
    """
    if obs.shape != est.landmarks.shape:
        raise ValueError(
            f"observation shape {obs.shape} does not match {est.landmarks.shape}"
        )
    # row i is R(theta_hat) @ (zhat_i - z_i)
    return (observe(est) - obs) @ rot2(est.theta).T


def ekf_jacobians(est: SlamState, inp: Inputs) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of the plant dynamics and observation map at the estimate.

    State order is [x, theta, p_1, ..., p_N]. The only nonzero dynamics block
    is d(xdot)/d(theta) = u * R(theta) @ e2; the observation blocks are
    dh_i/dx = -R(-theta), dh_i/dtheta = -e3_cross(zhat_i), dh_i/dp_i = R(-theta).
    """
    n = est.n_landmarks
    d = 3 + 2 * n
    u = float(inp.u)
    a_mat = np.zeros((d, d))
    a_mat[0:2, 2] = u * np.array([-math.sin(est.theta), math.cos(est.theta)])

    rot_back = rot2(-est.theta)
    zhat = observe(est)
    c_mat = np.zeros((2 * n, d))
    for i in range(n):
        rows = slice(2 * i, 2 * i + 2)
        c_mat[rows, 0:2] = -rot_back
        c_mat[rows, 2] = -e3_cross(zhat[i])
        c_mat[rows, 3 + 2 * i : 5 + 2 * i] = rot_back
    return a_mat, c_mat


def _check_gain_shape(L: np.ndarray, n: int) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.shape != (3 + 2 * n, 2 * n):
        raise ValueError(
            f"gain matrix has shape {L.shape}, expected ({3 + 2 * n}, {2 * n})"
        )
    return L


def ekf_step(est: SlamState, inp: Inputs, obs: np.ndarray, L: np.ndarray) -> SlamState:
    """Standard EKF-SLAM derivative: plant dynamics plus gain times the
    stacked raw residuals.

    Corrections are applied directly in the reference frame even though the
    residuals live in the vehicle frame; `invariantized_step` is the variant
    that repairs this mismatch.
    """
    n = est.n_landmarks
    L = _check_gain_shape(L, n)
    r = raw_residual(est, obs).ravel()
    corr = L @ r
    base = dynamics(est, inp)
    return SlamState(
        x=base.x + corr[0:2],
        theta=base.theta + corr[2],
        landmarks=base.landmarks + corr[3:].reshape(n, 2),
    )


def invariantized_step(
    est: SlamState, inp: Inputs, obs: np.ndarray, L: np.ndarray
) -> SlamState:
    """EKF-SLAM derivative with frame-aligned corrections.

    Identical to `ekf_step` except that the position and landmark corrections
    are premultiplied by R(theta_hat), so that a residual expressed in the
    vehicle frame corrects quantities expressed in the reference frame. The
    heading correction is a scalar and needs no alignment.
    """
    n = est.n_landmarks
    L = _check_gain_shape(L, n)
    r = raw_residual(est, obs).ravel()
    corr = L @ r
    rot = rot2(est.theta)
    base = dynamics(est, inp)
    return SlamState(
        x=base.x + rot @ corr[0:2],
        theta=base.theta + corr[2],
        landmarks=base.landmarks + corr[3:].reshape(n, 2) @ rot.T,
    )


def constant_gain_step(
    est: SlamState, inp: Inputs, obs: np.ndarray, k: np.ndarray
) -> SlamState:
    """Constant-gain invariant observer derivative.

    The pose is dead-reckoned (no correction) and each landmark estimate is
    pulled along the rotated output error at its own rate k_i > 0. Along any
    trajectory of the noiseless plant, the rotated output error of landmark i
    then satisfies dY_i/dt = -k_i Y_i, so every output error converges to
    zero globally and exponentially at rate k_i.
    """
    n = est.n_landmarks
    k = np.asarray(k, dtype=float)
    if k.shape != (n,):
        raise ValueError(f"gain vector has shape {k.shape}, expected ({n},)")
    if np.any(k <= 0):
        raise ValueError("per-landmark gains must be positive")
    err = output_error(est, obs)
    base = dynamics(est, inp)
    return SlamState(
        x=base.x,
        theta=base.theta,
        landmarks=base.landmarks - k[:, None] * err,
    )


def iekf_step(est: SlamState, inp: Inputs, obs: np.ndarray, L: np.ndarray) -> SlamState:
    """Invariant-EKF derivative.

    The gain acts on the stacked rotated output error E. Rows of L split into
    a heading row, two position rows, and two rows per landmark; the heading
    feedback additionally swings the position and landmark estimates around
    the origin (the e3_cross terms), which closes the estimation-error flow
    into an autonomous system independent of the inputs.
    """
    n = est.n_landmarks
    L = _check_gain_shape(L, n)
    err = output_error(est, obs).ravel()
    corr = L @ err
    w = corr[0]
    base = dynamics(est, inp)
    return SlamState(
        x=base.x + w * e3_cross(est.x) + corr[1:3],
        theta=base.theta + w,
        landmarks=w * e3_cross(est.landmarks) + corr[3:].reshape(n, 2),
    )


def error_output_matrix(n_landmarks: int) -> np.ndarray:
    """Sensitivity of the stacked rotated output error to the invariant error
    coordinates [theta, x, p_1, ..., p_N]: block [0 | -I | I] per landmark.

    This is the fixed output matrix of the linearized invariant-EKF error
    flow; its heading column is zero because the rotated output error does
    not see the heading error at all.
    """
    n = n_landmarks
    c_mat = np.zeros((2 * n, 3 + 2 * n))
    eye2 = np.eye(2)
    for i in range(n):
        rows = slice(2 * i, 2 * i + 2)
        c_mat[rows, 1:3] = -eye2
        c_mat[rows, 3 + 2 * i : 5 + 2 * i] = eye2
    return c_mat


def stabilizing_iekf_gain(
    n_landmarks: int, rate: float = 1.0, heading_gain: float = 0.2
) -> np.ndarray:
    """A simple fixed gain in the invariant-EKF row layout that makes the
    output-error flow globally stable.

    Position rows pull toward the mean output error, landmark rows push
    against their own output error, and the heading row (gain `heading_gain`
    on the first error component) exercises the rotational coupling without
    affecting stability.
    """
    n = n_landmarks
    L = np.zeros((3 + 2 * n, 2 * n))
    L[0, 0] = heading_gain
    for i in range(n):
        cols = slice(2 * i, 2 * i + 2)
        L[1:3, cols] = (rate / n) * np.eye(2)
        L[3 + 2 * i : 5 + 2 * i, cols] = -rate * np.eye(2)
    return L


def stabilizing_ekf_gain(
    n_landmarks: int, rate: float = 1.0, heading_gain: float = 0.2
) -> np.ndarray:
    """The same gain pattern rearranged into the raw-residual row layout
    [x, theta, landmarks] used by `ekf_step` and `invariantized_step`."""
    n = n_landmarks
    L = np.zeros((3 + 2 * n, 2 * n))
    L[2, 0] = heading_gain
    for i in range(n):
        cols = slice(2 * i, 2 * i + 2)
        L[0:2, cols] = (rate / n) * np.eye(2)
        L[3 + 2 * i : 5 + 2 * i, cols] = -rate * np.eye(2)
    return L


# scenario-facing observer names; gains are an L matrix for the first three
# and a per-landmark rate vector for "prop1"
OBSERVER_STEPS = {
    "ekf": ekf_step,
    "inv-ekf": invariantized_step,
    "prop1": constant_gain_step,
    "iekf": iekf_step,
}
