"""Planar rotations, SE(2) rigid transforms, and the homogeneous-matrix
embedding that exposes the Lie-group structure of the planar SLAM plant.

Angles are stored unwrapped (no normalization into (-pi, pi]) so that
transform trajectories stay smooth under ODE integration; wrap only when
comparing headings in metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def rot2(theta: float) -> np.ndarray:
    """2x2 counterclockwise rotation matrix for an angle in radians."""
    if not math.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta!r}")
    c = math.cos(theta)
    s = math.sin(theta)
    return np.array([[c, -s], [s, c]])


def e3_cross(v: np.ndarray) -> np.ndarray:
    """Rotate a planar vector by +90 degrees: (v1, v2) -> (-v2, v1).

    This is the planar shadow of crossing the vertical axis with an in-plane
    vector, i.e. the generator of counterclockwise rotations. Accepts a single
    2-vector or an array of them (last axis of length 2).
    """
    v = np.asarray(v, dtype=float)
    return np.stack((-v[..., 1], v[..., 0]), axis=-1)


@dataclass
class SE2:
    """Planar rigid transform, stored as (angle, translation).

    The 3x3 homogeneous matrix is materialized on demand; keeping the angle
    as a scalar makes composition and inversion exact in the angle parameter.
    """

    angle: float
    trans: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.angle = float(self.angle)
        self.trans = np.asarray(self.trans, dtype=float).reshape(2)

    @classmethod
    def identity(cls) -> "SE2":
        return cls(0.0, np.zeros(2))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "SE2":
        """Recover (angle, translation) from a 3x3 homogeneous matrix.

        The recovered angle lies in (-pi, pi]; use this only where the
        unwrapped angle does not matter.
        """
        m = np.asarray(m, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"expected a 3x3 matrix, got shape {m.shape}")
        if not np.allclose(m[2], [0.0, 0.0, 1.0], atol=1e-9):
            raise ValueError("bottom row of a homogeneous SE(2) matrix must be (0, 0, 1)")
        return cls(math.atan2(m[1, 0], m[0, 0]), m[:2, 2].copy())

    def rotation(self) -> np.ndarray:
        return rot2(self.angle)

    def matrix(self) -> np.ndarray:
        m = np.eye(3)
        m[:2, :2] = rot2(self.angle)
        m[:2, 2] = self.trans
        return m

    def compose(self, other: "SE2") -> "SE2":
        """Group product self * other (apply `other` first, then `self`)."""
        return SE2(self.angle + other.angle, rot2(self.angle) @ other.trans + self.trans)

    def inverse(self) -> "SE2":
        return SE2(-self.angle, -(rot2(-self.angle) @ self.trans))

    def act(self, point: np.ndarray) -> np.ndarray:
        """Apply the transform to a point: R @ p + t."""
        point = np.asarray(point, dtype=float)
        return rot2(self.angle) @ point + self.trans


@dataclass
class SE2Velocity:
    """Body velocity of a planar rigid transform: angular rate and linear velocity.

    The matrix form has a skew-symmetric top-left 2x2 block and a zero bottom
    row, so that for a transform X the flow dX/dt = X @ velocity.matrix() stays
    on SE(2).
    """

    angular: float
    linear: np.ndarray

    def __post_init__(self):
        self.angular = float(self.angular)
        self.linear = np.asarray(self.linear, dtype=float).reshape(2)

    def matrix(self) -> np.ndarray:
        w = self.angular
        return np.array(
            [
                [0.0, -w, self.linear[0]],
                [w, 0.0, self.linear[1]],
                [0.0, 0.0, 0.0],
            ]
        )


def slam_embed(state, inp) -> tuple[SE2, list[SE2], SE2Velocity, SE2Velocity]:
    """Embed a SLAM state and its inputs into matrix Lie-group data.

    Returns (X, P_list, Omega, Omega_lm):

    * X carries the vehicle pose (heading, position),
    * each entry of P_list pairs the heading with one landmark position,
    * Omega is the vehicle body velocity (angular rate u*v, linear u along
      the first body axis),
    * Omega_lm is the same angular rate with zero linear part.

    The matrix flows dX/dt = X @ Omega and dP_i/dt = P_i @ Omega_lm reproduce
    the plant dynamics componentwise.
    """
    u = float(inp.u)
    v = float(inp.v)
    x_mat = SE2(state.theta, state.x)
    lm_mats = [SE2(state.theta, p) for p in state.landmarks]
    omega = SE2Velocity(u * v, np.array([u, 0.0]))
    omega_lm = SE2Velocity(u * v, np.zeros(2))
    return x_mat, lm_mats, omega, omega_lm
