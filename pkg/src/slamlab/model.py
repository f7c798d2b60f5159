"""The planar SLAM plant: unicycle dynamics with stationary point landmarks,
vehicle-frame landmark observations, relative measurement noise, and input
profiles (constant and piecewise-constant schedules).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geom import rot2

E1 = np.array([1.0, 0.0])

# slack when checking profile horizons, to absorb t = k*dt rounding
_TIME_SLACK = 1e-9

_UINT64_MAX = 2**64 - 1


@dataclass
class SlamState:
    """Vehicle position, heading, and N landmark positions (reference frame).

    Also used as the derivative container: a SlamState whose fields hold the
    time derivatives of the corresponding quantities.
    """

    x: np.ndarray  # (2,) vehicle position, m
    theta: float  # heading, rad, unwrapped
    landmarks: np.ndarray  # (N, 2) landmark positions, m

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(2)
        self.theta = float(self.theta)
        self.landmarks = np.asarray(self.landmarks, dtype=float).reshape(-1, 2)

    @property
    def n_landmarks(self) -> int:
        return self.landmarks.shape[0]

    def to_vector(self) -> np.ndarray:
        """Flatten to [x (2), theta, p_1 (2), ..., p_N (2)]."""
        return np.concatenate((self.x, [self.theta], self.landmarks.ravel()))

    @classmethod
    def from_vector(cls, vec: np.ndarray, n_landmarks: int) -> "SlamState":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (3 + 2 * n_landmarks,):
            raise ValueError(
                f"state vector has shape {vec.shape}, expected ({3 + 2 * n_landmarks},)"
            )
        return cls(vec[0:2], vec[2], vec[3:].reshape(n_landmarks, 2))

    def copy(self) -> "SlamState":
        return SlamState(self.x.copy(), self.theta, self.landmarks.copy())


def state_dim(n_landmarks: int) -> int:
    return 3 + 2 * n_landmarks


@dataclass
class Inputs:
    u: float  # forward speed, m/s
    v: float  # steering, 1/m (heading rate is u*v)


@dataclass
class NoiseConfig:
    """Relative measurement-noise level and the seed that keys every draw."""

    relative_std: float
    seed: int

    def __post_init__(self):
        if self.relative_std < 0:
            raise ValueError("relative_std must be nonnegative")
        if not 0 <= int(self.seed) <= _UINT64_MAX:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(self.seed)


@dataclass
class ConstantProfile:
    """Constant inputs; a circle when v != 0 (radius 1/|v|), a line when v = 0."""

    u: float
    v: float
    horizon: float | None = None  # None means defined for all t >= 0

    def inputs(self, t: float) -> Inputs:
        if t < -_TIME_SLACK or (self.horizon is not None and t > self.horizon + _TIME_SLACK):
            raise ValueError(f"t={t} outside profile horizon [0, {self.horizon}]")
        return Inputs(self.u, self.v)


@dataclass
class PiecewiseProfile:
    """Piecewise-constant input schedule.

    Segments are (t_start, t_end, u, v) tuples; they must be ordered,
    non-overlapping, and cover [t0, horizon] without gaps. Each segment is
    active on [t_start, t_end); the final segment includes its right endpoint.
    """

    segments: list[tuple[float, float, float, float]]

    def __post_init__(self):
        if not self.segments:
            raise ValueError("piecewise profile needs at least one segment")
        self.segments = [tuple(float(x) for x in seg) for seg in self.segments]
        for t0, t1, _, _ in self.segments:
            if t1 <= t0:
                raise ValueError(f"segment ({t0}, {t1}) has nonpositive length")
        for (_, prev_end, _, _), (start, _, _, _) in zip(self.segments, self.segments[1:]):
            if abs(start - prev_end) > _TIME_SLACK:
                raise ValueError("segments must be contiguous and ordered")

    @property
    def horizon(self) -> float:
        return self.segments[-1][1]

    def inputs(self, t: float) -> Inputs:
        start = self.segments[0][0]
        if t < start - _TIME_SLACK or t > self.horizon + _TIME_SLACK:
            raise ValueError(f"t={t} outside profile horizon [{start}, {self.horizon}]")
        for t0, t1, u, v in self.segments:
            if t < t1:
                return Inputs(u, v)
        # t == horizon (up to slack): last segment applies
        u, v = self.segments[-1][2:]
        return Inputs(u, v)


InputProfile = ConstantProfile | PiecewiseProfile


def eval_profile(profile: InputProfile, t: float) -> Inputs:
    """Inputs scheduled at time t; rejects t outside the profile horizon."""
    return profile.inputs(t)


def dynamics(state: SlamState, inp: Inputs) -> SlamState:
    """Time derivative of the plant state.

    The vehicle advances at speed u along its heading and turns at rate u*v;
    landmarks are stationary.
    """
    c = math.cos(state.theta)
    s = math.sin(state.theta)
    return SlamState(
        x=np.array([inp.u * c, inp.u * s]),
        theta=inp.u * inp.v,
        landmarks=np.zeros_like(state.landmarks),
    )


def observe(state: SlamState) -> np.ndarray:
    """Positions of all landmarks seen from the vehicle frame, one per row."""
    # row i is R(-theta) @ (p_i - x)
    return (state.landmarks - state.x) @ rot2(state.theta)


def noisy_observe(state: SlamState, cfg: NoiseConfig, step: int) -> np.ndarray:
    """Vehicle-frame observations with relative Gaussian noise.

    Each component of landmark i's measurement is perturbed by zero-mean
    Gaussian noise with standard deviation relative_std * ||z_i||, where
    ||z_i|| is the true (noiseless) range. Every draw is keyed by
    (seed, step, landmark index) through a counter-based generator, so the
    result does not depend on evaluation order or thread count.
    """
    z = observe(state)
    if cfg.relative_std == 0.0:
        return z
    out = z.copy()
    for i in range(z.shape[0]):
        scale = cfg.relative_std * math.hypot(z[i, 0], z[i, 1])
        if scale == 0.0:
            continue
        rng = np.random.Generator(np.random.Philox(key=cfg.seed, counter=[step, i, 0, 0]))
        out[i] += scale * rng.standard_normal(2)
    return out
