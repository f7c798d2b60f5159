"""Scenario files: everything a simulation run needs, in plain JSON with
explicit keys, so that every run is reproducible from its inputs alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import ConstantProfile, NoiseConfig, PiecewiseProfile, state_dim
from .observers import OBSERVER_STEPS

OBSERVER_KINDS = tuple(OBSERVER_STEPS)


def _as_square(value, dim: int, name: str) -> np.ndarray:
    """Accept a scalar (times identity), a diagonal, or a full matrix."""
    if value is None:
        raise ValueError(f"{name} is missing")
    if np.isscalar(value):
        return float(value) * np.eye(dim)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        if arr.shape != (dim,):
            raise ValueError(f"{name} diagonal has length {arr.shape[0]}, expected {dim}")
        return np.diag(arr)
    if arr.shape != (dim, dim):
        raise ValueError(f"{name} has shape {arr.shape}, expected ({dim}, {dim})")
    return arr


@dataclass
class ConstantGain:
    """A fixed gain matrix, applied exactly as given."""

    L: np.ndarray

    kind = "constant"

    def __post_init__(self):
        self.L = np.asarray(self.L, dtype=float)

    def to_dict(self):
        return {"kind": "constant", "L": self.L.tolist()}


@dataclass
class PerLandmarkGain:
    """One positive rate per landmark (the constant-gain invariant observer)."""

    k: np.ndarray

    kind = "per-landmark"

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=float).reshape(-1)
        if np.any(self.k <= 0):
            raise ValueError("per-landmark gains must be positive")

    def to_dict(self):
        return {"kind": "per-landmark", "k": self.k.tolist()}


@dataclass
class RiccatiTuning:
    """Riccati-driven gains: tuning matrices M, N and the initial covariance.

    Entries may be scalars (times identity), diagonals, or full matrices.
    Defaults: M = identity, N = relative_std**2 * identity, P0 = identity.
    """

    M: object = None
    Nmat: object = None
    P0: object = None

    kind = "riccati"

    def resolve(self, n_landmarks: int, relative_std: float):
        d = state_dim(n_landmarks)
        m = 2 * n_landmarks
        m_mat = np.eye(d) if self.M is None else _as_square(self.M, d, "M")
        if self.Nmat is None:
            if relative_std <= 0:
                raise ValueError(
                    "the default measurement tuning N = relative_std**2 * I needs "
                    "a positive relative_std; set N explicitly for noiseless runs"
                )
            n_mat = relative_std**2 * np.eye(m)
        else:
            n_mat = _as_square(self.Nmat, m, "Nmat")
        p0 = np.eye(d) if self.P0 is None else _as_square(self.P0, d, "P0")
        return m_mat, n_mat, p0

    def to_dict(self):
        out = {"kind": "riccati"}
        for key, value in (("M", self.M), ("Nmat", self.Nmat), ("P0", self.P0)):
            if value is not None:
                out[key] = value.tolist() if isinstance(value, np.ndarray) else value
        return out


def _gain_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "constant":
        return ConstantGain(np.asarray(d["L"], dtype=float))
    if kind == "per-landmark":
        return PerLandmarkGain(np.asarray(d["k"], dtype=float))
    if kind == "riccati":
        return RiccatiTuning(d.get("M"), d.get("Nmat"), d.get("P0"))
    raise ValueError(f"unknown gain kind {kind!r}")


def _profile_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "constant":
        return ConstantProfile(float(d["u"]), float(d["v"]), d.get("horizon"))
    if kind == "piecewise":
        segments = [(s["t0"], s["t1"], s["u"], s["v"]) for s in d["segments"]]
        return PiecewiseProfile(segments)
    raise ValueError(f"unknown profile kind {kind!r}")


def _profile_to_dict(profile) -> dict:
    if isinstance(profile, ConstantProfile):
        out = {"kind": "constant", "u": profile.u, "v": profile.v}
        if profile.horizon is not None:
            out["horizon"] = profile.horizon
        return out
    if isinstance(profile, PiecewiseProfile):
        return {
            "kind": "piecewise",
            "segments": [
                {"t0": t0, "t1": t1, "u": u, "v": v} for t0, t1, u, v in profile.segments
            ],
        }
    raise ValueError(f"cannot serialize profile {profile!r}")


@dataclass
class Scenario:
    """Complete description of one simulation run."""

    name: str
    horizon: float
    dt: float
    landmarks: np.ndarray  # (N, 2) true positions
    start_x: np.ndarray  # (2,) true initial position
    start_theta: float
    est_x: np.ndarray  # initial estimated position
    est_theta: float
    profile: object
    observer: str
    gain: object
    relative_std: float = 0.0
    seed: int = 0
    noise_seed: int | None = None  # defaults to `seed`
    est_landmarks: np.ndarray | None = None  # default: first noiseless
    # observation mapped through the initial pose estimate

    def __post_init__(self):
        self.landmarks = np.asarray(self.landmarks, dtype=float).reshape(-1, 2)
        self.start_x = np.asarray(self.start_x, dtype=float).reshape(2)
        self.est_x = np.asarray(self.est_x, dtype=float).reshape(2)
        if self.est_landmarks is not None:
            self.est_landmarks = np.asarray(self.est_landmarks, dtype=float).reshape(-1, 2)

    @property
    def n_landmarks(self) -> int:
        return self.landmarks.shape[0]

    def noise_config(self) -> NoiseConfig:
        seed = self.seed if self.noise_seed is None else self.noise_seed
        return NoiseConfig(self.relative_std, seed)

    def validate(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        # horizon 0 is the documented degenerate case (header-only log)
        if self.horizon != 0 and self.horizon < self.dt:
            raise ValueError("horizon must be 0 or at least one step long")
        if not np.all(np.isfinite(self.landmarks)):
            raise ValueError("landmark positions must be finite")
        if self.n_landmarks == 0:
            raise ValueError("at least one landmark is required")
        if self.observer not in OBSERVER_KINDS:
            raise ValueError(f"unknown observer {self.observer!r}")
        if self.observer == "prop1":
            if not isinstance(self.gain, PerLandmarkGain):
                raise ValueError("observer 'prop1' needs a per-landmark gain")
            if self.gain.k.shape != (self.n_landmarks,):
                raise ValueError("per-landmark gain length must match the landmark count")
        else:
            if isinstance(self.gain, PerLandmarkGain):
                raise ValueError(f"observer {self.observer!r} cannot use a per-landmark gain")
            if isinstance(self.gain, ConstantGain):
                d = state_dim(self.n_landmarks)
                if self.gain.L.shape != (d, 2 * self.n_landmarks):
                    raise ValueError(
                        f"constant gain has shape {self.gain.L.shape}, expected "
                        f"({d}, {2 * self.n_landmarks})"
                    )
        if self.relative_std < 0:
            raise ValueError("relative_std must be nonnegative")
        if self.est_landmarks is not None and self.est_landmarks.shape != self.landmarks.shape:
            raise ValueError("estimated landmarks must match the true landmark count")
        # profile must cover the run
        horizon_attr = getattr(self.profile, "horizon", None)
        if horizon_attr is not None and horizon_attr < self.horizon - 1e-9:
            raise ValueError("input profile does not cover the scenario horizon")

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "horizon": self.horizon,
            "dt": self.dt,
            "landmarks": self.landmarks.tolist(),
            "initial_pose": {"x": self.start_x.tolist(), "theta": self.start_theta},
            "initial_estimate": {"x": self.est_x.tolist(), "theta": self.est_theta},
            "profile": _profile_to_dict(self.profile),
            "observer": self.observer,
            "gain": self.gain.to_dict(),
            "noise": {"relative_std": self.relative_std},
            "seed": self.seed,
        }
        if self.noise_seed is not None:
            out["noise"]["seed"] = self.noise_seed
        if self.est_landmarks is not None:
            out["initial_estimate"]["landmarks"] = self.est_landmarks.tolist()
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            noise = d.get("noise", {})
            est = d["initial_estimate"]
            sc = cls(
                name=d.get("name", "scenario"),
                horizon=float(d["horizon"]),
                dt=float(d["dt"]),
                landmarks=np.asarray(d["landmarks"], dtype=float),
                start_x=np.asarray(d["initial_pose"]["x"], dtype=float),
                start_theta=float(d["initial_pose"]["theta"]),
                est_x=np.asarray(est["x"], dtype=float),
                est_theta=float(est["theta"]),
                profile=_profile_from_dict(d["profile"]),
                observer=d["observer"],
                gain=_gain_from_dict(d["gain"]),
                relative_std=float(noise.get("relative_std", 0.0)),
                seed=int(d.get("seed", 0)),
                noise_seed=noise.get("seed"),
                est_landmarks=(
                    np.asarray(est["landmarks"], dtype=float) if "landmarks" in est else None
                ),
            )
        except KeyError as exc:
            raise ValueError(f"scenario is missing required key {exc}") from exc
        sc.validate()
        return sc

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path} is not valid JSON: {exc}") from exc
    sc = Scenario.from_dict(data)
    if sc.name == "scenario":
        sc.name = Path(path).stem
    return sc


def save_scenario(sc: Scenario, path):
    with open(path, "w") as fh:
        json.dump(sc.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
