"""Scenario execution and post-processing.

`run_scenario` co-integrates the true plant, the selected observer, and (for
Riccati-driven gains) the covariance flow with one fixed-step RK4 loop, and
logs a fixed set of columns per step. Runs are bit-reproducible: floats are
serialized with 17 significant digits and every random draw is keyed by
(seed, step, landmark), so thread count and evaluation order cannot change
the output.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .geom import SE2, rot2
from .integrate import n_steps, rk4_step
from .invariance import invariant_state_error
from .model import SlamState, dynamics, eval_profile, noisy_observe, observe
from .observers import (
    OBSERVER_STEPS,
    ekf_jacobians,
    error_output_matrix,
    output_error,
)
from .riccati import (
    PSD_TOLERANCE,
    RiccatiDivergenceError,
    _inverse_spd,
    gain_settle_index,
    gain_variation,
)
from .scenario import ConstantGain, PerLandmarkGain, RiccatiTuning, Scenario


@dataclass
class RunLog:
    """Per-step record of one scenario run.

    Columns: t, the true state, the estimate, the invariant-error
    coordinates, per-landmark output-error norms, the flattened gain matrix,
    and (for Riccati-driven runs) the diagonal of P.
    """

    scenario: Scenario
    columns: list[str]
    rows: np.ndarray  # (K, len(columns))

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def columns_matching(self, prefix: str) -> np.ndarray:
        idx = [i for i, c in enumerate(self.columns) if c.startswith(prefix)]
        if not idx:
            raise KeyError(f"no columns start with {prefix!r}")
        return self.rows[:, idx]

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def gain_series(self) -> np.ndarray:
        """Per-step gain matrices, shape (K, 3+2N, 2N)."""
        n = self.scenario.n_landmarks
        flat = self.columns_matching("L_")
        return flat.reshape(flat.shape[0], 3 + 2 * n, 2 * n)

    def estimate_points(self) -> np.ndarray:
        """Estimated trajectory samples plus the final estimated map."""
        n = self.scenario.n_landmarks
        traj = np.column_stack([self.column("est_x1"), self.column("est_x2")])
        marks = np.array(
            [
                [self.column(f"est_p{i + 1}_1")[-1], self.column(f"est_p{i + 1}_2")[-1]]
                for i in range(n)
            ]
        )
        return np.vstack([traj, marks])

    def true_points(self) -> np.ndarray:
        n = self.scenario.n_landmarks
        traj = np.column_stack([self.column("true_x1"), self.column("true_x2")])
        marks = np.array(
            [
                [self.column(f"true_p{i + 1}_1")[-1], self.column(f"true_p{i + 1}_2")[-1]]
                for i in range(n)
            ]
        )
        return np.vstack([traj, marks])

    def to_csv_bytes(self) -> bytes:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(f"{v:.17g}" for v in row))
        return ("\n".join(lines) + "\n").encode()

    def manifest(self) -> dict:
        return {
            "scenario_sha256": self.scenario.sha256(),
            "seed": self.scenario.seed,
            "tool_version": __version__,
        }

    def write(self, out_dir) -> None:
        """Write run.csv and manifest.json into a directory."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "run.csv").write_bytes(self.to_csv_bytes())
        (out / "manifest.json").write_text(
            json.dumps(self.manifest(), sort_keys=True, indent=2) + "\n"
        )


def _log_columns(n: int, with_riccati: bool) -> list[str]:
    cols = ["t"]
    state_cols = ["x1", "x2", "theta"] + [
        f"p{i + 1}_{c + 1}" for i in range(n) for c in range(2)
    ]
    cols += [f"true_{c}" for c in state_cols]
    cols += [f"est_{c}" for c in state_cols]
    cols += ["err_theta", "err_x1", "err_x2"] + [
        f"err_p{i + 1}_{c + 1}" for i in range(n) for c in range(2)
    ]
    cols += [f"outerr_norm_{i + 1}" for i in range(n)]
    d = 3 + 2 * n
    cols += [f"L_r{r}_c{c}" for r in range(d) for c in range(2 * n)]
    if with_riccati:
        cols += [f"P_diag_{i}" for i in range(d)]
    return cols


def initial_estimate(sc: Scenario) -> SlamState:
    """Initial observer state: the scenario's pose estimate, with landmark
    estimates defaulting to the first noiseless observation mapped through
    that pose estimate."""
    if sc.est_landmarks is not None:
        marks = sc.est_landmarks.copy()
    else:
        truth0 = SlamState(sc.start_x, sc.start_theta, sc.landmarks)
        z0 = observe(truth0)
        marks = sc.est_x + z0 @ rot2(sc.est_theta).T
    return SlamState(sc.est_x.copy(), sc.est_theta, marks)


def run_scenario(sc: Scenario) -> RunLog:
    """Execute one scenario deterministically and return its log.

    Plant, observer, and (when the gain is Riccati-driven) the covariance are
    advanced together by one RK4 loop. Measurement noise is drawn once per
    step and held over the step's stages; the noiseless part of the
    measurement follows the true state continuously.
    """
    sc.validate()
    n = sc.n_landmarks
    d = 3 + 2 * n
    steps = n_steps(sc.horizon, sc.dt)
    noise = sc.noise_config()
    step_fn = OBSERVER_STEPS[sc.observer]

    truth0 = SlamState(sc.start_x, sc.start_theta, sc.landmarks)
    est0 = initial_estimate(sc)

    riccati_mode = isinstance(sc.gain, RiccatiTuning)
    stationary = sc.observer == "iekf"
    if riccati_mode:
        m_mat, n_mat, p0 = sc.gain.resolve(n, sc.relative_std)
        ninv = _inverse_spd(n_mat)
        c_fixed = error_output_matrix(n)
        a_zero = np.zeros((d, d))
        s_fixed = c_fixed.T @ ninv @ c_fixed  # stationary mode only
        y0 = np.concatenate((truth0.to_vector(), est0.to_vector(), p0.ravel()))
    elif isinstance(sc.gain, ConstantGain):
        gain_const = sc.gain.L
        y0 = np.concatenate((truth0.to_vector(), est0.to_vector()))
    elif isinstance(sc.gain, PerLandmarkGain):
        gain_const = sc.gain.k
        y0 = np.concatenate((truth0.to_vector(), est0.to_vector()))
    else:
        raise ValueError(f"unsupported gain spec {sc.gain!r}")

    def jacobians_at(est, inp):
        if stationary:
            return a_zero, c_fixed
        return ekf_jacobians(est, inp)

    def rhs(t, y, eps):
        truth = SlamState.from_vector(y[:d], n)
        est = SlamState.from_vector(y[d : 2 * d], n)
        inp = eval_profile(sc.profile, min(t, sc.horizon))
        obs = observe(truth)
        if eps is not None:
            obs = obs + eps
        d_truth = dynamics(truth, inp)
        if riccati_mode:
            p = y[2 * d :].reshape(d, d)
            a_mat, c_mat = jacobians_at(est, inp)
            # the Kalman gain corrects along measured-minus-predicted, while
            # the step functions apply gains to predicted-minus-measured
            gain = -(p @ c_mat.T @ ninv)
            d_est = step_fn(est, inp, obs, gain)
            if stationary:
                dp = m_mat - p @ s_fixed @ p
            else:
                pct = p @ c_mat.T
                dp = a_mat @ p + p @ a_mat.T + m_mat - pct @ ninv @ pct.T
            return np.concatenate((d_truth.to_vector(), d_est.to_vector(), dp.ravel()))
        d_est = step_fn(est, inp, obs, gain_const)
        return np.concatenate((d_truth.to_vector(), d_est.to_vector()))

    def logged_gain(y, inp):
        est = SlamState.from_vector(y[d : 2 * d], n)
        if riccati_mode:
            p = y[2 * d :].reshape(d, d)
            _, c_mat = jacobians_at(est, inp)
            return -(p @ c_mat.T @ ninv)
        if isinstance(sc.gain, ConstantGain):
            return gain_const
        # per-landmark rates, presented in the invariant-EKF row layout
        L = np.zeros((d, 2 * n))
        for i in range(n):
            L[3 + 2 * i : 5 + 2 * i, 2 * i : 2 * i + 2] = -gain_const[i] * np.eye(2)
        return L

    def noise_draw(truth, k):
        if noise.relative_std == 0.0:
            return None
        return noisy_observe(truth, noise, k) - observe(truth)

    columns = _log_columns(n, riccati_mode)
    rows = np.empty((steps + 1 if steps > 0 else 0, len(columns)))

    def log_row(idx, t, y, eps):
        truth = SlamState.from_vector(y[:d], n)
        est = SlamState.from_vector(y[d : 2 * d], n)
        obs = observe(truth)
        if eps is not None:
            obs = obs + eps
        eta = invariant_state_error(est, truth)
        err = output_error(est, obs)
        inp = eval_profile(sc.profile, min(t, sc.horizon))
        gain = logged_gain(y, inp)
        parts = [
            [t],
            truth.to_vector(),
            est.to_vector(),
            eta.to_vector(),
            np.linalg.norm(err, axis=1),
            gain.ravel(),
        ]
        if riccati_mode:
            parts.append(np.diag(y[2 * d :].reshape(d, d)))
        rows[idx] = np.concatenate(parts)

    y = y0
    if steps > 0:
        truth = SlamState.from_vector(y[:d], n)
        log_row(0, 0.0, y, noise_draw(truth, 0))
    for k in range(steps):
        t = k * sc.dt
        truth = SlamState.from_vector(y[:d], n)
        eps = noise_draw(truth, k)
        y = rk4_step(lambda tt, yy: rhs(tt, yy, eps), t, y, sc.dt)
        if riccati_mode:
            p = y[2 * d :].reshape(d, d)
            p = 0.5 * (p + p.T)
            low = np.linalg.eigvalsh(p)[0]
            if low < PSD_TOLERANCE:
                raise RiccatiDivergenceError(k + 1, float(low))
            y[2 * d :] = p.ravel()
        if not np.all(np.isfinite(y)):
            raise RuntimeError(f"state became non-finite at step {k + 1}")
        t_next = (k + 1) * sc.dt
        truth = SlamState.from_vector(y[:d], n)
        log_row(k + 1, t_next, y, noise_draw(truth, k + 1))
    return RunLog(sc, columns, rows)


def aligned_rms(est_points: np.ndarray, true_points: np.ndarray) -> tuple[SE2, float]:
    """Best rotation-translation mapping the estimated points onto the true
    ones, and the residual RMS after alignment.

    Closed-form planar point-set registration (no scaling). Rejects point
    sets where the rotation is undetermined: fewer than two pairs, or all
    points coincident.
    """
    a = np.asarray(est_points, dtype=float).reshape(-1, 2)
    b = np.asarray(true_points, dtype=float).reshape(-1, 2)
    if a.shape != b.shape:
        raise ValueError("point sets must have matching shapes")
    if a.shape[0] < 2:
        raise ValueError("alignment needs at least two point pairs")
    ac = a - a.mean(axis=0)
    bc = b - b.mean(axis=0)
    s_dot = float(np.sum(ac * bc))
    s_cross = float(np.sum(ac[:, 0] * bc[:, 1] - ac[:, 1] * bc[:, 0]))
    scale = float(np.sum(ac * ac) + np.sum(bc * bc))
    if math.hypot(s_dot, s_cross) <= 1e-12 * max(scale, 1.0):
        raise ValueError("degenerate point set: rotation is undetermined")
    angle = math.atan2(s_cross, s_dot)
    rot = rot2(angle)
    trans = b.mean(axis=0) - rot @ a.mean(axis=0)
    residual = a @ rot.T + trans - b
    rms = float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))
    return SE2(angle, trans), rms


# metric rows of a comparison report, in output order
_METRIC_NAMES = [
    "aligned_rms",
    "align_angle",
    "align_tx",
    "align_ty",
    "gain_variation_sup",
    "gain_variation_min",
    "gain_settle_time",
    "mean_output_error_norm",
    "final_output_error_norm",
]


@dataclass
class CompareReport:
    """Side-by-side metrics for a list of runs, plus pairwise contrasts."""

    names: list[str]
    metrics: dict[str, list[float]]
    settle_threshold: float

    def to_csv_bytes(self) -> bytes:
        header = ["metric"] + self.names
        pairs = []
        if len(self.names) > 1:
            for i in range(len(self.names)):
                for j in range(i + 1, len(self.names)):
                    pairs.append((i, j))
            header += [f"absdiff_{self.names[i]}_vs_{self.names[j]}" for i, j in pairs]
        lines = [",".join(header)]
        for metric in self.metrics:
            vals = self.metrics[metric]
            row = [metric] + [f"{v:.17g}" for v in vals]
            # equal values (including two infinite settle times) contrast to 0
            row += [
                f"{0.0 if vals[i] == vals[j] else abs(vals[i] - vals[j]):.17g}"
                for i, j in pairs
            ]
            lines.append(",".join(row))
        return ("\n".join(lines) + "\n").encode()

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.csv").write_bytes(self.to_csv_bytes())


def run_metrics(log: RunLog, settle_threshold: float = 1e-3) -> dict[str, float]:
    """Scalar metrics of one run: SE(2)-aligned RMS of trajectory plus map,
    gain-variation statistics (per unit time), and output-error norms."""
    g_star, rms = aligned_rms(log.estimate_points(), log.true_points())
    gains = log.gain_series()
    dt = log.scenario.dt
    variation = gain_variation(gains, dt=dt, relative=False)
    settle = gain_settle_index(gains, settle_threshold, dt=dt, relative=False)
    out_norms = log.columns_matching("outerr_norm_")
    return {
        "aligned_rms": rms,
        "align_angle": g_star.angle,
        "align_tx": float(g_star.trans[0]),
        "align_ty": float(g_star.trans[1]),
        "gain_variation_sup": float(variation.max()) if variation.size else 0.0,
        "gain_variation_min": float(variation.min()) if variation.size else 0.0,
        "gain_settle_time": (math.inf if settle is None else float(log.t[settle])),
        "mean_output_error_norm": float(out_norms.mean()),
        "final_output_error_norm": float(np.linalg.norm(out_norms[-1])),
    }


def compare(
    scenarios: list[Scenario],
    metrics: list[str] | None = None,
    settle_threshold: float = 1e-3,
    max_workers: int | None = None,
) -> CompareReport:
    """Run several scenarios (optionally in parallel) and tabulate their
    metrics side by side.

    All scenarios must share horizon and dt so the metrics are comparable.
    `metrics` selects which metric rows to report (default: all of
    `_METRIC_NAMES`). Results are assembled in input order regardless of
    completion order, and every random draw is keyed by (seed, step,
    landmark), so the report does not depend on the worker count.
    """
    if not scenarios:
        raise ValueError("compare needs at least one scenario")
    horizon = scenarios[0].horizon
    dt = scenarios[0].dt
    for sc in scenarios[1:]:
        if sc.horizon != horizon or sc.dt != dt:
            raise ValueError("scenarios must share horizon and dt to be compared")
    selected = _METRIC_NAMES if metrics is None else list(metrics)
    unknown = set(selected) - set(_METRIC_NAMES)
    if unknown:
        raise ValueError(f"unknown metrics: {sorted(unknown)}")

    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            logs = list(pool.map(run_scenario, scenarios))
    else:
        logs = [run_scenario(sc) for sc in scenarios]

    names = []
    for sc in scenarios:
        name = sc.name
        while name in names:
            name += "+"
        names.append(name)
    table = {m: [] for m in selected}
    for log in logs:
        vals = run_metrics(log, settle_threshold)
        for m in selected:
            table[m].append(vals[m])
    return CompareReport(names, table, settle_threshold)
