"""Continuous-time Riccati propagation and Kalman gain extraction.

Two usage modes share the same right-hand side:

* trajectory-linearized: A and C are re-evaluated along the estimated
  trajectory (the standard EKF gain schedule);
* stationary: A = 0 with a fixed C (the invariant-EKF gain schedule), whose
  solution depends only on the tuning, never on the vehicle trajectory.

P is symmetrized after every step; M and N are user-chosen tuning matrices
standing in for state- and measurement-noise covariances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# abort threshold on the smallest eigenvalue of P
PSD_TOLERANCE = -1e-6


class RiccatiDivergenceError(RuntimeError):
    """P lost positive semidefiniteness beyond tolerance."""

    def __init__(self, step: int, min_eigenvalue: float):
        self.step = step
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"covariance lost positive semidefiniteness at step {step} "
            f"(smallest eigenvalue {min_eigenvalue:.3e})"
        )


def _inverse_spd(nmat: np.ndarray) -> np.ndarray:
    nmat = np.asarray(nmat, dtype=float)
    try:
        inv = np.linalg.inv(nmat)
    except np.linalg.LinAlgError as exc:
        raise ValueError("measurement tuning matrix N is singular") from exc
    if not np.all(np.isfinite(inv)):
        raise ValueError("measurement tuning matrix N is singular")
    return inv


@dataclass
class RiccatiState:
    """Covariance P with its tuning matrices.

    M (state-noise tuning) matches P's dimension; N (measurement-noise
    tuning) matches the output dimension. Both must be symmetric positive
    definite.
    """

    P: np.ndarray
    M: np.ndarray
    Nmat: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float)
        self.M = np.asarray(self.M, dtype=float)
        self.Nmat = np.asarray(self.Nmat, dtype=float)
        d = self.P.shape[0]
        if self.P.shape != (d, d) or self.M.shape != (d, d):
            raise ValueError("P and M must be square with matching dimension")
        m = self.Nmat.shape[0]
        if self.Nmat.shape != (m, m):
            raise ValueError("N must be square")
        for name, mat in (("P", self.P), ("M", self.M), ("N", self.Nmat)):
            if not np.allclose(mat, mat.T, atol=1e-9):
                raise ValueError(f"{name} must be symmetric")
        for name, mat in (("M", self.M), ("N", self.Nmat)):
            if np.linalg.eigvalsh(mat)[0] <= 0:
                raise ValueError(f"{name} must be positive definite")


def riccati_rhs(
    P: np.ndarray, A: np.ndarray, C: np.ndarray, M: np.ndarray, Nmat: np.ndarray
) -> np.ndarray:
    """dP/dt = A P + P A^T + M - P C^T N^-1 C P.

    With A = 0 this reduces to the stationary form dP/dt = M - P C^T N^-1 C P.
    """
    ninv = _inverse_spd(Nmat)
    pct = P @ C.T
    return A @ P + P @ A.T + M - pct @ ninv @ pct.T


def gain_from_P(P: np.ndarray, C: np.ndarray, Nmat: np.ndarray) -> np.ndarray:
    """Kalman gain L = P C^T N^-1 (shape: state dim x output dim)."""
    return P @ C.T @ _inverse_spd(Nmat)


@dataclass
class RiccatiSeries:
    """Per-step output of `integrate_riccati`."""

    t: np.ndarray  # (K,)
    P: np.ndarray  # (K, d, d), symmetrized
    L: np.ndarray  # (K, d, m)
    max_asymmetry: float  # worst ||P - P^T||_F seen before symmetrization
    settle_index: int | None  # first index from which the relative per-step
    # gain change stays below `settle_threshold`
    settle_threshold: float


def gain_variation(L: np.ndarray, dt: float | None = None, relative: bool = True) -> np.ndarray:
    """Per-step gain-change statistic, one value per step.

    With relative=True: ||L_{j+1} - L_j||_F / max(1, ||L_j||_F).
    With relative=False: ||L_{j+1} - L_j||_F / dt (a rate per unit time).
    """
    diffs = np.linalg.norm(L[1:] - L[:-1], axis=(1, 2))
    if relative:
        return diffs / np.maximum(1.0, np.linalg.norm(L[:-1], axis=(1, 2)))
    if dt is None:
        raise ValueError("dt is required for the per-unit-time statistic")
    return diffs / dt


def gain_settle_index(
    L: np.ndarray, threshold: float, dt: float | None = None, relative: bool = True
) -> int | None:
    """First index k such that the gain variation stays below `threshold` for
    every remaining step of the series; None if it never settles.
    """
    if L.shape[0] < 2:
        return 0 if L.shape[0] else None
    stats = gain_variation(L, dt=dt, relative=relative)
    bad = np.nonzero(stats >= threshold)[0]
    if bad.size == 0:
        return 0
    k = int(bad[-1]) + 1
    return k if k < stats.size else None


def integrate_riccati(
    state: RiccatiState,
    a_source,
    c_source,
    dt: float,
    horizon: float,
    settle_threshold: float = 1e-3,
) -> RiccatiSeries:
    """Propagate P by fixed-step RK4 and emit the gain at every step.

    `a_source` and `c_source` are either fixed matrices (stationary mode) or
    callables of time evaluated at each RK4 stage (trajectory-linearized
    mode). P is symmetrized after every step and the run aborts with
    `RiccatiDivergenceError` if its smallest eigenvalue drops below tolerance.
    """
    from .integrate import n_steps, rk4_step

    steps = n_steps(horizon, dt)
    a_of = a_source if callable(a_source) else (lambda t, a=np.asarray(a_source, float): a)
    c_of = c_source if callable(c_source) else (lambda t, c=np.asarray(c_source, float): c)
    m_mat = state.M
    ninv = _inverse_spd(state.Nmat)

    def rhs(t, p_flat):
        p = p_flat.reshape(m_mat.shape)
        a = a_of(t)
        c = c_of(t)
        pct = p @ c.T
        return (a @ p + p @ a.T + m_mat - pct @ ninv @ pct.T).ravel()

    d = state.P.shape[0]
    m_out = state.Nmat.shape[0]
    p = 0.5 * (state.P + state.P.T)
    t_grid = np.arange(steps + 1) * dt
    p_series = np.empty((steps + 1, d, d))
    l_series = np.empty((steps + 1, d, m_out))
    max_asym = 0.0

    def check_and_store(k, p_now):
        low = np.linalg.eigvalsh(p_now)[0]
        if low < PSD_TOLERANCE:
            raise RiccatiDivergenceError(k, float(low))
        p_series[k] = p_now
        l_series[k] = p_now @ c_of(t_grid[k]).T @ ninv

    check_and_store(0, p)
    for k in range(steps):
        p_raw = rk4_step(rhs, t_grid[k], p.ravel(), dt).reshape(d, d)
        asym = np.linalg.norm(p_raw - p_raw.T)
        if asym > max_asym:
            max_asym = asym
        p = 0.5 * (p_raw + p_raw.T)
        check_and_store(k + 1, p)

    settle = gain_settle_index(l_series, settle_threshold, relative=True)
    return RiccatiSeries(t_grid, p_series, l_series, max_asym, settle, settle_threshold)


def steady_residual(
    P: np.ndarray,
    C: np.ndarray,
    M: np.ndarray,
    Nmat: np.ndarray,
    basis: np.ndarray | None = None,
) -> float:
    """Frobenius norm of the stationary algebraic Riccati residual
    M - P C^T N^-1 C P.

    With `basis` (orthonormal columns), the residual is projected onto that
    subspace first; pass `observable_subspace(C)` to ignore the directions the
    output cannot see, where P grows without settling.
    """
    ninv = _inverse_spd(Nmat)
    pct = P @ C.T
    res = M - pct @ ninv @ pct.T
    if basis is not None:
        res = basis.T @ res @ basis
    return float(np.linalg.norm(res))


def observable_subspace(C: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (as columns) of the row space of C.

    The stationary Riccati flow settles on this subspace; its orthogonal
    complement collects the directions the measurements cannot determine
    (for planar SLAM in invariant-error coordinates: the heading error and a
    common translation of vehicle and landmarks).
    """
    _, s, vt = np.linalg.svd(np.asarray(C, float))
    rank = int(np.sum(s > rel_tol * s[0]))
    return vt[:rank].T
