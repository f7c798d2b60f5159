"""Two ways to drive the gain from a Riccati equation.

The trajectory-linearized flow (standard EKF) re-evaluates its matrices
along the estimated path, so the covariance never stops moving on a curving
trajectory. The stationary flow (invariant EKF) uses a fixed output matrix
and no dynamics matrix at all; it converges like a time-invariant filter and
the resulting gain could be tabulated offline. The scalar case with unit
tuning has the closed-form solution p(t) = tanh(t), which the integrator is
checked against.

Heads-up on the blind spots: the stationary output matrix cannot see the
heading error or a common shift of vehicle and landmarks, so the covariance
grows linearly in those directions forever. That is the estimation problem's
gauge freedom, not a defect, and the gain stays finite because those
directions never enter it.

Run from the repository root:

    python demos/04_riccati_flows.py
"""

import math
from pathlib import Path

import numpy as np

from slamlab import (
    RiccatiState,
    error_output_matrix,
    integrate_riccati,
    observable_subspace,
    steady_residual,
)

OUT = Path(__file__).resolve().parent / "out"


def main():
    # scalar sanity check against the closed form
    scalar = RiccatiState(P=[[0.0]], M=[[1.0]], Nmat=[[1.0]])
    series = integrate_riccati(scalar, np.zeros((1, 1)), np.ones((1, 1)), 1e-3, 2.0)
    gap = abs(series.P[-1, 0, 0] - math.tanh(2.0))
    print(f"scalar flow vs tanh(2): gap {gap:.2e}")

    # stationary flow for one landmark: 5 states, 2 outputs
    c = error_output_matrix(1)
    state = RiccatiState(P=np.eye(5), M=np.eye(5), Nmat=0.16 * np.eye(2))
    series = integrate_riccati(state, np.zeros((5, 5)), c, 0.01, 30.0)
    settle_t = series.t[series.settle_index]
    basis = observable_subspace(c)
    res = steady_residual(series.P[-1], c, state.M, state.Nmat, basis)
    print(f"stationary gain settles at t = {settle_t:.2f}s")
    print(f"algebraic-Riccati residual on the observable subspace: {res:.2e}")
    print(f"covariance keeps growing in {5 - basis.shape[1]} blind directions")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping the plot")
        return

    OUT.mkdir(exist_ok=True)
    fig, axes = plt.subplots(1, 2, figsize=(11, 4))
    axes[0].plot(series.t, series.P.reshape(series.t.size, -1), lw=0.7)
    axes[0].set_title("stationary covariance entries")
    axes[0].set_xlabel("t [s]")
    axes[1].plot(series.t, series.L.reshape(series.t.size, -1), lw=0.9)
    axes[1].set_title("stationary gain entries (freeze after the transient)")
    axes[1].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(OUT / "riccati_flows.png", dpi=120)
    print(f"wrote {OUT / 'riccati_flows.png'}")


if __name__ == "__main__":
    main()
