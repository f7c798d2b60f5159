"""Why correcting reference-frame quantities with vehicle-frame residuals
goes wrong.

Hold the vehicle still with its heading a quarter turn from the reference
frame and give both observers the same landmark gain -k*I. The raw
correction applies the vehicle-frame residual directly to the landmark
estimate: at this heading the correction is exactly orthogonal to the error
and the estimate circles the true landmark without ever approaching it. The
frame-aligned correction rotates the residual back into the reference frame
first and contracts the squared error at rate 2k, independent of heading.

Run from the repository root:

    python demos/05_fixed_heading_pitfall.py
"""

import math
from pathlib import Path

import numpy as np

from slamlab import SlamState, observe
from slamlab.integrate import rk4_step
from slamlab.model import Inputs
from slamlab.observers import ekf_step, invariantized_step

OUT = Path(__file__).resolve().parent / "out"

K = 0.8
TRUTH = SlamState([0.0, 0.0], math.pi / 2, [[2.0, 1.0]])
EST0 = SlamState([0.0, 0.0], math.pi / 2, [[3.4, -0.2]])


def simulate(step_fn, horizon=6.0, dt=0.01):
    L = np.zeros((5, 2))
    L[3:5, 0:2] = -K * np.eye(2)
    inp = Inputs(0.0, 0.0)  # vehicle parked, heading fixed
    obs = observe(TRUTH)

    def rhs(t, y):
        est = SlamState.from_vector(y, 1)
        return step_fn(est, inp, obs, L).to_vector()

    y = EST0.to_vector()
    steps = int(round(horizon / dt))
    traj = np.empty((steps + 1, y.size))
    traj[0] = y
    for k in range(steps):
        y = rk4_step(rhs, k * dt, y, dt)
        traj[k + 1] = y
    return traj


def main():
    raw = simulate(ekf_step)
    aligned = simulate(invariantized_step)
    p_true = TRUTH.landmarks[0]
    err_raw = np.linalg.norm(raw[:, 3:] - p_true, axis=1)
    err_aligned = np.linalg.norm(aligned[:, 3:] - p_true, axis=1)
    print(f"landmark error after 6s, raw correction:     {err_raw[-1]:.4f} m (started {err_raw[0]:.4f})")
    print(f"landmark error after 6s, aligned correction: {err_aligned[-1]:.6f} m")
    print(f"expected from exp(-k t) decay of the error:  {err_aligned[0] * math.exp(-K * 6.0):.6f} m")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping the plot")
        return

    OUT.mkdir(exist_ok=True)
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(raw[:, 3], raw[:, 4], "r-", label="raw correction")
    axes[0].plot(aligned[:, 3], aligned[:, 4], "b-", label="frame-aligned")
    axes[0].plot(*p_true, "g+", ms=14, mew=2, label="true landmark")
    axes[0].plot(*EST0.landmarks[0], "ko", ms=5, label="initial estimate")
    axes[0].set_title("landmark estimate path")
    axes[0].set_aspect("equal")
    axes[0].legend(fontsize=8)
    t = np.arange(raw.shape[0]) * 0.01
    axes[1].semilogy(t, err_raw, "r-", label="raw correction")
    axes[1].semilogy(t, err_aligned, "b-", label="frame-aligned")
    axes[1].set_title("landmark error magnitude")
    axes[1].set_xlabel("t [s]")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(OUT / "fixed_heading_pitfall.png", dpi=120)
    print(f"wrote {OUT / 'fixed_heading_pitfall.png'}")


if __name__ == "__main__":
    main()
