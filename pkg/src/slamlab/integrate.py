"""Fixed-step classical Runge-Kutta integration.

A fixed step and a fixed operation order keep runs bit-reproducible, which
the logging and comparison machinery relies on.
"""

from __future__ import annotations

import numpy as np


def rk4_step(f, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical 4th-order Runge-Kutta step of dy/dt = f(t, y)."""
    half = 0.5 * dt
    k1 = f(t, y)
    k2 = f(t + half, y + half * k1)
    k3 = f(t + half, y + half * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def n_steps(horizon: float, dt: float) -> int:
    """Number of RK4 steps covering [0, horizon]; horizon must be a whole
    number of steps (within rounding)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    steps = int(round(horizon / dt))
    if abs(steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ValueError(f"horizon {horizon} is not a whole number of steps of dt={dt}")
    return steps
