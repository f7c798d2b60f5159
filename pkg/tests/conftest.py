"""Shared oracles for the test suite: finite-difference Jacobians and random
sampling helpers. These stay independent of the package internals they check.
"""

import numpy as np

from slamlab.geom import SE2
from slamlab.invariance import InvariantError, estimate_from_error, invariant_state_error
from slamlab.model import Inputs, SlamState, dynamics, observe
from slamlab.observers import OBSERVER_STEPS


def nudge(state: SlamState, deriv: SlamState, h: float) -> SlamState:
    return SlamState(
        x=state.x + h * deriv.x,
        theta=state.theta + h * deriv.theta,
        landmarks=state.landmarks + h * deriv.landmarks,
    )


def random_state(rng: np.random.Generator, n: int, span: float = 5.0) -> SlamState:
    return SlamState(
        x=rng.uniform(-span, span, 2),
        theta=rng.uniform(-np.pi, np.pi),
        landmarks=rng.uniform(-span, span, (n, 2)),
    )


def random_se2(rng: np.random.Generator, span: float = 5.0) -> SE2:
    return SE2(rng.uniform(-np.pi, np.pi), rng.uniform(-span, span, 2))


def fd_dynamics_jacobian(state: SlamState, inp: Inputs, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of the plant dynamics in the flat state."""
    n = state.n_landmarks
    d = 3 + 2 * n
    base = state.to_vector()
    out = np.zeros((d, d))
    for j in range(d):
        vp = base.copy()
        vp[j] += h
        vm = base.copy()
        vm[j] -= h
        fp = dynamics(SlamState.from_vector(vp, n), inp).to_vector()
        fm = dynamics(SlamState.from_vector(vm, n), inp).to_vector()
        out[:, j] = (fp - fm) / (2.0 * h)
    return out


def fd_observation_jacobian(state: SlamState, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of the observation map in the flat state."""
    n = state.n_landmarks
    d = 3 + 2 * n
    base = state.to_vector()
    out = np.zeros((2 * n, d))
    for j in range(d):
        vp = base.copy()
        vp[j] += h
        vm = base.copy()
        vm[j] -= h
        zp = observe(SlamState.from_vector(vp, n)).ravel()
        zm = observe(SlamState.from_vector(vm, n)).ravel()
        out[:, j] = (zp - zm) / (2.0 * h)
    return out


def fd_error_flow_jacobian(
    observer: str,
    gain,
    truth: SlamState,
    inp: Inputs,
    h: float = 1e-3,
    delta: float = 1e-4,
) -> np.ndarray:
    """Finite-difference linearization, at zero error, of the map from the
    invariant error to its time derivative under a given observer.

    The inner derivative follows both the observer flow and the true flow
    with a 4th-order stencil of width `delta`; the outer derivative perturbs
    the error along each coordinate axis by `h`.
    """
    n = truth.n_landmarks
    d = 3 + 2 * n
    step_fn = OBSERVER_STEPS[observer]
    obs = observe(truth)
    d_truth = dynamics(truth, inp)

    def eta_dot(eta_vec):
        est = estimate_from_error(truth, InvariantError.from_vector(eta_vec, n))
        d_est = step_fn(est, inp, obs, gain)

        def eta_at(s):
            return invariant_state_error(
                nudge(est, d_est, s), nudge(truth, d_truth, s)
            ).to_vector()

        return (
            8.0 * (eta_at(delta) - eta_at(-delta)) - (eta_at(2 * delta) - eta_at(-2 * delta))
        ) / (12.0 * delta)

    jac = np.zeros((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        jac[:, j] = (eta_dot(e) - eta_dot(-e)) / (2.0 * h)
    return jac
