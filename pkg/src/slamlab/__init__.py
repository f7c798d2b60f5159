"""slamlab: a deterministic planar SLAM estimation laboratory.

Simulates a unicycle vehicle observing point landmarks and compares four
continuous-time observers on it: the standard EKF, its frame-aligned
(invariantized) variant, a constant-gain invariant observer with global
exponential output-error convergence, and an invariant EKF whose
estimation-error flow is autonomous, so its Riccati gain is
trajectory-independent.
"""

__version__ = "0.1.0"

from .geom import SE2, SE2Velocity, e3_cross, rot2, slam_embed
from .invariance import (
    InvariantError,
    apply_left_action,
    apply_right_action,
    autonomy_check,
    equivariance_check,
    estimate_from_error,
    group_error,
    invariant_state_error,
    right_error_flow_check,
    simulate_observer,
)
from .model import (
    ConstantProfile,
    Inputs,
    NoiseConfig,
    PiecewiseProfile,
    SlamState,
    dynamics,
    eval_profile,
    noisy_observe,
    observe,
)
from .observers import (
    constant_gain_step,
    ekf_jacobians,
    ekf_step,
    error_output_matrix,
    iekf_step,
    invariantized_step,
    output_error,
)
from .riccati import (
    RiccatiDivergenceError,
    RiccatiSeries,
    RiccatiState,
    gain_from_P,
    integrate_riccati,
    observable_subspace,
    riccati_rhs,
    steady_residual,
)
from .run import CompareReport, RunLog, aligned_rms, compare, run_metrics, run_scenario
from .scenario import (
    ConstantGain,
    PerLandmarkGain,
    RiccatiTuning,
    Scenario,
    load_scenario,
    save_scenario,
)

__all__ = [
    "__version__",
    "SE2",
    "SE2Velocity",
    "e3_cross",
    "rot2",
    "slam_embed",
    "SlamState",
    "Inputs",
    "NoiseConfig",
    "ConstantProfile",
    "PiecewiseProfile",
    "dynamics",
    "observe",
    "noisy_observe",
    "eval_profile",
    "output_error",
    "ekf_jacobians",
    "ekf_step",
    "invariantized_step",
    "constant_gain_step",
    "iekf_step",
    "error_output_matrix",
    "RiccatiState",
    "RiccatiSeries",
    "RiccatiDivergenceError",
    "riccati_rhs",
    "gain_from_P",
    "integrate_riccati",
    "steady_residual",
    "observable_subspace",
    "InvariantError",
    "invariant_state_error",
    "estimate_from_error",
    "apply_left_action",
    "apply_right_action",
    "group_error",
    "right_error_flow_check",
    "autonomy_check",
    "equivariance_check",
    "simulate_observer",
    "Scenario",
    "ConstantGain",
    "PerLandmarkGain",
    "RiccatiTuning",
    "load_scenario",
    "save_scenario",
    "RunLog",
    "CompareReport",
    "run_scenario",
    "run_metrics",
    "compare",
    "aligned_rms",
]
