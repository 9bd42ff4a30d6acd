"""Sideslip angle estimation from steering, speed, yaw rate and lateral acceleration.

The package formulates the linear single-track model over a window of
samples as a whitened sparse least-squares problem and solves it either
over a sliding window (fixed lag) or over the whole log (batch), with a
Kalman filter as the causal baseline.
"""

from ._kernel import backend_name
from .estimators import (
    CovarianceError,
    EstimateSeries,
    KfConfig,
    SmootherConfig,
    rmse,
    run_batch,
    run_fixed_lag,
    run_kf,
)
from .factors import (
    DEFAULT_NOISE,
    FactorKind,
    NoiseConfig,
    SparseSystem,
    WindowProblem,
    assemble,
    whiten,
)
from .sim import SimConfig, SpeedProfile, SteeringProfile, simulate
from .solver import SingularSystemError, SolveReport, gauss_newton, solve_wls
from .vehicle import (
    DEFAULT_PARAMS,
    Sample,
    State,
    VehicleParams,
    lateral_velocity,
    predict_lat_accel,
    predict_yaw_meas,
    step_dynamics,
)

__version__ = "0.1.0"

__all__ = [
    "CovarianceError",
    "DEFAULT_NOISE",
    "DEFAULT_PARAMS",
    "EstimateSeries",
    "FactorKind",
    "KfConfig",
    "NoiseConfig",
    "Sample",
    "SimConfig",
    "SingularSystemError",
    "SmootherConfig",
    "SolveReport",
    "SparseSystem",
    "SpeedProfile",
    "State",
    "SteeringProfile",
    "VehicleParams",
    "WindowProblem",
    "assemble",
    "backend_name",
    "gauss_newton",
    "lateral_velocity",
    "predict_lat_accel",
    "predict_yaw_meas",
    "rmse",
    "run_batch",
    "run_fixed_lag",
    "run_kf",
    "simulate",
    "solve_wls",
    "step_dynamics",
    "whiten",
    "__version__",
]
