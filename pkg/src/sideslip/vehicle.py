"""Linear single-track lateral dynamics.

The vehicle state is the sideslip angle beta [rad] and the yaw rate r
[rad/s]. Both rate equations are linear in (beta, r, steering angle) for a
given longitudinal speed, and the discrete step is a forward Euler update
over the per-sample time step. Speed and steering are treated as known
inputs, held constant within a step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "VehicleParams",
    "State",
    "Sample",
    "DEFAULT_PARAMS",
    "step_dynamics",
    "predict_lat_accel",
    "predict_yaw_meas",
    "lateral_velocity",
]


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the single-track model.

    m:  vehicle mass [kg]
    Jz: yaw moment of inertia [kg m^2]
    Cf: front axle cornering stiffness [N/rad]
    Cr: rear axle cornering stiffness [N/rad]
    lf: distance from the center of gravity to the front axle [m]
    lr: distance from the center of gravity to the rear axle [m]

    All six must be strictly positive and finite, which also keeps the
    wheelbase lf + lr positive.
    """

    m: float
    Jz: float
    Cf: float
    Cr: float
    lf: float
    lr: float

    def __post_init__(self):
        for name in ("m", "Jz", "Cf", "Cr", "lf", "lr"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(
                    f"VehicleParams.{name} must be a positive finite number, got {value!r}"
                )


@dataclass(frozen=True)
class State:
    """Vehicle lateral state: sideslip angle beta [rad], yaw rate r [rad/s]."""

    beta: float
    r: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and math.isfinite(self.r)):
            raise ValueError(f"State fields must be finite, got ({self.beta!r}, {self.r!r})")


@dataclass(frozen=True)
class Sample:
    """One time-stamped log row.

    t:           timestamp [s]
    u:           longitudinal speed [m/s], must be positive
    delta:       front steering angle [rad]
    phidot_meas: measured yaw rate [rad/s]
    ay_meas:     measured lateral acceleration [m/s^2]
    beta_gt:     ground-truth sideslip [rad] when available, else None
    """

    t: float
    u: float
    delta: float
    phidot_meas: float
    ay_meas: float
    beta_gt: float | None = None

    def __post_init__(self):
        for name in ("t", "u", "delta", "phidot_meas", "ay_meas"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Sample.{name} must be finite, got {getattr(self, name)!r}")
        if self.u <= 0.0:
            raise ValueError(f"Sample.u must be positive, got {self.u!r}")
        if self.beta_gt is not None and not math.isfinite(self.beta_gt):
            raise ValueError(f"Sample.beta_gt must be finite or None, got {self.beta_gt!r}")


# Reference parameter set for a mid-size passenger car, used as the default
# by the simulator and the command line tools.
DEFAULT_PARAMS = VehicleParams(m=1500.0, Jz=2500.0, Cf=80000.0, Cr=80000.0, lf=1.1, lr=1.6)


def _rates(beta, r, u, delta, p):
    """Continuous-time derivatives (dbeta/dt, dr/dt) at speed u."""
    beta_rate = (
        -(p.Cf + p.Cr) / (p.m * u) * beta
        - ((p.Cf * p.lf - p.Cr * p.lr) / (p.m * u * u) + 1.0) * r
        + p.Cf * delta / (p.m * u)
    )
    r_rate = (
        -(p.Cf * p.lf - p.Cr * p.lr) / p.Jz * beta
        - (p.Cf * p.lf * p.lf + p.Cr * p.lr * p.lr) / (p.Jz * u) * r
        + p.Cf * p.lf * delta / p.Jz
    )
    return beta_rate, r_rate


def step_dynamics(prev: State, u_prev: float, delta_prev: float, dt: float, p: VehicleParams) -> State:
    """Advance the state one step by forward Euler.

    u_prev [m/s] and delta_prev [rad] are held constant over the step of
    length dt [s]. The update is affine in (prev, delta_prev) with zero
    offset, so superposition holds exactly.
    """
    if not u_prev > 0.0:
        raise ValueError(f"speed must be positive, got {u_prev!r}")
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    beta_rate, r_rate = _rates(prev.beta, prev.r, u_prev, delta_prev, p)
    return State(prev.beta + dt * beta_rate, prev.r + dt * r_rate)


def predict_lat_accel(s: State, u: float, delta: float, p: VehicleParams) -> float:
    """Lateral acceleration [m/s^2] produced by state s at speed u, steering delta."""
    if not u > 0.0:
        raise ValueError(f"speed must be positive, got {u!r}")
    return (
        -(p.Cf + p.Cr) / p.m * s.beta
        - (p.Cf * p.lf - p.Cr * p.lr) / (p.m * u) * s.r
        + p.Cf * delta / p.m
    )


def predict_yaw_meas(s: State) -> float:
    """Yaw rate [rad/s] as seen by the gyro: the model observes r directly."""
    return s.r


def lateral_velocity(s: State, u: float) -> float:
    """Lateral velocity [m/s] under the small-angle relation v = beta * u."""
    if not u > 0.0:
        raise ValueError(f"speed must be positive, got {u!r}")
    return s.beta * u
