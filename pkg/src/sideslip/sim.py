"""Synthetic trajectory generation and independent reference solutions.

The simulator integrates the same forward-Euler dynamics the estimators
assume, so a noise-free run is recovered exactly. The two oracles here, a
dense least-squares solve and a fixed-interval smoother, are written
against the vehicle primitives only and share nothing with the factor or
solver modules; the test suite uses them as ground truth for those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import EstimateSeries, SmootherConfig
from .factors import SparseSystem
from .vehicle import (
    Sample,
    State,
    VehicleParams,
    predict_lat_accel,
    predict_yaw_meas,
    step_dynamics,
)

__all__ = [
    "SpeedProfile",
    "SteeringProfile",
    "SimConfig",
    "simulate",
    "dense_ls_oracle",
    "rts_smoother_oracle",
]


@dataclass(frozen=True)
class SpeedProfile:
    """Piecewise-constant longitudinal speed, as (time, speed) breakpoints.

    The first breakpoint must sit at t=0; speeds must be positive.
    """

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.breakpoints:
            raise ValueError("speed profile needs at least one breakpoint")
        if self.breakpoints[0][0] != 0.0:
            raise ValueError(f"first speed breakpoint must be at t=0, got t={self.breakpoints[0][0]!r}")
        times = [t for t, _ in self.breakpoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("speed breakpoint times must be strictly increasing")
        for t, u in self.breakpoints:
            if not (math.isfinite(u) and u > 0.0):
                raise ValueError(f"speed must be positive and finite, got {u!r} at t={t!r}")

    @classmethod
    def constant(cls, u: float) -> "SpeedProfile":
        return cls(((0.0, u),))

    @classmethod
    def parse(cls, text: str) -> "SpeedProfile":
        """Parse "20" or "0:20,8:25" (time:speed pairs)."""
        if ":" not in text:
            return cls.constant(float(text))
        points = []
        for part in text.split(","):
            t, _, u = part.partition(":")
            points.append((float(t), float(u)))
        return cls(tuple(points))

    def at(self, t: float) -> float:
        value = self.breakpoints[0][1]
        for bp_t, bp_u in self.breakpoints:
            if bp_t <= t:
                value = bp_u
            else:
                break
        return value


@dataclass(frozen=True)
class SteeringProfile:
    """Front steering angle as a function of time [rad].

    kind "constant" uses args (value,), "sine" (amplitude, period) and
    "step" a flattened (time, value, time, value, ...) schedule.
    """

    kind: str
    args: tuple[float, ...]

    def __post_init__(self):
        if self.kind == "constant":
            if len(self.args) != 1:
                raise ValueError("constant steering takes one value")
        elif self.kind == "sine":
            if len(self.args) != 2 or self.args[1] <= 0.0:
                raise ValueError("sine steering takes (amplitude, period) with period > 0")
        elif self.kind == "step":
            if len(self.args) < 2 or len(self.args) % 2:
                raise ValueError("step steering takes (time, value) pairs")
            times = self.args[0::2]
            if times[0] != 0.0 or any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("step times must start at 0 and increase strictly")
        else:
            raise ValueError(f"unknown steering kind {self.kind!r}")

    @classmethod
    def constant(cls, value: float) -> "SteeringProfile":
        return cls("constant", (value,))

    @classmethod
    def sine(cls, amplitude: float, period: float) -> "SteeringProfile":
        return cls("sine", (amplitude, period))

    @classmethod
    def parse(cls, text: str) -> "SteeringProfile":
        """Parse "const:0.01", "sine:0.03:4" or "step:0:0,2:0.02,6:-0.01"."""
        kind, _, rest = text.partition(":")
        if kind == "const":
            return cls.constant(float(rest))
        if kind == "sine":
            amp, _, period = rest.partition(":")
            return cls.sine(float(amp), float(period))
        if kind == "step":
            flat = []
            for part in rest.split(","):
                t, _, v = part.partition(":")
                flat.extend((float(t), float(v)))
            return cls("step", tuple(flat))
        raise ValueError(f"unknown steering spec {text!r}")

    def at(self, t: float) -> float:
        if self.kind == "constant":
            return self.args[0]
        if self.kind == "sine":
            amplitude, period = self.args
            return amplitude * math.sin(2.0 * math.pi * t / period)
        value = self.args[1]
        for i in range(0, len(self.args), 2):
            if self.args[i] <= t:
                value = self.args[i + 1]
            else:
                break
        return value


@dataclass(frozen=True)
class SimConfig:
    """Scenario description for the synthetic generator.

    meas_noise holds the sigmas of the additive sensor noise on (yaw rate
    [rad/s], lateral acceleration [m/s^2]); the trajectory itself is
    noise-free model rollout from rest.
    """

    params: VehicleParams
    duration: float
    dt: float
    speed: SpeedProfile
    steering: SteeringProfile
    meas_noise: tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if self.duration < self.dt:
            raise ValueError(f"duration {self.duration!r} shorter than one step {self.dt!r}")
        if self.meas_noise[0] < 0.0 or self.meas_noise[1] < 0.0:
            raise ValueError("measurement noise sigmas must be non-negative")


def simulate(config: SimConfig) -> tuple[list[Sample], list[State]]:
    """Roll the model from rest and emit noisy samples plus the true states.

    Sample k (1-based) sits at t = k dt; its speed and steering are the
    profile values at that time, while the step towards it used the values
    at the previous sample time. All randomness comes from a generator
    seeded with config.seed, so equal configs give bitwise equal output.
    """
    n = int(round(config.duration / config.dt))
    rng = np.random.default_rng(config.seed)
    noise_phi = rng.normal(0.0, config.meas_noise[0], n)
    noise_ay = rng.normal(0.0, config.meas_noise[1], n)

    samples: list[Sample] = []
    truth: list[State] = []
    state = State(0.0, 0.0)
    t_prev = 0.0
    for k in range(1, n + 1):
        t = k * config.dt
        state = step_dynamics(
            state, config.speed.at(t_prev), config.steering.at(t_prev), t - t_prev, config.params
        )
        u = config.speed.at(t)
        delta = config.steering.at(t)
        samples.append(
            Sample(
                t=t,
                u=u,
                delta=delta,
                phidot_meas=predict_yaw_meas(state) + noise_phi[k - 1],
                ay_meas=predict_lat_accel(state, u, delta, config.params) + noise_ay[k - 1],
                beta_gt=state.beta,
            )
        )
        truth.append(state)
        t_prev = t
    return samples, truth


def _probe_transition(u: float, delta: float, dt: float, p: VehicleParams):
    """Discrete transition (F, g) probed through step_dynamics alone.

    The dynamics are exactly linear with zero offset, so unit-state
    responses at zero steering are the columns of F and the zero-state
    response carries the steering term.
    """
    g = step_dynamics(State(0.0, 0.0), u, delta, dt, p)
    fb = step_dynamics(State(1.0, 0.0), u, 0.0, dt, p)
    fr = step_dynamics(State(0.0, 1.0), u, 0.0, dt, p)
    return np.array([[fb.beta, fr.beta], [fb.r, fr.r]]), np.array([g.beta, g.r])


def _probe_measurement(u: float, delta: float, p: VehicleParams):
    """Measurement map (H, d) with z = H x + d, probed through the predictors."""
    d_ay = predict_lat_accel(State(0.0, 0.0), u, delta, p)
    h = np.array(
        [
            [0.0, 1.0],
            [
                predict_lat_accel(State(1.0, 0.0), u, 0.0, p),
                predict_lat_accel(State(0.0, 1.0), u, 0.0, p),
            ],
        ]
    )
    return h, np.array([0.0, d_ay])


def dense_ls_oracle(system: SparseSystem) -> np.ndarray:
    """Reference solution (A^T A)^{-1} A^T rhs evaluated densely."""
    a = np.zeros((system.nrows, system.ncols))
    for i, j, v in zip(system.rows, system.cols, system.vals):
        a[i, j] = v
    ata = a.T @ a
    try:
        return np.linalg.solve(ata, a.T @ system.rhs)
    except np.linalg.LinAlgError as err:
        raise ValueError(f"singular dense normal matrix: {err}") from err


def rts_smoother_oracle(samples, config: SmootherConfig) -> EstimateSeries:
    """Fixed-interval smoother over the same model, priors and sigmas.

    A forward Kalman pass followed by the backward recursion; for this
    linear-Gaussian setup its output is the maximum-a-posteriori estimate,
    hence a reference for the batch smoother.
    """
    samples = tuple(samples)
    if not samples:
        raise ValueError("no samples to smooth")
    n = len(samples)
    p = config.params
    noise = config.noise
    q = np.diag([noise.sigma_beta**2, noise.sigma_r**2])
    rmat = np.diag([noise.sigma_phidot**2, noise.sigma_ay**2])

    x_filt = np.zeros((n, 2))
    p_filt = np.zeros((n, 2, 2))
    x_pred = np.zeros((n, 2))
    p_pred = np.zeros((n, 2, 2))
    fmats = np.zeros((n, 2, 2))

    x = np.array([config.initial_state.beta, config.initial_state.r])
    cov = np.diag([noise.sigma_prior_beta**2, noise.sigma_prior_r**2])
    for i, smp in enumerate(samples):
        if i > 0:
            prev = samples[i - 1]
            f, g = _probe_transition(prev.u, prev.delta, smp.t - prev.t, p)
            x = f @ x + g
            cov = f @ cov @ f.T + q
            fmats[i] = f
        x_pred[i] = x
        p_pred[i] = cov
        h, d = _probe_measurement(smp.u, smp.delta, p)
        z = np.array([smp.phidot_meas, smp.ay_meas])
        s = h @ cov @ h.T + rmat
        gain = cov @ h.T @ np.linalg.inv(s)
        x = x + gain @ (z - h @ x - d)
        ikh = np.eye(2) - gain @ h
        cov = ikh @ cov @ ikh.T + gain @ rmat @ gain.T
        x_filt[i] = x
        p_filt[i] = cov

    x_smooth = x_filt.copy()
    cov_smooth = p_filt[n - 1]
    for i in range(n - 2, -1, -1):
        c = p_filt[i] @ fmats[i + 1].T @ np.linalg.inv(p_pred[i + 1])
        x_smooth[i] = x_filt[i] + c @ (x_smooth[i + 1] - x_pred[i + 1])
        cov_smooth = p_filt[i] + c @ (cov_smooth - p_pred[i + 1]) @ c.T

    return EstimateSeries(
        times=tuple(s.t for s in samples),
        states=tuple(State(float(b), float(r)) for b, r in x_smooth),
        mode="rts_oracle",
        window_ids=(0,) * n,
        iteration_counts=(1,) * n,
    )
