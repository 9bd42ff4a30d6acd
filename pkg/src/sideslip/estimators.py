"""Estimator front ends: fixed-lag smoother, whole-run batch, Kalman baseline.

All three consume a list of Samples and produce an EstimateSeries. The two
factor-graph modes share the window machinery; the Kalman filter is an
independent recursive baseline over the same model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernel
from .factors import NoiseConfig, WindowProblem
from .solver import SingularSystemError, gauss_newton
from .vehicle import (
    Sample,
    State,
    VehicleParams,
    predict_lat_accel,
    step_dynamics,
)

__all__ = [
    "SmootherConfig",
    "KfConfig",
    "EstimateSeries",
    "WindowTrace",
    "CovarianceError",
    "run_fixed_lag",
    "run_batch",
    "run_kf",
    "rmse",
]


class CovarianceError(RuntimeError):
    """Raised when the Kalman covariance stops being positive definite."""


@dataclass(frozen=True)
class SmootherConfig:
    """Configuration shared by the fixed-lag and batch smoothers.

    window_len is the number of samples per sliding window (ignored by the
    batch mode); initial_state seeds the prior of the first window.
    """

    params: VehicleParams
    noise: NoiseConfig
    window_len: int = 5
    initial_state: State = State(0.0, 0.0)

    def __post_init__(self):
        if self.window_len < 1:
            raise ValueError(f"window_len must be at least 1, got {self.window_len}")


@dataclass(frozen=True)
class KfConfig:
    """Kalman baseline configuration.

    process_noise, meas_noise and initial_covariance are 2x2 matrices; the
    from_noise constructor builds the conventional diagonal ones from a
    NoiseConfig.
    """

    params: VehicleParams
    process_noise: np.ndarray
    meas_noise: np.ndarray
    initial_covariance: np.ndarray
    initial_state: State = State(0.0, 0.0)

    def __post_init__(self):
        for name in ("process_noise", "meas_noise", "initial_covariance"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            object.__setattr__(self, name, m)
            if m.shape != (2, 2) or not np.all(np.isfinite(m)):
                raise ValueError(f"KfConfig.{name} must be a finite 2x2 matrix")
            if m[0, 0] <= 0.0 or m[1, 1] <= 0.0:
                raise ValueError(f"KfConfig.{name} must have strictly positive variances")

    @classmethod
    def from_noise(cls, params: VehicleParams, noise: NoiseConfig, initial_state: State = State(0.0, 0.0)):
        return cls(
            params=params,
            process_noise=np.diag([noise.sigma_beta**2, noise.sigma_r**2]),
            meas_noise=np.diag([noise.sigma_phidot**2, noise.sigma_ay**2]),
            initial_covariance=np.diag([noise.sigma_prior_beta**2, noise.sigma_prior_r**2]),
            initial_state=initial_state,
        )


@dataclass(frozen=True)
class EstimateSeries:
    """Per-sample state estimates.

    window_ids records which window (fg modes) or step (kf) produced each
    estimate; iteration_counts the solver iterations behind it. Instances
    with identical numbers compare equal, which the determinism tests use.
    """

    times: tuple[float, ...]
    states: tuple[State, ...]
    mode: str
    window_ids: tuple[int, ...]
    iteration_counts: tuple[int, ...]

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.states) == len(self.window_ids) == len(self.iteration_counts) == n):
            raise ValueError("EstimateSeries fields must have equal length")
        if n == 0:
            raise ValueError("EstimateSeries must not be empty")
        if any(b >= a for a, b in zip(self.times[1:], self.times)):
            raise ValueError("EstimateSeries times must be strictly increasing")

    def beta(self) -> np.ndarray:
        return np.array([s.beta for s in self.states])

    def r(self) -> np.ndarray:
        return np.array([s.r for s in self.states])


@dataclass
class WindowTrace:
    """Prior hand-over record of one sliding window, for inspection in tests."""

    window_start: int
    prior_guess: State
    retained: State | None = None
    iterations: int = 0


def _rollout_states(prior: State, samples, params: VehicleParams) -> tuple[State, ...]:
    """Linearization trajectory: the prior guess propagated through the window."""
    states = [prior]
    for i in range(1, len(samples)):
        states.append(
            step_dynamics(
                states[-1],
                samples[i - 1].u,
                samples[i - 1].delta,
                samples[i].t - samples[i - 1].t,
                params,
            )
        )
    return tuple(states)


def _check_samples(samples) -> None:
    if len(samples) == 0:
        raise ValueError("no samples to estimate from")
    for a, b in zip(samples, samples[1:]):
        if not b.t > a.t:
            raise ValueError(f"timestamps must be strictly increasing, got {a.t!r} then {b.t!r}")


def run_batch(samples, config: SmootherConfig, max_iter: int = 10, tol: float = 1e-10) -> EstimateSeries:
    """Smooth the whole trajectory as a single window."""
    _check_samples(samples)
    samples = tuple(samples)
    problem = WindowProblem(
        params=config.params,
        noise=config.noise,
        prior_state=config.initial_state,
        linearization_states=_rollout_states(config.initial_state, samples, config.params),
        samples=samples,
    )
    states, report = gauss_newton(problem, max_iter=max_iter, tol=tol)
    n = len(samples)
    return EstimateSeries(
        times=tuple(s.t for s in samples),
        states=states,
        mode="fg_batch",
        window_ids=(0,) * n,
        iteration_counts=(report.iterations,) * n,
    )


def run_fixed_lag(
    samples,
    config: SmootherConfig,
    max_iter: int = 10,
    tol: float = 1e-10,
    backend: str = "auto",
    trace: list[WindowTrace] | None = None,
) -> EstimateSeries:
    """Slide a window of config.window_len samples, stride one.

    Each window is solved by Gauss-Newton; the oldest state is frozen as
    the window moves on and the final window emits the remainder. The prior
    of window w+1 is window w's estimate of the sample entering as the new
    oldest one. backend is "auto", "python" or "native"; the native kernel
    produces the same numbers and is used when available, except that
    tracing always runs the Python path.
    """
    _check_samples(samples)
    samples = tuple(samples)
    if backend not in ("auto", "python", "native"):
        raise ValueError(f"unknown backend {backend!r}")
    use_native = _kernel.HAVE_NATIVE and backend in ("auto", "native") and trace is None
    if backend == "native" and not _kernel.HAVE_NATIVE:
        raise RuntimeError("native kernel is not available in this installation")
    if use_native:
        return _run_fixed_lag_native(samples, config, max_iter, tol)
    return _run_fixed_lag_python(samples, config, max_iter, tol, trace)


def _run_fixed_lag_python(samples, config, max_iter, tol, trace) -> EstimateSeries:
    n = len(samples)
    m = min(config.window_len, n)
    p = config.params
    est: list[State | None] = [None] * n
    window_ids = [0] * n
    iters = [0] * n
    prior = config.initial_state

    for s in range(n - m + 1):
        window = samples[s : s + m]
        problem = WindowProblem(
            params=p,
            noise=config.noise,
            prior_state=prior,
            linearization_states=_rollout_states(prior, window, p),
            samples=window,
        )
        try:
            states, report = gauss_newton(problem, max_iter=max_iter, tol=tol)
        except SingularSystemError as err:
            raise SingularSystemError(
                f"window {s} (samples {s}..{s + m - 1}): {err}"
            ) from err
        record = WindowTrace(window_start=s, prior_guess=prior, iterations=report.iterations)
        if s < n - m:
            est[s] = states[0]
            window_ids[s] = s
            iters[s] = report.iterations
            if m >= 2:
                prior = states[1]
            else:
                prior = step_dynamics(
                    states[0], window[0].u, window[0].delta, samples[s + 1].t - window[0].t, p
                )
            record.retained = prior
        else:
            for j in range(m):
                est[s + j] = states[j]
                window_ids[s + j] = s
                iters[s + j] = report.iterations
        if trace is not None:
            trace.append(record)

    return EstimateSeries(
        times=tuple(smp.t for smp in samples),
        states=tuple(est),  # type: ignore[arg-type]
        mode="fg_sliding",
        window_ids=tuple(window_ids),
        iteration_counts=tuple(iters),
    )


def _run_fixed_lag_native(samples, config, max_iter, tol) -> EstimateSeries:
    n = len(samples)
    t = np.array([s.t for s in samples])
    u = np.array([s.u for s in samples])
    delta = np.array([s.delta for s in samples])
    zphi = np.array([s.phidot_meas for s in samples])
    zay = np.array([s.ay_meas for s in samples])
    beta, r, wid, iters = _kernel.run_fixed_lag_arrays(
        t, u, delta, zphi, zay, config.window_len, config.params, config.noise,
        config.initial_state, max_iter, tol,
    )
    return EstimateSeries(
        times=tuple(t.tolist()),
        states=tuple(State(b, rr) for b, rr in zip(beta.tolist(), r.tolist())),
        mode="fg_sliding",
        window_ids=tuple(int(x) for x in wid),
        iteration_counts=tuple(int(x) for x in iters),
    )


def _linear_maps(u: float, delta: float, dt: float, p: VehicleParams):
    """Discrete transition (F, g) over one step, probed through step_dynamics.

    The model is exactly linear, so columns of F are unit-state responses
    with zero steering and g is the zero-state response to the steering.
    """
    g = step_dynamics(State(0.0, 0.0), u, delta, dt, p)
    fb = step_dynamics(State(1.0, 0.0), u, 0.0, dt, p)
    fr = step_dynamics(State(0.0, 1.0), u, 0.0, dt, p)
    f = np.array([[fb.beta, fr.beta], [fb.r, fr.r]])
    return f, np.array([g.beta, g.r])


def _meas_maps(u: float, delta: float, p: VehicleParams):
    """Measurement map (H, d): z = H x + d for z = (yaw rate, lat accel)."""
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


def _kf_update(x, cov, z, h, d, meas_noise, step: int):
    innov = z - h @ x - d
    s = h @ cov @ h.T + meas_noise
    gain = cov @ h.T @ np.linalg.inv(s)
    x = x + gain @ innov
    ikh = np.eye(2) - gain @ h
    cov = ikh @ cov @ ikh.T + gain @ meas_noise @ gain.T
    if cov[0, 0] <= 0.0 or cov[1, 1] <= 0.0 or np.linalg.det(cov) <= 0.0:
        raise CovarianceError(f"covariance lost positive definiteness at step {step}")
    return x, cov


def run_kf(samples, config: KfConfig) -> EstimateSeries:
    """Causal Kalman baseline over the same model and measurements.

    The first sample gets a measurement update of the initial state; every
    later sample is predicted over its own dt, then updated.
    """
    _check_samples(samples)
    samples = tuple(samples)
    p = config.params
    x = np.array([config.initial_state.beta, config.initial_state.r])
    cov = config.initial_covariance.copy()

    states = []
    for i, smp in enumerate(samples):
        if i > 0:
            prev = samples[i - 1]
            f, g = _linear_maps(prev.u, prev.delta, smp.t - prev.t, p)
            x = f @ x + g
            cov = f @ cov @ f.T + config.process_noise
        h, d = _meas_maps(smp.u, smp.delta, p)
        z = np.array([smp.phidot_meas, smp.ay_meas])
        x, cov = _kf_update(x, cov, z, h, d, config.meas_noise, i)
        states.append(State(float(x[0]), float(x[1])))

    return EstimateSeries(
        times=tuple(s.t for s in samples),
        states=tuple(states),
        mode="kf",
        window_ids=tuple(range(len(samples))),
        iteration_counts=(1,) * len(samples),
    )


def rmse(est: EstimateSeries, beta_truth, r_truth) -> tuple[float, float]:
    """Root-mean-square error of the estimate against truth series [rad, rad/s]."""
    beta_truth = np.asarray(beta_truth, dtype=np.float64)
    r_truth = np.asarray(r_truth, dtype=np.float64)
    n = len(est.states)
    if beta_truth.shape != (n,) or r_truth.shape != (n,):
        raise ValueError(
            f"truth length {beta_truth.shape}/{r_truth.shape} does not match estimate length {n}"
        )
    eb = est.beta() - beta_truth
    er = est.r() - r_truth
    return float(np.sqrt(np.mean(eb * eb))), float(np.sqrt(np.mean(er * er)))
