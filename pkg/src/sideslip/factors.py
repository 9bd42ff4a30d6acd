"""Factor construction for the sliding-window sideslip estimator.

A window over samples 1..n induces a sparse linear least-squares problem in
the stacked state corrections

    Delta = [d_beta_1, d_r_1, d_beta_2, d_r_2, ..., d_beta_n, d_r_n]

with four rows per step: two dynamic-consistency rows tying step k to step
k-1 (step 1 gets two prior rows instead) and two measurement rows (yaw
rate, lateral acceleration). Every row is whitened by the reciprocal of the
noise sigma of its factor kind.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .vehicle import Sample, State, VehicleParams, predict_lat_accel, predict_yaw_meas, step_dynamics

__all__ = [
    "FactorKind",
    "NoiseConfig",
    "DEFAULT_NOISE",
    "SparseSystem",
    "WindowProblem",
    "residual_dyn_beta",
    "residual_dyn_r",
    "residual_meas_yaw",
    "residual_meas_ay",
    "residual_prior",
    "dyn_jacobian_block",
    "prior_jacobian_block",
    "whiten",
    "assemble",
]


class FactorKind(enum.Enum):
    """The six factor kinds appearing in a window."""

    PRIOR_BETA = "prior_beta"
    PRIOR_R = "prior_r"
    DYN_BETA = "dyn_beta"
    DYN_R = "dyn_r"
    MEAS_YAW_RATE = "meas_yaw_rate"
    MEAS_LAT_ACCEL = "meas_lat_accel"

    @property
    def arity(self) -> int:
        """Number of state variables the factor touches (= structural nonzeros of its row)."""
        return _ARITY[self]


_ARITY = {
    FactorKind.PRIOR_BETA: 1,
    FactorKind.PRIOR_R: 1,
    FactorKind.DYN_BETA: 3,
    FactorKind.DYN_R: 3,
    FactorKind.MEAS_YAW_RATE: 1,
    FactorKind.MEAS_LAT_ACCEL: 2,
}


@dataclass(frozen=True)
class NoiseConfig:
    """Per-kind noise sigmas used for whitening.

    sigma_beta / sigma_r:        dynamic consistency of beta [rad] and r [rad/s]
    sigma_phidot:                yaw rate measurement [rad/s]
    sigma_ay:                    lateral acceleration measurement [m/s^2]
    sigma_prior_beta / _prior_r: prior on the first window state [rad], [rad/s]
    """

    sigma_beta: float = 1e-5
    sigma_r: float = 1e-4
    sigma_phidot: float = 1e-8
    sigma_ay: float = 1e-2
    sigma_prior_beta: float = 1e-3
    sigma_prior_r: float = 1e-3

    def __post_init__(self):
        for name in (
            "sigma_beta",
            "sigma_r",
            "sigma_phidot",
            "sigma_ay",
            "sigma_prior_beta",
            "sigma_prior_r",
        ):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"NoiseConfig.{name} must be a positive finite number, got {value!r}")

    def sigma_for(self, kind: FactorKind) -> float:
        return {
            FactorKind.PRIOR_BETA: self.sigma_prior_beta,
            FactorKind.PRIOR_R: self.sigma_prior_r,
            FactorKind.DYN_BETA: self.sigma_beta,
            FactorKind.DYN_R: self.sigma_r,
            FactorKind.MEAS_YAW_RATE: self.sigma_phidot,
            FactorKind.MEAS_LAT_ACCEL: self.sigma_ay,
        }[kind]


DEFAULT_NOISE = NoiseConfig()


@dataclass(frozen=True)
class SparseSystem:
    """Whitened sparse system A Delta ~= rhs in triplet form.

    rows/cols/vals hold one triplet per structural nonzero of A; row_tags
    names the factor kind of every row. Triplets are emitted row-major with
    columns ascending within a row, and no (row, col) pair repeats.
    """

    nrows: int
    ncols: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    rhs: np.ndarray
    row_tags: tuple[FactorKind, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", np.asarray(self.rows, dtype=np.int64))
        object.__setattr__(self, "cols", np.asarray(self.cols, dtype=np.int64))
        object.__setattr__(self, "vals", np.asarray(self.vals, dtype=np.float64))
        object.__setattr__(self, "rhs", np.asarray(self.rhs, dtype=np.float64))
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise ValueError("triplet arrays must have equal length")
        if self.nrows <= 0 or self.ncols <= 0:
            raise ValueError(f"system must be non-empty, got shape ({self.nrows}, {self.ncols})")
        if self.rhs.shape != (self.nrows,):
            raise ValueError(f"rhs length {self.rhs.shape} does not match nrows {self.nrows}")
        if len(self.row_tags) != self.nrows:
            raise ValueError(f"row_tags length {len(self.row_tags)} does not match nrows {self.nrows}")
        if len(self.rows) == 0:
            raise ValueError("system has no structural nonzeros")
        if self.rows.min() < 0 or self.rows.max() >= self.nrows:
            raise ValueError("row index out of range")
        if self.cols.min() < 0 or self.cols.max() >= self.ncols:
            raise ValueError("column index out of range")
        keys = self.rows * self.ncols + self.cols
        if len(np.unique(keys)) != len(keys):
            raise ValueError("duplicate (row, col) triplet")
        if not np.all(np.isfinite(self.vals)) or not np.all(np.isfinite(self.rhs)):
            raise ValueError("system contains non-finite values")

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def to_dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Densified (A, rhs), mainly for debugging and small-system dumps."""
        a = np.zeros((self.nrows, self.ncols))
        a[self.rows, self.cols] = self.vals
        return a, self.rhs.copy()


@dataclass(frozen=True)
class WindowProblem:
    """One estimation window: samples, linearization point and prior.

    prior_state anchors the first state of the window; linearization_states
    must contain exactly one State per sample.
    """

    params: VehicleParams
    noise: NoiseConfig
    prior_state: State
    linearization_states: tuple[State, ...]
    samples: tuple[Sample, ...]

    def __post_init__(self):
        if len(self.linearization_states) != len(self.samples):
            raise ValueError(
                f"{len(self.linearization_states)} linearization states for "
                f"{len(self.samples)} samples"
            )


def residual_dyn_beta(prev: State, cur: State, sample_prev: Sample, dt: float, p: VehicleParams) -> float:
    """cur.beta minus its one-step prediction from prev (speed/steering of sample_prev)."""
    return cur.beta - step_dynamics(prev, sample_prev.u, sample_prev.delta, dt, p).beta


def residual_dyn_r(prev: State, cur: State, sample_prev: Sample, dt: float, p: VehicleParams) -> float:
    """cur.r minus its one-step prediction from prev (speed/steering of sample_prev)."""
    return cur.r - step_dynamics(prev, sample_prev.u, sample_prev.delta, dt, p).r


def residual_meas_yaw(cur: State, sample: Sample) -> float:
    """Measured yaw rate minus the predicted one."""
    return sample.phidot_meas - predict_yaw_meas(cur)


def residual_meas_ay(cur: State, sample: Sample, p: VehicleParams) -> float:
    """Measured lateral acceleration minus the predicted one."""
    return sample.ay_meas - predict_lat_accel(cur, sample.u, sample.delta, p)


def residual_prior(first: State, guess: State) -> tuple[float, float]:
    """Deviation of the first window state from the prior guess."""
    return first.beta - guess.beta, first.r - guess.r


def _dyn_coeffs(u_prev: float, dt: float, p: VehicleParams):
    """Partial derivatives of the two dynamic residuals w.r.t. the previous state.

    Returns ((de_beta/d_beta_prev, de_beta/d_r_prev),
             (de_r/d_beta_prev,    de_r/d_r_prev)); both residuals have
    derivative +1 w.r.t. their own current-state variable.
    """
    a = (p.Cf + p.Cr) / (p.m * u_prev)
    b = (p.Cf * p.lf - p.Cr * p.lr) / (p.m * u_prev * u_prev) + 1.0
    c = (p.Cf * p.lf - p.Cr * p.lr) / p.Jz
    d = (p.Cf * p.lf * p.lf + p.Cr * p.lr * p.lr) / (p.Jz * u_prev)
    return (-(1.0 - dt * a), dt * b), (dt * c, -(1.0 - dt * d))


def _ay_coeffs(u: float, p: VehicleParams) -> tuple[float, float]:
    """Partial derivatives of the lateral-acceleration residual w.r.t. (beta_k, r_k)."""
    return (p.Cf + p.Cr) / p.m, (p.Cf * p.lf - p.Cr * p.lr) / (p.m * u)


def dyn_jacobian_block(u_prev: float, u_cur: float, dt: float, p: VehicleParams) -> np.ndarray:
    """Unwhitened 4x4 residual Jacobian of one interior step.

    Rows are (dyn_beta, dyn_r, meas_yaw_rate, meas_lat_accel); columns are
    (beta_{k-1}, r_{k-1}, beta_k, r_k). The dynamic rows use the speed held
    over the step (u_prev), the measurement rows the speed at the step
    itself (u_cur).
    """
    if not u_prev > 0.0 or not u_cur > 0.0:
        raise ValueError(f"speeds must be positive, got {u_prev!r}, {u_cur!r}")
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    (db_b, db_r), (dr_b, dr_r) = _dyn_coeffs(u_prev, dt, p)
    ay_b, ay_r = _ay_coeffs(u_cur, p)
    return np.array(
        [
            [db_b, db_r, 1.0, 0.0],
            [dr_b, dr_r, 0.0, 1.0],
            [0.0, 0.0, 0.0, -1.0],
            [0.0, 0.0, ay_b, ay_r],
        ]
    )


def prior_jacobian_block(u: float, p: VehicleParams) -> np.ndarray:
    """Unwhitened 4x2 residual Jacobian of the first window step.

    Rows are (prior_beta, prior_r, meas_yaw_rate, meas_lat_accel); columns
    are (beta_1, r_1). u is the speed at the step the priors anchor.
    """
    if not u > 0.0:
        raise ValueError(f"speed must be positive, got {u!r}")
    ay_b, ay_r = _ay_coeffs(u, p)
    return np.array(
        [
            [1.0, 0.0],
            [0.0, 1.0],
            [0.0, -1.0],
            [ay_b, ay_r],
        ]
    )


def whiten(block: np.ndarray, residuals: np.ndarray, noise: NoiseConfig, kinds) -> tuple[np.ndarray, np.ndarray]:
    """Scale each row of block and each residual by 1/sigma of the row's kind."""
    block = np.asarray(block, dtype=np.float64)
    residuals = np.asarray(residuals, dtype=np.float64)
    kinds = tuple(kinds)
    if block.shape[0] != len(kinds) or residuals.shape[0] != len(kinds):
        raise ValueError(
            f"{block.shape[0]} block rows, {residuals.shape[0]} residuals, {len(kinds)} kinds"
        )
    w = np.array([1.0 / noise.sigma_for(k) for k in kinds])
    return block * w[:, None], residuals * w


# Row orientation of the assembled system, per factor kind:
#
#   kind            A row (whitened)                      rhs entry (whitened, at linearization)
#   prior_beta      +d(beta_1)/d(state)                   guess.beta - lin_1.beta
#   prior_r         +d(r_1)/d(state)                      guess.r    - lin_1.r
#   dyn_beta        +d(residual_dyn_beta)/d(state)        -residual_dyn_beta(lin)
#   dyn_r           +d(residual_dyn_r)/d(state)           -residual_dyn_r(lin)
#   meas_yaw_rate   +d(predicted yaw rate)/d(state)       +residual_meas_yaw(lin)
#   meas_lat_accel  +d(predicted lat accel)/d(state)      +residual_meas_ay(lin)
#
# Every rhs entry is an innovation (observed minus predicted), so solving
# A Delta ~= rhs moves the states toward the observations. The standalone
# *_jacobian_block helpers instead differentiate the residual functions for
# all four rows, which flips the sign of the two measurement rows; negating
# a row of A together with its rhs entry leaves the minimizer unchanged.


def assemble(problem: WindowProblem) -> SparseSystem:
    """Build the whitened sparse system for one window.

    The window over n samples yields 4n rows and 2n interleaved columns.
    Step k's rows only touch columns of steps k-1 and k, so the system is
    block-banded. Raises ValueError for an empty window or non-increasing
    timestamps.
    """
    samples = problem.samples
    lin = problem.linearization_states
    n = len(samples)
    if n == 0:
        raise ValueError("cannot assemble an empty window")
    p = problem.params
    noise = problem.noise

    s_dyn_b = noise.sigma_beta
    s_dyn_r = noise.sigma_r
    s_yaw = noise.sigma_phidot
    s_ay = noise.sigma_ay

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    rhs: list[float] = []
    tags: list[FactorKind] = []

    def put(row, entries, b, kind):
        for c, v in entries:
            rows.append(row)
            cols.append(c)
            vals.append(v)
        rhs.append(b)
        tags.append(kind)

    # Step 1: two prior rows anchored at the window's first sample.
    s0, x0 = samples[0], lin[0]
    pr_b, pr_r = residual_prior(x0, problem.prior_state)
    put(0, [(0, 1.0 / noise.sigma_prior_beta)], -pr_b / noise.sigma_prior_beta, FactorKind.PRIOR_BETA)
    put(1, [(1, 1.0 / noise.sigma_prior_r)], -pr_r / noise.sigma_prior_r, FactorKind.PRIOR_R)
    put(2, [(1, 1.0 / s_yaw)], residual_meas_yaw(x0, s0) / s_yaw, FactorKind.MEAS_YAW_RATE)
    ay_b, ay_r = _ay_coeffs(s0.u, p)
    put(
        3,
        [(0, -ay_b / s_ay), (1, -ay_r / s_ay)],
        residual_meas_ay(x0, s0, p) / s_ay,
        FactorKind.MEAS_LAT_ACCEL,
    )

    for i in range(1, n):
        s_prev, s_cur = samples[i - 1], samples[i]
        x_prev, x_cur = lin[i - 1], lin[i]
        dt = s_cur.t - s_prev.t
        if not dt > 0.0:
            raise ValueError(
                f"timestamps must be strictly increasing, got t={s_prev.t!r} then t={s_cur.t!r}"
            )
        base = 4 * i
        cb_prev, cr_prev = 2 * i - 2, 2 * i - 1
        cb_cur, cr_cur = 2 * i, 2 * i + 1
        (db_b, db_r), (dr_b, dr_r) = _dyn_coeffs(s_prev.u, dt, p)
        put(
            base,
            [(cb_prev, db_b / s_dyn_b), (cr_prev, db_r / s_dyn_b), (cb_cur, 1.0 / s_dyn_b)],
            -residual_dyn_beta(x_prev, x_cur, s_prev, dt, p) / s_dyn_b,
            FactorKind.DYN_BETA,
        )
        put(
            base + 1,
            [(cb_prev, dr_b / s_dyn_r), (cr_prev, dr_r / s_dyn_r), (cr_cur, 1.0 / s_dyn_r)],
            -residual_dyn_r(x_prev, x_cur, s_prev, dt, p) / s_dyn_r,
            FactorKind.DYN_R,
        )
        put(
            base + 2,
            [(cr_cur, 1.0 / s_yaw)],
            residual_meas_yaw(x_cur, s_cur) / s_yaw,
            FactorKind.MEAS_YAW_RATE,
        )
        ay_b, ay_r = _ay_coeffs(s_cur.u, p)
        put(
            base + 3,
            [(cb_cur, -ay_b / s_ay), (cr_cur, -ay_r / s_ay)],
            residual_meas_ay(x_cur, s_cur, p) / s_ay,
            FactorKind.MEAS_LAT_ACCEL,
        )

    return SparseSystem(
        nrows=4 * n,
        ncols=2 * n,
        rows=np.array(rows, dtype=np.int64),
        cols=np.array(cols, dtype=np.int64),
        vals=np.array(vals, dtype=np.float64),
        rhs=np.array(rhs, dtype=np.float64),
        row_tags=tuple(tags),
    )
