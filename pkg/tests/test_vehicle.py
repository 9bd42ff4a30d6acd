"""Unit tests for the single-track dynamics primitives."""

import math

import numpy as np
import pytest

from sideslip.vehicle import (
    DEFAULT_PARAMS,
    Sample,
    State,
    VehicleParams,
    _rates,
    lateral_velocity,
    predict_lat_accel,
    predict_yaw_meas,
    step_dynamics,
)

P = DEFAULT_PARAMS


class TestValidation:
    @pytest.mark.parametrize("field", ["m", "Jz", "Cf", "Cr", "lf", "lr"])
    @pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
    def test_params_reject_non_positive_or_non_finite(self, field, bad):
        values = {"m": 1500.0, "Jz": 2500.0, "Cf": 8e4, "Cr": 8e4, "lf": 1.1, "lr": 1.6}
        values[field] = bad
        with pytest.raises(ValueError, match=field):
            VehicleParams(**values)

    @pytest.mark.parametrize("beta,r", [(math.nan, 0.0), (0.0, math.inf), (-math.inf, 1.0)])
    def test_state_requires_finite_fields(self, beta, r):
        with pytest.raises(ValueError):
            State(beta, r)

    def test_sample_rejects_non_positive_speed(self):
        with pytest.raises(ValueError, match="u must be positive"):
            Sample(t=0.0, u=0.0, delta=0.0, phidot_meas=0.0, ay_meas=0.0)
        with pytest.raises(ValueError, match="u must be positive"):
            Sample(t=0.0, u=-3.0, delta=0.0, phidot_meas=0.0, ay_meas=0.0)

    def test_sample_ground_truth_optional_but_finite(self):
        assert Sample(t=0.0, u=20.0, delta=0.0, phidot_meas=0.0, ay_meas=0.0).beta_gt is None
        with pytest.raises(ValueError, match="beta_gt"):
            Sample(t=0.0, u=20.0, delta=0.0, phidot_meas=0.0, ay_meas=0.0, beta_gt=math.nan)

    def test_sample_rejects_non_finite_measurements(self):
        with pytest.raises(ValueError, match="ay_meas"):
            Sample(t=0.0, u=20.0, delta=0.0, phidot_meas=0.0, ay_meas=math.nan)


class TestStepDynamics:
    @pytest.mark.parametrize("u,dt", [(5.0, 0.001), (20.0, 0.01), (35.0, 0.5)])
    def test_rest_with_zero_steering_is_a_fixed_point(self, u, dt):
        assert step_dynamics(State(0.0, 0.0), u, 0.0, dt, P) == State(0.0, 0.0)

    def test_zero_dt_update_expression_is_the_identity(self):
        # The Euler update itself collapses to the previous state at dt = 0;
        # step_dynamics rejects dt = 0 before reaching it, so probe the rates.
        prev = State(0.013, -0.22)
        beta_rate, r_rate = _rates(prev.beta, prev.r, 17.0, 0.008, P)
        assert math.isfinite(beta_rate) and math.isfinite(r_rate)
        assert prev.beta + 0.0 * beta_rate == prev.beta
        assert prev.r + 0.0 * r_rate == prev.r

    def test_reference_step_from_rest(self):
        nxt = step_dynamics(State(0.0, 0.0), 20.0, 0.01, 0.01, P)
        # From rest only the steering terms survive one Euler step.
        assert math.isclose(nxt.beta, 0.01 * 80000.0 * 0.01 / (1500.0 * 20.0), rel_tol=1e-12)
        assert math.isclose(nxt.r, 0.01 * 80000.0 * 1.1 * 0.01 / 2500.0, rel_tol=1e-12)
        assert math.isclose(nxt.beta, 2.6667e-4, rel_tol=1e-4)
        assert math.isclose(nxt.r, 3.52e-3, rel_tol=1e-4)

    @pytest.mark.parametrize("u,dt", [(0.0, 0.01), (-5.0, 0.01), (20.0, 0.0), (20.0, -0.01)])
    def test_rejects_non_positive_speed_or_dt(self, u, dt):
        with pytest.raises(ValueError):
            step_dynamics(State(0.0, 0.0), u, 0.0, dt, P)

    def test_superposition_in_state_and_steering(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            x1 = State(float(rng.uniform(-0.05, 0.05)), float(rng.uniform(-0.5, 0.5)))
            x2 = State(float(rng.uniform(-0.05, 0.05)), float(rng.uniform(-0.5, 0.5)))
            d1, d2 = float(rng.uniform(-0.05, 0.05)), float(rng.uniform(-0.05, 0.05))
            u, dt = float(rng.uniform(5.0, 35.0)), float(rng.uniform(0.001, 0.05))
            a = step_dynamics(x1, u, d1, dt, P)
            b = step_dynamics(x2, u, d2, dt, P)
            c = step_dynamics(State(x1.beta + x2.beta, x1.r + x2.r), u, d1 + d2, dt, P)
            assert math.isclose(c.beta, a.beta + b.beta, rel_tol=1e-12, abs_tol=1e-15)
            assert math.isclose(c.r, a.r + b.r, rel_tol=1e-12, abs_tol=1e-15)

    def test_doubling_state_and_steering_doubles_the_step_exactly(self):
        x = State(0.01, -0.2)
        a = step_dynamics(x, 20.0, 0.01, 0.01, P)
        b = step_dynamics(State(2.0 * x.beta, 2.0 * x.r), 20.0, 0.02, 0.01, P)
        assert b.beta == 2.0 * a.beta
        assert b.r == 2.0 * a.r

    def test_constant_input_converges_to_the_analytic_steady_state(self):
        u, delta, dt = 20.0, 0.01, 0.005
        a = np.array(
            [
                [-(P.Cf + P.Cr) / (P.m * u), -((P.Cf * P.lf - P.Cr * P.lr) / (P.m * u * u) + 1.0)],
                [-(P.Cf * P.lf - P.Cr * P.lr) / P.Jz, -(P.Cf * P.lf**2 + P.Cr * P.lr**2) / (P.Jz * u)],
            ]
        )
        b = np.array([P.Cf * delta / (P.m * u), P.Cf * P.lf * delta / P.Jz])
        target = np.linalg.solve(a, -b)
        s = State(0.0, 0.0)
        for _ in range(8000):
            s = step_dynamics(s, u, delta, dt, P)
        assert abs(s.beta - target[0]) < 1e-9
        assert abs(s.r - target[1]) < 1e-9


class TestPredictLatAccel:
    def test_rest_with_zero_steering_gives_zero(self):
        assert predict_lat_accel(State(0.0, 0.0), 20.0, 0.0, P) == 0.0

    def test_reference_steering_only_value(self):
        got = predict_lat_accel(State(0.0, 0.0), 20.0, 0.01, P)
        assert math.isclose(got, 80000.0 * 0.01 / 1500.0, rel_tol=1e-12)
        assert math.isclose(got, 0.53333, rel_tol=1e-4)

    def test_doubling_all_inputs_doubles_the_output_exactly(self):
        s = State(0.012, -0.31)
        assert predict_lat_accel(State(2 * s.beta, 2 * s.r), 18.0, 0.02, P) == 2.0 * predict_lat_accel(
            s, 18.0, 0.01, P
        )

    def test_rejects_non_positive_speed(self):
        with pytest.raises(ValueError, match="speed"):
            predict_lat_accel(State(0.0, 0.0), 0.0, 0.0, P)


class TestPredictYawMeas:
    @pytest.mark.parametrize("state,expected", [
        (State(0.1, 0.3), 0.3),
        (State(0.0, 0.0), 0.0),
        (State(-0.02, -0.5), -0.5),
    ])
    def test_returns_r_exactly(self, state, expected):
        assert predict_yaw_meas(state) == expected


class TestLateralVelocity:
    def test_zero_sideslip_gives_zero(self):
        assert lateral_velocity(State(0.0, 0.1), 20.0) == 0.0

    def test_direct_products(self):
        assert math.isclose(lateral_velocity(State(0.05, 0.0), 20.0), 1.0, rel_tol=1e-12)
        assert math.isclose(lateral_velocity(State(-0.01, 0.0), 30.0), -0.3, rel_tol=1e-12)

    def test_rejects_non_positive_speed(self):
        with pytest.raises(ValueError, match="speed"):
            lateral_velocity(State(0.05, 0.0), -1.0)
