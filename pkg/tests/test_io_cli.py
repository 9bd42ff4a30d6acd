"""Tests for the CSV formats, config files and the command line front end."""

import math
import os

import numpy as np
import pytest
from helpers_estimation import MODERATE_NOISE, sim_scenario

from sideslip.cli import RunConfig, main, parse_args
from sideslip.csvio import (
    CsvFormatError,
    read_config,
    read_estimates,
    read_samples,
    write_estimates,
    write_metrics,
    write_samples,
    write_triplets,
)
from sideslip.estimators import SmootherConfig, run_batch
from sideslip.factors import assemble, WindowProblem
from sideslip.vehicle import DEFAULT_PARAMS, Sample, State

RAD = 180.0 / math.pi


def scenario_path():
    return os.path.join(os.path.dirname(__file__), os.pardir, "scenarios", "default.cfg")


class TestSampleCsv:
    def test_round_trip_reproduces_the_file(self, tmp_path):
        samples, _ = sim_scenario(duration=2.0, meas_noise=(1e-3, 5e-2), seed=50)
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        write_samples(str(first), samples)
        write_samples(str(second), read_samples(str(first)))
        assert first.read_bytes() == second.read_bytes()

    def test_round_trip_values_at_nine_digits(self, tmp_path):
        samples, _ = sim_scenario(duration=0.3, meas_noise=(1e-3, 5e-2), seed=51)
        path = tmp_path / "s.csv"
        write_samples(str(path), samples)
        back = read_samples(str(path))
        for a, b in zip(samples, back):
            assert math.isclose(a.ay_meas, b.ay_meas, rel_tol=1e-8, abs_tol=1e-12)
            assert math.isclose(a.beta_gt, b.beta_gt, rel_tol=1e-8, abs_tol=1e-12)

    def test_blank_ground_truth_reads_as_none(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,u,delta,yaw_rate,ay,beta_gt\n0.01,20,0,0,0,\n")
        assert read_samples(str(path))[0].beta_gt is None

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,u,delta,yaw_rate,ay,beta_gt\n")
        with pytest.raises(CsvFormatError, match="empty trajectory"):
            read_samples(str(path))

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("time,u,delta,yaw_rate,ay,beta_gt\n0.01,20,0,0,0,\n")
        with pytest.raises(CsvFormatError, match=":1:"):
            read_samples(str(path))

    def test_non_numeric_field_names_the_line(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,u,delta,yaw_rate,ay,beta_gt\n0.01,20,0,0,0,\n0.02,20,oops,0,0,\n")
        with pytest.raises(CsvFormatError, match=":3:.*delta"):
            read_samples(str(path))

    def test_zero_speed_names_the_line(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,u,delta,yaw_rate,ay,beta_gt\n0.01,0,0,0,0,\n")
        with pytest.raises(CsvFormatError, match=":2:.*positive"):
            read_samples(str(path))

    def test_non_increasing_time_names_both_stamps(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,u,delta,yaw_rate,ay,beta_gt\n0.02,20,0,0,0,\n0.01,20,0,0,0,\n")
        with pytest.raises(CsvFormatError, match="0.01.*0.02"):
            read_samples(str(path))

    def test_wrong_field_count_rejected(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,u,delta,yaw_rate,ay,beta_gt\n0.01,20,0\n")
        with pytest.raises(CsvFormatError, match="expected 6 fields"):
            read_samples(str(path))

    def test_degrees_flag_converts_angle_columns_only(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,u,delta,yaw_rate,ay,beta_gt\n0.01,20,1.5,-2,0.25,0.5\n")
        smp = read_samples(str(path), degrees=True)[0]
        assert math.isclose(smp.delta, 1.5 * math.pi / 180.0, rel_tol=1e-12)
        assert math.isclose(smp.phidot_meas, -2.0 * math.pi / 180.0, rel_tol=1e-12)
        assert math.isclose(smp.beta_gt, 0.5 * math.pi / 180.0, rel_tol=1e-12)
        assert smp.t == 0.01
        assert smp.u == 20.0
        assert smp.ay_meas == 0.25


class TestEstimateCsv:
    def test_round_trip(self, tmp_path):
        samples, _ = sim_scenario(duration=0.2, meas_noise=(1e-3, 5e-2), seed=52)
        series = run_batch(samples, SmootherConfig(params=DEFAULT_PARAMS, noise=MODERATE_NOISE))
        path = tmp_path / "e.csv"
        write_estimates(str(path), series)
        back = read_estimates(str(path))
        assert back.mode == "fg_batch"
        assert back.window_ids == series.window_ids
        assert back.iteration_counts == series.iteration_counts
        assert np.allclose(back.beta(), series.beta(), rtol=1e-8, atol=1e-15)

    def test_mixed_modes_rejected(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text(
            "t,beta_est,r_est,mode,window_id,iters\n0.01,0,0,kf,0,1\n0.02,0,0,fg_batch,1,1\n"
        )
        with pytest.raises(CsvFormatError, match="mixed modes"):
            read_estimates(str(path))

    def test_non_integer_metadata_rejected(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("t,beta_est,r_est,mode,window_id,iters\n0.01,0,0,kf,zero,1\n")
        with pytest.raises(CsvFormatError, match="integers"):
            read_estimates(str(path))


class TestConfigAndMetrics:
    def test_read_config_parses_comments_and_blanks(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("# scenario\n\nwindow = 5  # samples\nsigma-ay = 0.05\n")
        assert read_config(str(path)) == {"window": "5", "sigma-ay": "0.05"}

    def test_read_config_rejects_bare_words(self, tmp_path):
        path = tmp_path / "c.cfg"
        path.write_text("window\n")
        with pytest.raises(CsvFormatError, match="key = value"):
            read_config(str(path))

    def test_metrics_round_trip_through_read_config(self, tmp_path):
        path = tmp_path / "m.txt"
        write_metrics(str(path), {"mode": "kf", "rmse_beta_deg": 0.123456789, "window": 5})
        back = read_config(str(path))
        assert back["mode"] == "kf"
        assert back["window"] == "5"
        assert math.isclose(float(back["rmse_beta_deg"]), 0.123456789, rel_tol=1e-8)

    def test_triplet_dump_shape_line(self, tmp_path):
        samples, _ = sim_scenario(duration=0.03, meas_noise=(1e-3, 5e-2), seed=53)
        problem = WindowProblem(
            params=DEFAULT_PARAMS,
            noise=MODERATE_NOISE,
            prior_state=State(0.0, 0.0),
            linearization_states=(State(0.0, 0.0),) * 3,
            samples=tuple(samples),
        )
        path = tmp_path / "sys.txt"
        write_triplets(str(path), assemble(problem))
        lines = path.read_text().splitlines()
        assert lines[0] == "# rows 12 cols 6 nnz 23"
        assert lines.count("# rhs: row value") == 1
        assert lines.count("# row kinds") == 1
        assert lines[-1].endswith("meas_lat_accel")


class TestCliPipeline:
    def run_cli(self, *argv):
        return main(list(argv))

    def test_simulate_with_shipped_scenario_writes_2000_rows(self, tmp_path):
        out = tmp_path / "telemetry.csv"
        assert self.run_cli("simulate", "--config", scenario_path(), "--out", str(out)) == 0
        assert len(read_samples(str(out))) == 2000

    def test_batch_on_noise_free_data_scores_under_a_tenth_millidegree(self, tmp_path):
        telemetry = tmp_path / "t.csv"
        estimates = tmp_path / "e.csv"
        metrics = tmp_path / "m.txt"
        assert self.run_cli(
            "simulate", "--out", str(telemetry), "--duration", "2",
            "--meas-sigma-yaw", "0", "--meas-sigma-ay", "0",
        ) == 0
        assert self.run_cli(
            "estimate", "--input", str(telemetry), "--out", str(estimates),
            "--mode", "fg-batch", "--metrics", str(metrics),
        ) == 0
        entries = read_config(str(metrics))
        assert entries["mode"] == "fg_batch"
        assert float(entries["rmse_beta_deg"]) < 1e-4

    def test_metrics_report_window_and_sigmas(self, tmp_path):
        telemetry = tmp_path / "t.csv"
        estimates = tmp_path / "e.csv"
        metrics = tmp_path / "m.txt"
        self.run_cli("simulate", "--out", str(telemetry), "--duration", "1")
        assert self.run_cli(
            "estimate", "--input", str(telemetry), "--out", str(estimates),
            "--mode", "fg-sliding", "--window", "5", "--metrics", str(metrics),
        ) == 0
        entries = read_config(str(metrics))
        assert entries["mode"] == "fg_sliding"
        assert entries["window"] == "5"
        for key in ("sigma_beta", "sigma_r", "sigma_phidot", "sigma_ay"):
            assert float(entries[key]) > 0.0

    def test_metrics_skipped_without_ground_truth(self, tmp_path, capsys):
        telemetry = tmp_path / "t.csv"
        samples = [
            Sample(t=0.01 * (k + 1), u=20.0, delta=0.0, phidot_meas=0.0, ay_meas=0.0)
            for k in range(30)
        ]
        write_samples(str(telemetry), samples)
        estimates = tmp_path / "e.csv"
        metrics = tmp_path / "m.txt"
        assert self.run_cli(
            "estimate", "--input", str(telemetry), "--out", str(estimates),
            "--mode", "kf", "--metrics", str(metrics),
        ) == 0
        assert not metrics.exists()
        assert "metrics unavailable" in capsys.readouterr().out

    def test_eval_reports_both_series_and_the_improvement(self, tmp_path):
        telemetry = tmp_path / "t.csv"
        kf_est = tmp_path / "kf.csv"
        fg_est = tmp_path / "fg.csv"
        report = tmp_path / "report.txt"
        self.run_cli("simulate", "--out", str(telemetry), "--duration", "2")
        self.run_cli("estimate", "--input", str(telemetry), "--out", str(kf_est), "--mode", "kf")
        self.run_cli("estimate", "--input", str(telemetry), "--out", str(fg_est), "--mode", "fg-batch")
        assert self.run_cli(
            "eval", "--truth", str(telemetry),
            "--est", str(kf_est), "--est", str(fg_est), "--out", str(report),
        ) == 0
        entries = read_config(str(report))
        assert entries["baseline_mode"] == "kf"
        assert entries["series1_mode"] == "fg_batch"
        base = float(entries["baseline_rmse_beta_deg"])
        cand = float(entries["series1_rmse_beta_deg"])
        got = float(entries["series1_beta_improvement_pct"])
        assert math.isclose(got, (base - cand) / base * 100.0, rel_tol=1e-6)

    def test_degrees_ingestion_matches_the_radian_run(self, tmp_path):
        telemetry = tmp_path / "t.csv"
        self.run_cli("simulate", "--out", str(telemetry), "--duration", "1")
        samples = read_samples(str(telemetry))
        converted = tmp_path / "deg.csv"
        write_samples(
            str(converted),
            [
                Sample(
                    t=s.t, u=s.u, delta=s.delta * RAD, phidot_meas=s.phidot_meas * RAD,
                    ay_meas=s.ay_meas, beta_gt=s.beta_gt * RAD,
                )
                for s in samples
            ],
        )
        rad_out = tmp_path / "rad_est.csv"
        deg_out = tmp_path / "deg_est.csv"
        self.run_cli("estimate", "--input", str(telemetry), "--out", str(rad_out), "--mode", "kf")
        assert self.run_cli(
            "estimate", "--input", str(converted), "--out", str(deg_out), "--mode", "kf", "--degrees",
        ) == 0
        a = read_estimates(str(rad_out))
        b = read_estimates(str(deg_out))
        assert np.allclose(a.beta(), b.beta(), rtol=1e-5, atol=1e-10)

    def test_dump_system_writes_the_reference_shape(self, tmp_path):
        telemetry = tmp_path / "t.csv"
        dump = tmp_path / "sys.txt"
        self.run_cli("simulate", "--out", str(telemetry), "--duration", "1")
        assert self.run_cli(
            "dump-system", "--input", str(telemetry), "--out", str(dump), "--window", "3",
        ) == 0
        assert dump.read_text().splitlines()[0] == "# rows 12 cols 6 nnz 23"

    def test_config_file_defaults_and_flag_override(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("duration = 2\ndt = 0.01\nseed = 9\n")
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        assert self.run_cli("simulate", "--config", str(cfg), "--out", str(out_a)) == 0
        assert len(read_samples(str(out_a))) == 200
        assert self.run_cli(
            "simulate", "--config", str(cfg), "--out", str(out_b), "--duration", "1",
        ) == 0
        assert len(read_samples(str(out_b))) == 100

    def test_unknown_config_key_fails(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("wheelbase = 2.7\n")
        assert self.run_cli("simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")) == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_other_subcommand_keys_are_ignored(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("duration = 1\nwindow = 7\nsigma-ay = 0.05\n")
        out = tmp_path / "t.csv"
        assert self.run_cli("simulate", "--config", str(cfg), "--out", str(out)) == 0

    def test_missing_input_file_exits_nonzero(self, tmp_path, capsys):
        assert self.run_cli(
            "estimate", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "e.csv"),
        ) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_required_path_exits_nonzero(self, capsys):
        assert self.run_cli("estimate", "--mode", "kf") == 1
        assert "error:" in capsys.readouterr().err

    def test_eval_requires_estimates(self, tmp_path, capsys):
        telemetry = tmp_path / "t.csv"
        self.run_cli("simulate", "--out", str(telemetry), "--duration", "1")
        assert self.run_cli("eval", "--truth", str(telemetry), "--out", str(tmp_path / "r.txt")) == 1
        assert "estimate" in capsys.readouterr().err

    def test_eval_rejects_length_mismatch(self, tmp_path, capsys):
        telemetry = tmp_path / "t.csv"
        short = tmp_path / "short.csv"
        est = tmp_path / "e.csv"
        self.run_cli("simulate", "--out", str(telemetry), "--duration", "1")
        self.run_cli("simulate", "--out", str(short), "--duration", "0.5")
        self.run_cli("estimate", "--input", str(short), "--out", str(est), "--mode", "kf")
        assert self.run_cli(
            "eval", "--truth", str(telemetry), "--est", str(est), "--out", str(tmp_path / "r.txt"),
        ) == 1
        assert "estimates vs" in capsys.readouterr().err

    def test_parse_args_builds_a_run_config(self):
        config = parse_args(
            ["estimate", "--input", "in.csv", "--out", "out.csv", "--mode", "fg-sliding",
             "--window", "7", "--sigma-ay", "0.1"]
        )
        assert isinstance(config, RunConfig)
        assert config.mode == "fg-sliding"
        assert config.window == 7
        assert config.noise.sigma_ay == 0.1
        assert config.metrics == "out.csv.metrics"

    def test_run_config_validates_mode_and_window(self):
        with pytest.raises(ValueError, match="mode"):
            RunConfig(mode="warp")
        with pytest.raises(ValueError, match="window"):
            RunConfig(mode="simulate", output="x.csv", window=0)
