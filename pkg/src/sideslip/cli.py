"""Command line front end.

Subcommands: simulate (synthesize a telemetry CSV), estimate (run one of
the estimators over a CSV), eval (compare estimate files against a truth
file) and dump-system (write one window's sparse system as text).

Every flag can also come from a flat "key = value" config file passed with
--config; the key names mirror the long flags without the leading dashes.
Explicit flags win over the file. Keys belonging to other subcommands are
ignored so one scenario file can drive a whole pipeline.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass

from .csvio import (
    CsvFormatError,
    read_config,
    read_estimates,
    read_samples,
    write_estimates,
    write_metrics,
    write_samples,
    write_triplets,
)
from .estimators import (
    KfConfig,
    SmootherConfig,
    rmse,
    run_batch,
    run_fixed_lag,
    run_kf,
)
from .factors import DEFAULT_NOISE, NoiseConfig, WindowProblem, assemble
from .sim import SimConfig, SpeedProfile, SteeringProfile, simulate
from .vehicle import DEFAULT_PARAMS, State, VehicleParams

__all__ = ["RunConfig", "run", "main"]

RAD_TO_DEG = 180.0 / math.pi

_MODES = ("fg-sliding", "fg-batch", "kf", "simulate", "eval", "dump-system")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved description of one CLI invocation."""

    mode: str
    input: str | None = None
    output: str | None = None
    metrics: str | None = None
    truth: str | None = None
    estimate_paths: tuple[str, ...] = ()
    window: int = 5
    degrees: bool = False
    seed: int = 42
    params: VehicleParams = DEFAULT_PARAMS
    noise: NoiseConfig = DEFAULT_NOISE
    initial_state: State = State(0.0, 0.0)
    backend: str = "auto"
    start: int = 0
    duration: float = 20.0
    dt: float = 0.01
    speed: str = "20"
    steer: str = "sine:0.03:4"
    meas_sigma_yaw: float = 1e-3
    meas_sigma_ay: float = 5e-2

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.window < 1:
            raise ValueError(f"window must be at least 1, got {self.window}")
        needed = {
            "simulate": ("output",),
            "fg-sliding": ("input", "output"),
            "fg-batch": ("input", "output"),
            "kf": ("input", "output"),
            "eval": ("truth", "output"),
            "dump-system": ("input", "output"),
        }[self.mode]
        for name in needed:
            if not getattr(self, name):
                raise ValueError(f"mode {self.mode!r} requires a non-empty {name} path")
        if self.mode == "eval" and not self.estimate_paths:
            raise ValueError("eval requires at least one estimate file")


def _vehicle_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("vehicle parameters")
    g.add_argument("--mass", type=float, default=DEFAULT_PARAMS.m, help="vehicle mass [kg]")
    g.add_argument("--inertia", type=float, default=DEFAULT_PARAMS.Jz, help="yaw inertia [kg m^2]")
    g.add_argument("--cf", type=float, default=DEFAULT_PARAMS.Cf, help="front cornering stiffness [N/rad]")
    g.add_argument("--cr", type=float, default=DEFAULT_PARAMS.Cr, help="rear cornering stiffness [N/rad]")
    g.add_argument("--lf", type=float, default=DEFAULT_PARAMS.lf, help="CoG to front axle [m]")
    g.add_argument("--lr", type=float, default=DEFAULT_PARAMS.lr, help="CoG to rear axle [m]")


def _noise_flags(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("noise sigmas")
    g.add_argument("--sigma-beta", type=float, default=DEFAULT_NOISE.sigma_beta,
                   help="dynamic consistency of beta [rad]")
    g.add_argument("--sigma-r", type=float, default=DEFAULT_NOISE.sigma_r,
                   help="dynamic consistency of r [rad/s]")
    g.add_argument("--sigma-phidot", type=float, default=DEFAULT_NOISE.sigma_phidot,
                   help="yaw rate measurement [rad/s]")
    g.add_argument("--sigma-ay", type=float, default=DEFAULT_NOISE.sigma_ay,
                   help="lateral acceleration measurement [m/s^2]")
    g.add_argument("--sigma-prior-beta", type=float, default=DEFAULT_NOISE.sigma_prior_beta,
                   help="prior on the first window beta [rad]")
    g.add_argument("--sigma-prior-r", type=float, default=DEFAULT_NOISE.sigma_prior_r,
                   help="prior on the first window r [rad/s]")


def _init_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--init-beta", type=float, default=0.0, help="initial sideslip guess [rad]")
    parser.add_argument("--init-r", type=float, default=0.0, help="initial yaw rate guess [rad/s]")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="sideslip",
        description="Sideslip angle estimation from steering, speed, yaw rate and lateral acceleration logs.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, argparse.ArgumentParser] = {}

    sim = subs.add_parser("simulate", help="generate a synthetic telemetry CSV")
    sim.add_argument("--config", help="flat key = value file of defaults")
    sim.add_argument("--out", required=False, help="output telemetry CSV path")
    sim.add_argument("--duration", type=float, default=20.0, help="trajectory length [s]")
    sim.add_argument("--dt", type=float, default=0.01, help="sample period [s]")
    sim.add_argument("--speed", default="20", help='speed profile: "20" or "0:20,8:25"')
    sim.add_argument("--steer", default="sine:0.03:4",
                     help='steering profile: "const:V", "sine:AMP:PERIOD" or "step:T:V,T:V,..."')
    sim.add_argument("--meas-sigma-yaw", type=float, default=1e-3,
                     help="yaw rate sensor noise sigma [rad/s]")
    sim.add_argument("--meas-sigma-ay", type=float, default=5e-2,
                     help="lateral acceleration sensor noise sigma [m/s^2]")
    sim.add_argument("--seed", type=int, default=42, help="random seed for the sensor noise")
    _vehicle_flags(sim)
    commands["simulate"] = sim

    est = subs.add_parser("estimate", help="estimate sideslip from a telemetry CSV")
    est.add_argument("--config", help="flat key = value file of defaults")
    est.add_argument("--input", required=False, help="input telemetry CSV path")
    est.add_argument("--out", required=False, help="output estimate CSV path")
    est.add_argument("--mode", choices=["fg-sliding", "fg-batch", "kf"], default="fg-sliding",
                     help="estimator to run")
    est.add_argument("--window", type=int, default=5, help="sliding window length in samples")
    est.add_argument("--metrics", help="metrics file path (default: <out>.metrics)")
    est.add_argument("--backend", choices=["auto", "python", "native"], default="auto",
                     help="sliding-window implementation to use")
    est.add_argument("--degrees", action="store_true",
                     help="input angle columns (delta, yaw_rate, beta_gt) are in degrees")
    _noise_flags(est)
    _vehicle_flags(est)
    _init_flags(est)
    commands["estimate"] = est

    ev = subs.add_parser("eval", help="score estimate files against a truth CSV")
    ev.add_argument("--config", help="flat key = value file of defaults")
    ev.add_argument("--truth", required=False, help="telemetry CSV with beta_gt filled in")
    ev.add_argument("--est", action="append", default=[],
                    help="estimate CSV to score; repeat, first one is the baseline")
    ev.add_argument("--out", required=False, help="output report path (flat key = value)")
    ev.add_argument("--degrees", action="store_true",
                    help="truth angle columns are in degrees")
    commands["eval"] = ev

    dump = subs.add_parser("dump-system", help="write one window's whitened sparse system as text")
    dump.add_argument("--config", help="flat key = value file of defaults")
    dump.add_argument("--input", required=False, help="input telemetry CSV path")
    dump.add_argument("--out", required=False, help="output text path")
    dump.add_argument("--start", type=int, default=0, help="index of the window's first sample")
    dump.add_argument("--window", type=int, default=5, help="window length in samples")
    dump.add_argument("--degrees", action="store_true",
                      help="input angle columns (delta, yaw_rate, beta_gt) are in degrees")
    _noise_flags(dump)
    _vehicle_flags(dump)
    _init_flags(dump)
    commands["dump-system"] = dump

    return parser, commands


_BOOL_WORDS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _apply_config_file(commands, command: str, path: str) -> None:
    """Load a config file into the active subcommand's defaults.

    Keys mirror the long flags without the leading dashes. A key unknown to
    the active subcommand but valid for another one is ignored; a key valid
    nowhere is an error.
    """
    entries = read_config(path)
    all_dests = {
        action.dest for sub in commands.values() for action in sub._actions
    }
    active = commands[command]
    dests = {action.dest: action for action in active._actions}
    for key, value in entries.items():
        dest = key.replace("-", "_")
        if dest not in all_dests:
            raise ValueError(f"{path}: unknown config key {key!r}")
        action = dests.get(dest)
        if action is None:
            continue
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            word = value.lower()
            if word not in _BOOL_WORDS:
                raise ValueError(f"{path}: config key {key!r} expects a boolean, got {value!r}")
            active.set_defaults(**{dest: _BOOL_WORDS[word]})
        elif isinstance(action, argparse._AppendAction):
            active.set_defaults(**{dest: [v.strip() for v in value.split(",") if v.strip()]})
        else:
            active.set_defaults(**{dest: value})
    active.set_defaults(config=path)


def parse_args(argv) -> RunConfig:
    parser, commands = build_parser()
    first = parser.parse_args(argv)
    if getattr(first, "config", None):
        _apply_config_file(commands, first.command, first.config)
        args = parser.parse_args(argv)
    else:
        args = first

    params = VehicleParams(m=args.mass, Jz=args.inertia, Cf=args.cf, Cr=args.cr, lf=args.lf, lr=args.lr) \
        if hasattr(args, "mass") else DEFAULT_PARAMS

    if args.command == "simulate":
        return RunConfig(
            mode="simulate",
            output=args.out,
            duration=args.duration,
            dt=args.dt,
            speed=str(args.speed),
            steer=args.steer,
            meas_sigma_yaw=args.meas_sigma_yaw,
            meas_sigma_ay=args.meas_sigma_ay,
            seed=args.seed,
            params=params,
        )
    if args.command == "estimate":
        return RunConfig(
            mode=args.mode,
            input=args.input,
            output=args.out,
            metrics=args.metrics if args.metrics else (args.out + ".metrics" if args.out else None),
            window=args.window,
            degrees=args.degrees,
            params=params,
            noise=_noise_from_args(args),
            initial_state=State(args.init_beta, args.init_r),
            backend=args.backend,
        )
    if args.command == "eval":
        return RunConfig(
            mode="eval",
            truth=args.truth,
            estimate_paths=tuple(args.est),
            output=args.out,
            degrees=args.degrees,
        )
    return RunConfig(
        mode="dump-system",
        input=args.input,
        output=args.out,
        start=args.start,
        window=args.window,
        degrees=args.degrees,
        params=params,
        noise=_noise_from_args(args),
        initial_state=State(args.init_beta, args.init_r),
    )


def _noise_from_args(args) -> NoiseConfig:
    return NoiseConfig(
        sigma_beta=args.sigma_beta,
        sigma_r=args.sigma_r,
        sigma_phidot=args.sigma_phidot,
        sigma_ay=args.sigma_ay,
        sigma_prior_beta=args.sigma_prior_beta,
        sigma_prior_r=args.sigma_prior_r,
    )


def _run_simulate(config: RunConfig) -> int:
    sim_config = SimConfig(
        params=config.params,
        duration=config.duration,
        dt=config.dt,
        speed=SpeedProfile.parse(config.speed),
        steering=SteeringProfile.parse(config.steer),
        meas_noise=(config.meas_sigma_yaw, config.meas_sigma_ay),
        seed=config.seed,
    )
    samples, _ = simulate(sim_config)
    write_samples(config.output, samples)
    read_samples(config.output)
    print(f"wrote {len(samples)} samples to {config.output}")
    return 0


def _run_estimate(config: RunConfig) -> int:
    samples = read_samples(config.input, degrees=config.degrees)
    if config.mode == "kf":
        series = run_kf(
            samples,
            KfConfig.from_noise(config.params, config.noise, config.initial_state),
        )
    else:
        smoother = SmootherConfig(
            params=config.params,
            noise=config.noise,
            window_len=config.window,
            initial_state=config.initial_state,
        )
        if config.mode == "fg-batch":
            series = run_batch(samples, smoother)
        else:
            series = run_fixed_lag(samples, smoother, backend=config.backend)
    write_estimates(config.output, series)
    read_estimates(config.output)
    print(f"wrote {len(series.states)} estimates to {config.output}")

    if all(s.beta_gt is not None for s in samples):
        beta_truth = [s.beta_gt for s in samples]
        yaw_ref = [s.phidot_meas for s in samples]
        rmse_beta, rmse_r = rmse(series, beta_truth, yaw_ref)
        effective_window = {
            "fg-sliding": min(config.window, len(samples)),
            "fg-batch": len(samples),
            "kf": 1,
        }[config.mode]
        entries: dict[str, object] = {
            "mode": series.mode,
            "window": effective_window,
            "rmse_beta_deg": rmse_beta * RAD_TO_DEG,
            "rmse_r_degps": rmse_r * RAD_TO_DEG,
            "sigma_beta": config.noise.sigma_beta,
            "sigma_r": config.noise.sigma_r,
            "sigma_phidot": config.noise.sigma_phidot,
            "sigma_ay": config.noise.sigma_ay,
            "sigma_prior_beta": config.noise.sigma_prior_beta,
            "sigma_prior_r": config.noise.sigma_prior_r,
        }
        write_metrics(config.metrics, entries)
        read_config(config.metrics)
        print(f"wrote metrics to {config.metrics} "
              f"(rmse_beta {entries['rmse_beta_deg']:.6g} deg, r vs measured yaw rate)")
    else:
        print("metrics unavailable: input has no complete beta_gt column")
    return 0


def _run_eval(config: RunConfig) -> int:
    truth = read_samples(config.truth, degrees=config.degrees)
    if any(s.beta_gt is None for s in truth):
        raise ValueError(f"{config.truth}: eval requires beta_gt on every row")
    beta_truth = [s.beta_gt for s in truth]
    yaw_ref = [s.phidot_meas for s in truth]

    entries: dict[str, object] = {"truth_path": config.truth, "series_count": len(config.estimate_paths)}
    scores: list[tuple[str, str, float, float]] = []
    for path in config.estimate_paths:
        series = read_estimates(path)
        if len(series.states) != len(truth):
            raise ValueError(
                f"{path}: {len(series.states)} estimates vs {len(truth)} truth rows"
            )
        for te, tt in zip(series.times, (s.t for s in truth)):
            if abs(te - tt) > 1e-9:
                raise ValueError(f"{path}: timestamps do not match the truth file (t={te!r} vs {tt!r})")
        rb, rr = rmse(series, beta_truth, yaw_ref)
        scores.append((path, series.mode, rb * RAD_TO_DEG, rr * RAD_TO_DEG))

    base = scores[0]
    for i, (path, mode, rb, rr) in enumerate(scores):
        tag = "baseline" if i == 0 else f"series{i}"
        entries[f"{tag}_path"] = path
        entries[f"{tag}_mode"] = mode
        entries[f"{tag}_rmse_beta_deg"] = rb
        entries[f"{tag}_rmse_r_degps"] = rr
        if i > 0:
            entries[f"{tag}_beta_improvement_pct"] = (base[2] - rb) / base[2] * 100.0
            entries[f"{tag}_r_improvement_pct"] = (base[3] - rr) / base[3] * 100.0

    write_metrics(config.output, entries)
    read_config(config.output)
    for i, (path, mode, rb, rr) in enumerate(scores):
        note = "" if i == 0 else f" ({(base[2] - rb) / base[2] * 100.0:+.1f}% beta RMSE vs baseline)"
        print(f"{os.path.basename(path)} [{mode}]: rmse_beta {rb:.6g} deg, rmse_r {rr:.6g} deg/s{note}")
    print(f"wrote report to {config.output}")
    return 0


def _run_dump(config: RunConfig) -> int:
    samples = read_samples(config.input, degrees=config.degrees)
    if not (0 <= config.start < len(samples)):
        raise ValueError(f"start index {config.start} outside 0..{len(samples) - 1}")
    window = tuple(samples[config.start : config.start + config.window])
    from .estimators import _rollout_states

    problem = WindowProblem(
        params=config.params,
        noise=config.noise,
        prior_state=config.initial_state,
        linearization_states=_rollout_states(config.initial_state, window, config.params),
        samples=window,
    )
    system = assemble(problem)
    write_triplets(config.output, system)
    with open(config.output, "r", encoding="utf-8") as handle:
        if not handle.readline().startswith("# rows"):
            raise RuntimeError(f"{config.output}: dump did not parse back")
    print(f"wrote {system.nrows}x{system.ncols} system ({system.nnz} nonzeros) to {config.output}")
    return 0


def run(config: RunConfig) -> int:
    """Execute one resolved invocation; returns the process exit status."""
    if config.mode == "simulate":
        return _run_simulate(config)
    if config.mode == "eval":
        return _run_eval(config)
    if config.mode == "dump-system":
        return _run_dump(config)
    return _run_estimate(config)


def main(argv=None) -> int:
    try:
        config = parse_args(sys.argv[1:] if argv is None else list(argv))
    except CsvFormatError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        return run(config)
    except (CsvFormatError, ValueError, RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
