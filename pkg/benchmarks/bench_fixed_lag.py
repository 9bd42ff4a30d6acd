"""Benchmark the sliding-window estimator: compiled kernel vs pure Python.

Runs the same seeded noisy scenario through run_fixed_lag with each
available backend and reports the best wall time over a few repeats.
The two paths compute identical arithmetic, so the comparison is purely
about dispatch and loop overhead.

Usage:
    python3 benchmarks/bench_fixed_lag.py [--duration 20] [--window 5] [--repeats 5]
"""

import argparse
import time

from sideslip import (
    DEFAULT_PARAMS,
    SimConfig,
    SmootherConfig,
    SpeedProfile,
    SteeringProfile,
    NoiseConfig,
    run_fixed_lag,
    simulate,
)
from sideslip._kernel import HAVE_NATIVE


def build_samples(duration, dt, seed):
    config = SimConfig(
        params=DEFAULT_PARAMS,
        duration=duration,
        dt=dt,
        speed=SpeedProfile.constant(20.0),
        steering=SteeringProfile.sine(0.03, 4.0),
        meas_noise=(1e-3, 5e-2),
        seed=seed,
    )
    samples, _ = simulate(config)
    return samples


def bench(samples, config, backend, repeats):
    best = float("inf")
    series = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        series = run_fixed_lag(samples, config, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, series


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--duration", type=float, default=20.0, help="scenario length [s]")
    parser.add_argument("--dt", type=float, default=0.01, help="sample period [s]")
    parser.add_argument("--window", type=int, default=5, help="sliding window length")
    parser.add_argument("--repeats", type=int, default=5, help="repeats per backend, best kept")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    samples = build_samples(args.duration, args.dt, args.seed)
    config = SmootherConfig(
        params=DEFAULT_PARAMS,
        noise=NoiseConfig(
            sigma_beta=1e-5, sigma_r=1e-5, sigma_phidot=1e-3, sigma_ay=5e-2,
            sigma_prior_beta=1e-2, sigma_prior_r=1e-2,
        ),
        window_len=args.window,
    )
    n_windows = max(1, len(samples) - args.window + 1)
    print(f"{len(samples)} samples, window {args.window} ({n_windows} solves), best of {args.repeats}")

    results = {}
    backends = ["python"] + (["native"] if HAVE_NATIVE else [])
    for backend in backends:
        best, series = bench(samples, config, backend, args.repeats)
        results[backend] = (best, series)
        per_window = best / n_windows
        print(f"  {backend:<7} {best * 1e3:9.2f} ms total  {per_window * 1e6:9.2f} us/window")

    if not HAVE_NATIVE:
        print("  native  not built (install with a C compiler to compare)")
    else:
        py_time, py_series = results["python"]
        nat_time, nat_series = results["native"]
        exact = all(
            a.beta == b.beta and a.r == b.r
            for a, b in zip(py_series.states, nat_series.states)
        )
        print(f"  speedup {py_time / nat_time:.1f}x, outputs bitwise identical: {exact}")


if __name__ == "__main__":
    main()
