"""Loading the CSV files and drawing the two-panel comparison figure.

The input formats are the estimator pipeline's own: a telemetry CSV with
a filled-in beta_gt column for the truth, and one estimate CSV per mode.
Files are stored in radians; the figure is drawn in degrees (beta) and
degrees per second (r).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import matplotlib

# Pinned backend: rendering must not depend on the host's GUI stack and
# repeated runs must produce identical image bytes.
matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

TRUTH_FIELDS = ("t", "u", "delta", "yaw_rate", "ay", "beta_gt")
ESTIMATE_FIELDS = ("t", "beta_est", "r_est", "mode", "window_id", "iters")

RAD_TO_DEG = 180.0 / math.pi


def to_degrees(values) -> np.ndarray:
    """Radians to degrees; the single place the factor is applied."""
    return np.asarray(values, dtype=float) * RAD_TO_DEG


@dataclass(frozen=True)
class Series:
    """One labeled (t, beta, r) trajectory, angles in radians."""

    label: str
    t: np.ndarray
    beta: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        if len(self.t) == 0:
            raise ValueError(f"series {self.label!r} has no rows")
        if not (len(self.t) == len(self.beta) == len(self.r)):
            raise ValueError(f"series {self.label!r} has mismatched column lengths")


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: a truth file, any number of estimate files, one output image.

    zoom is an optional (t0, t1) view restriction; it must stay inside the
    time extent of the loaded data. An estimate-free spec is allowed and
    plots the truth alone.
    """

    truth_path: str
    out_path: str
    series: tuple[tuple[str, str], ...] = field(default_factory=tuple)
    zoom: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.truth_path:
            raise ValueError("PlotSpec.truth_path must be a non-empty path")
        if not self.out_path:
            raise ValueError("PlotSpec.out_path must be a non-empty path")
        for label, path in self.series:
            if not label or not path:
                raise ValueError(f"series entries need a label and a path, got {(label, path)!r}")
        if self.zoom is not None:
            t0, t1 = self.zoom
            if not (math.isfinite(t0) and math.isfinite(t1) and t0 < t1):
                raise ValueError(f"zoom must be a finite (t0, t1) with t0 < t1, got {self.zoom!r}")


def _read_rows(path: str, fields: tuple[str, ...]) -> list[list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != fields:
            raise ValueError(f"{path}:1: expected header {','.join(fields)!r}, got {header!r}")
        rows = []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(fields):
                raise ValueError(f"{path}:{line}: expected {len(fields)} fields, got {len(row)}")
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty trajectory (header but no data rows)")
    return rows


def _parse_column(rows, index, path: str, name: str) -> np.ndarray:
    out = np.empty(len(rows))
    for k, row in enumerate(rows):
        try:
            out[k] = float(row[index])
        except ValueError:
            raise ValueError(
                f"{path}:{k + 2}: field {name!r} is not a number: {row[index]!r}"
            ) from None
    return out


def load_truth(path: str) -> Series:
    """Read a telemetry CSV as the truth series.

    beta comes from the beta_gt column, which must be filled on every row;
    r comes from the measured yaw rate, the same reference the estimator's
    metrics use.
    """
    rows = _read_rows(path, TRUTH_FIELDS)
    for k, row in enumerate(rows):
        if row[5].strip() == "":
            raise ValueError(f"{path}:{k + 2}: truth file needs beta_gt on every row")
    return Series(
        label="truth",
        t=_parse_column(rows, 0, path, "t"),
        beta=_parse_column(rows, 5, path, "beta_gt"),
        r=_parse_column(rows, 3, path, "yaw_rate"),
    )


def load_estimates(path: str, label: str | None = None) -> Series:
    """Read an estimate CSV; the label defaults to the file's mode column."""
    rows = _read_rows(path, ESTIMATE_FIELDS)
    modes = {row[3] for row in rows}
    if len(modes) != 1:
        raise ValueError(f"{path}: mixed modes {sorted(modes)!r} in one estimate file")
    return Series(
        label=label if label else modes.pop(),
        t=_parse_column(rows, 0, path, "t"),
        beta=_parse_column(rows, 1, path, "beta_est"),
        r=_parse_column(rows, 2, path, "r_est"),
    )


def build_figure(spec: PlotSpec):
    """Load everything in the spec and return the drawn matplotlib figure."""
    series = [load_truth(spec.truth_path)]
    for label, path in spec.series:
        series.append(load_estimates(path, label))

    t_min = min(float(s.t[0]) for s in series)
    t_max = max(float(s.t[-1]) for s in series)
    if spec.zoom is not None:
        t0, t1 = spec.zoom
        if t0 < t_min or t1 > t_max:
            raise ValueError(
                f"zoom {t0}:{t1} outside the data extent {t_min}:{t_max}"
            )

    fig, (ax_beta, ax_r) = plt.subplots(2, 1, sharex=True, figsize=(9.0, 6.0))
    for i, s in enumerate(series):
        style = {"color": "0.2", "linewidth": 1.0} if i == 0 else {"linewidth": 1.2}
        ax_beta.plot(s.t, to_degrees(s.beta), label=s.label, **style)
        ax_r.plot(s.t, to_degrees(s.r), label=s.label, **style)

    ax_beta.set_ylabel("sideslip angle [deg]")
    ax_r.set_ylabel("yaw rate [deg/s]")
    ax_r.set_xlabel("time [s]")
    ax_beta.legend(loc="upper right", fontsize="small")
    ax_beta.grid(True, alpha=0.3)
    ax_r.grid(True, alpha=0.3)
    if spec.zoom is not None:
        ax_r.set_xlim(spec.zoom)
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> str:
    """Draw the figure and write it to spec.out_path; returns the path."""
    fig = build_figure(spec)
    try:
        fig.savefig(spec.out_path, dpi=120)
    finally:
        plt.close(fig)
    return spec.out_path
