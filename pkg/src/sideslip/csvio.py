"""File formats: telemetry CSV, estimate CSV, flat config and metrics files.

All files are plain UTF-8 text. Angles are stored in radians unless the
reader is asked to convert from degrees. Floats are written with repr-level
precision ("%.9g" keeps files compact while round-tripping the tests'
tolerances); writes go to a temporary file first and are renamed into
place, so a crashed run never leaves a half-written output.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile

from .estimators import EstimateSeries
from .factors import SparseSystem
from .vehicle import Sample, State

__all__ = [
    "CsvFormatError",
    "SAMPLE_FIELDS",
    "ESTIMATE_FIELDS",
    "read_samples",
    "write_samples",
    "read_estimates",
    "write_estimates",
    "read_config",
    "write_metrics",
    "write_triplets",
]

SAMPLE_FIELDS = ("t", "u", "delta", "yaw_rate", "ay", "beta_gt")
ESTIMATE_FIELDS = ("t", "beta_est", "r_est", "mode", "window_id", "iters")

DEG = math.pi / 180.0


class CsvFormatError(ValueError):
    """Malformed input file; the message carries the file and line number."""


def _fmt(x: float) -> str:
    return format(x, ".9g")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_float(text: str, path: str, line: int, field: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise CsvFormatError(f"{path}:{line}: field {field!r} is not a number: {text!r}") from None


def read_samples(path: str, degrees: bool = False) -> list[Sample]:
    """Read a telemetry CSV; degrees=True converts the angle columns to radians.

    The angle columns are delta, yaw_rate and beta_gt; t, u and ay are
    never converted.
    """
    samples: list[Sample] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SAMPLE_FIELDS:
            raise CsvFormatError(
                f"{path}:1: expected header {','.join(SAMPLE_FIELDS)!r}, got {header!r}"
            )
        t_prev = None
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SAMPLE_FIELDS):
                raise CsvFormatError(
                    f"{path}:{line}: expected {len(SAMPLE_FIELDS)} fields, got {len(row)}"
                )
            t = _parse_float(row[0], path, line, "t")
            u = _parse_float(row[1], path, line, "u")
            delta = _parse_float(row[2], path, line, "delta")
            yaw = _parse_float(row[3], path, line, "yaw_rate")
            ay = _parse_float(row[4], path, line, "ay")
            gt_text = row[5].strip()
            beta_gt = None if gt_text == "" else _parse_float(gt_text, path, line, "beta_gt")
            if degrees:
                delta *= DEG
                yaw *= DEG
                if beta_gt is not None:
                    beta_gt *= DEG
            if t_prev is not None and t <= t_prev:
                raise CsvFormatError(
                    f"{path}:{line}: timestamps must increase strictly, got {t!r} after {t_prev!r}"
                )
            if u <= 0.0:
                raise CsvFormatError(f"{path}:{line}: speed must be positive, got {u!r}")
            try:
                samples.append(Sample(t, u, delta, yaw, ay, beta_gt))
            except ValueError as err:
                raise CsvFormatError(f"{path}:{line}: {err}") from None
            t_prev = t
    if not samples:
        raise CsvFormatError(f"{path}: empty trajectory (header but no data rows)")
    return samples


def write_samples(path: str, samples) -> None:
    lines = [",".join(SAMPLE_FIELDS)]
    for s in samples:
        gt = "" if s.beta_gt is None else _fmt(s.beta_gt)
        lines.append(
            f"{_fmt(s.t)},{_fmt(s.u)},{_fmt(s.delta)},{_fmt(s.phidot_meas)},{_fmt(s.ay_meas)},{gt}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_estimates(path: str, series: EstimateSeries) -> None:
    lines = [",".join(ESTIMATE_FIELDS)]
    for t, s, wid, iters in zip(series.times, series.states, series.window_ids, series.iteration_counts):
        lines.append(f"{_fmt(t)},{_fmt(s.beta)},{_fmt(s.r)},{series.mode},{wid},{iters}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_estimates(path: str) -> EstimateSeries:
    times: list[float] = []
    states: list[State] = []
    window_ids: list[int] = []
    iterations: list[int] = []
    mode = None
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != ESTIMATE_FIELDS:
            raise CsvFormatError(
                f"{path}:1: expected header {','.join(ESTIMATE_FIELDS)!r}, got {header!r}"
            )
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(ESTIMATE_FIELDS):
                raise CsvFormatError(
                    f"{path}:{line}: expected {len(ESTIMATE_FIELDS)} fields, got {len(row)}"
                )
            times.append(_parse_float(row[0], path, line, "t"))
            states.append(
                State(
                    _parse_float(row[1], path, line, "beta_est"),
                    _parse_float(row[2], path, line, "r_est"),
                )
            )
            if mode is None:
                mode = row[3]
            elif row[3] != mode:
                raise CsvFormatError(f"{path}:{line}: mixed modes {mode!r} and {row[3]!r}")
            try:
                window_ids.append(int(row[4]))
                iterations.append(int(row[5]))
            except ValueError:
                raise CsvFormatError(f"{path}:{line}: window_id and iters must be integers") from None
    if mode is None:
        raise CsvFormatError(f"{path}: no data rows")
    try:
        return EstimateSeries(
            times=tuple(times),
            states=tuple(states),
            mode=mode,
            window_ids=tuple(window_ids),
            iteration_counts=tuple(iterations),
        )
    except ValueError as err:
        raise CsvFormatError(f"{path}: {err}") from None


def read_config(path: str) -> dict[str, str]:
    """Read a flat "key = value" file; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise CsvFormatError(f"{path}:{line_no}: expected 'key = value', got {raw.rstrip()!r}")
            out[key.strip()] = value.strip()
    return out


def write_metrics(path: str, entries: dict[str, object]) -> None:
    """Write a flat key = value metrics file (same syntax read_config parses)."""
    lines = []
    for key, value in entries.items():
        if isinstance(value, float):
            value = _fmt(value)
        lines.append(f"{key} = {value}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_triplets(path: str, system: SparseSystem) -> None:
    """Dump a SparseSystem as text: triplets, then rhs, then row kinds."""
    lines = [
        f"# rows {system.nrows} cols {system.ncols} nnz {system.nnz}",
        "# row col value",
    ]
    for i, j, v in zip(system.rows, system.cols, system.vals):
        lines.append(f"{i} {j} {_fmt(v)}")
    lines.append("# rhs: row value")
    for i, b in enumerate(system.rhs):
        lines.append(f"{i} {_fmt(b)}")
    lines.append("# row kinds")
    for i, tag in enumerate(system.row_tags):
        lines.append(f"{i} {tag.value}")
    _atomic_write(path, "\n".join(lines) + "\n")
