"""Comparison figures for sideslip estimation runs.

Consumes the estimator's CSV files (telemetry with ground truth, one
estimate file per mode) and renders a two-panel overlay: sideslip angle
on top in degrees, yaw rate below in degrees per second. The package
talks to the estimator only through those files; it does not import it.
"""

from .render import PlotSpec, Series, build_figure, load_estimates, load_truth, render, to_degrees

__version__ = "0.1.0"

__all__ = [
    "PlotSpec",
    "Series",
    "build_figure",
    "load_estimates",
    "load_truth",
    "render",
    "to_degrees",
    "__version__",
]
