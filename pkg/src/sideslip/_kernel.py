"""Selection between the compiled sliding-window kernel and the Python path.

The compiled extension is optional; when it is missing every estimator
falls back to the pure-Python implementation with identical semantics.
"""

from __future__ import annotations

import numpy as np

try:
    from . import _fixedlag as _native
except ImportError:
    _native = None

HAVE_NATIVE = _native is not None


def backend_name() -> str:
    """Name of the sliding-window backend picked at import time."""
    return "native" if HAVE_NATIVE else "python"


def run_fixed_lag_arrays(t, u, delta, zphi, zay, window, params, noise, initial_state, max_iter, tol):
    """Run the compiled kernel over plain arrays; see estimators.run_fixed_lag."""
    if _native is None:
        raise RuntimeError("native kernel is not available in this installation")
    n = len(t)
    beta = np.zeros(n)
    r = np.zeros(n)
    wid = np.zeros(n, dtype=np.int64)
    iters = np.zeros(n, dtype=np.int64)
    try:
        _native.run_windows(
            np.ascontiguousarray(t, dtype=np.float64),
            np.ascontiguousarray(u, dtype=np.float64),
            np.ascontiguousarray(delta, dtype=np.float64),
            np.ascontiguousarray(zphi, dtype=np.float64),
            np.ascontiguousarray(zay, dtype=np.float64),
            int(window),
            params.m, params.Jz, params.Cf, params.Cr, params.lf, params.lr,
            noise.sigma_beta, noise.sigma_r, noise.sigma_phidot, noise.sigma_ay,
            noise.sigma_prior_beta, noise.sigma_prior_r,
            initial_state.beta, initial_state.r,
            float(tol), int(max_iter),
            beta, r, wid, iters,
        )
    except RuntimeError as err:
        from .solver import SingularSystemError

        raise SingularSystemError(str(err)) from None
    return beta, r, wid, iters
