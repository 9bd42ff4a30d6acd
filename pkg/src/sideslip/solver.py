"""Sparse weighted least squares via banded normal equations.

The assembled window systems are block-banded with half-bandwidth 3 in the
interleaved column order, so A^T A is factored by a banded Cholesky stored
by diagonals. The same routine handles any triplet system; the bandwidth is
taken from the actual sparsity pattern.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .factors import SparseSystem, WindowProblem, assemble
from .vehicle import State

__all__ = ["SingularSystemError", "SolveReport", "solve_wls", "gauss_newton"]

# A pivot of the factored normal matrix below this fraction of the largest
# initial diagonal entry is treated as rank deficiency.
PIVOT_RTOL = 1e-12


class SingularSystemError(RuntimeError):
    """Raised when the normal equations are numerically rank deficient."""


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one Gauss-Newton run.

    delta is the last correction applied, final_update_norm its infinity
    norm, and residual_norm the 2-norm of A delta - rhs of the last system.
    """

    delta: np.ndarray
    iterations: int
    final_update_norm: float
    residual_norm: float


def _band_normal_equations(system: SparseSystem):
    """Accumulate A^T A (banded, by diagonals) and A^T rhs from triplets.

    band[d, j] holds entry (j + d, j) of A^T A. Triplets are processed in
    (row, col) order so the accumulation order is reproducible regardless
    of the order they were emitted in.
    """
    n = system.ncols
    order = np.lexsort((system.cols, system.rows))
    rows = system.rows[order]
    cols = system.cols[order]
    vals = system.vals[order]
    rhs = system.rhs

    starts = np.flatnonzero(np.r_[True, rows[1:] != rows[:-1]])
    ends = np.r_[starts[1:], len(rows)]
    hbw = 0
    for s, e in zip(starts, ends):
        hbw = max(hbw, int(cols[e - 1] - cols[s]))

    band = np.zeros((hbw + 1, n))
    y = np.zeros(n)
    for s, e in zip(starts, ends):
        b = rhs[rows[s]]
        for a in range(s, e):
            y[cols[a]] += vals[a] * b
        for a in range(s, e):
            ca, va = cols[a], vals[a]
            for c in range(a, e):
                band[cols[c] - ca, ca] += va * vals[c]
    return band, y


def _cholesky_band(band: np.ndarray, pivot_floor: float):
    """In-place banded Cholesky (lower triangle, stored by diagonals).

    Raises SingularSystemError naming the offending pivot when one falls to
    or below pivot_floor.
    """
    w, n = band.shape[0] - 1, band.shape[1]
    for j in range(n):
        ajj = band[0, j]
        for k in range(max(0, j - w), j):
            ajj -= band[j - k, k] * band[j - k, k]
        if ajj <= pivot_floor:
            raise SingularSystemError(
                f"normal equations are rank deficient: pivot {ajj:.6e} at column {j} "
                f"is not above the threshold {pivot_floor:.6e}"
            )
        ljj = np.sqrt(ajj)
        band[0, j] = ljj
        for i in range(j + 1, min(j + w, n - 1) + 1):
            s = band[i - j, j]
            for k in range(max(0, i - w), j):
                s -= band[i - k, k] * band[j - k, k]
            band[i - j, j] = s / ljj


def _solve_band(band: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solve L L^T x = y given the factored band."""
    w, n = band.shape[0] - 1, band.shape[1]
    x = np.zeros(n)
    for i in range(n):
        s = y[i]
        for k in range(max(0, i - w), i):
            s -= band[i - k, k] * x[k]
        x[i] = s / band[0, i]
    out = np.zeros(n)
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, min(i + w, n - 1) + 1):
            s -= band[k - i, i] * out[k]
        out[i] = s / band[0, i]
    return out


def solve_wls(system: SparseSystem) -> np.ndarray:
    """Minimize ||A delta - rhs||_2 through the normal equations.

    The system must have at least as many rows as columns. Rank deficiency
    surfaces as SingularSystemError.
    """
    if system.nrows < system.ncols:
        raise ValueError(f"underdetermined system: {system.nrows} rows < {system.ncols} columns")
    band, y = _band_normal_equations(system)
    pivot_floor = PIVOT_RTOL * float(band[0].max())
    _cholesky_band(band, pivot_floor)
    return _solve_band(band, y)


def _apply_delta(states, delta) -> tuple[State, ...]:
    return tuple(
        State(s.beta + delta[2 * i], s.r + delta[2 * i + 1]) for i, s in enumerate(states)
    )


def _residual_norm(system: SparseSystem, delta: np.ndarray) -> float:
    r = -system.rhs.copy()
    for i, j, v in zip(system.rows, system.cols, system.vals):
        r[i] += v * delta[j]
    return float(np.sqrt(np.dot(r, r)))


def gauss_newton(problem: WindowProblem, max_iter: int = 10, tol: float = 1e-10):
    """Iterate assemble/solve/update until the correction norm drops below tol.

    The model is linear, so the first solve lands on the minimizer and the
    second confirms convergence. Returns the updated states and a
    SolveReport; running out of iterations is reported, not raised.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    states = problem.linearization_states
    for it in range(1, max_iter + 1):
        system = assemble(replace(problem, linearization_states=states))
        delta = solve_wls(system)
        states = _apply_delta(states, delta)
        update_norm = float(np.max(np.abs(delta))) if len(delta) else 0.0
        if update_norm < tol:
            break
    return states, SolveReport(
        delta=delta,
        iterations=it,
        final_update_norm=update_norm,
        residual_norm=_residual_norm(system, delta),
    )
