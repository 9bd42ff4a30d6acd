# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled sliding-window solver.

This mirrors the pure-Python window loop operation for operation: same
forward-Euler rollout, same row emission order into the banded normal
equations, same banded Cholesky recurrences and the same convergence test,
so both backends produce the same numbers (the build disables
floating-point contraction to keep the arithmetic order identical).
"""

from libc.math cimport fabs, sqrt

import numpy as np


cdef inline void _add_row(double[:, ::1] band, double[::1] y,
                          int* rc, double* rv, int nent, double bval):
    cdef int a, c
    for a in range(nent):
        y[rc[a]] += rv[a] * bval
    for a in range(nent):
        for c in range(a, nent):
            band[rc[c] - rc[a], rc[a]] += rv[a] * rv[c]


def run_windows(double[::1] t, double[::1] u, double[::1] dl,
                double[::1] zphi, double[::1] zay,
                int window,
                double m_, double jz, double cf, double cr, double lf, double lr,
                double s_b, double s_r, double s_phi, double s_ay,
                double s_pb, double s_pr,
                double beta0, double r0, double tol, int max_iter,
                double[::1] beta_out, double[::1] r_out,
                long[::1] wid_out, long[::1] iters_out):
    """Fill the output arrays with the fixed-lag estimates over all windows."""
    cdef int n = t.shape[0]
    cdef int m = window if window < n else n
    cdef int nloc = 2 * m

    band_arr = np.zeros((4, nloc))
    y_arr = np.zeros(nloc)
    lin_arr = np.zeros(nloc)
    delta_arr = np.zeros(nloc)
    half_arr = np.zeros(nloc)
    cdef double[:, ::1] band = band_arr
    cdef double[::1] y = y_arr
    cdef double[::1] lin = lin_arr
    cdef double[::1] delta = delta_arr
    cdef double[::1] half = half_arr

    cdef double prior_b = beta0
    cdef double prior_r = r0
    cdef int s, i, j, k, it, kmin, imax, i2, g
    cdef double dt, u_, d_, br, rr, pred_b, pred_r, pred_ay
    cdef double ca, cb, cc, cd, db_b, db_r, dr_b, dr_r, ay_b, ay_r
    cdef double ajj, ljj, acc, maxdiag, floor_, upd, bval
    cdef int rc[3]
    cdef double rv[3]

    for s in range(n - m + 1):
        # Linearization: prior guess propagated through the window.
        lin[0] = prior_b
        lin[1] = prior_r
        for i in range(1, m):
            u_ = u[s + i - 1]
            d_ = dl[s + i - 1]
            dt = t[s + i] - t[s + i - 1]
            br = -(cf + cr) / (m_ * u_) * lin[2 * i - 2] \
                - ((cf * lf - cr * lr) / (m_ * u_ * u_) + 1.0) * lin[2 * i - 1] \
                + cf * d_ / (m_ * u_)
            rr = -(cf * lf - cr * lr) / jz * lin[2 * i - 2] \
                - (cf * lf * lf + cr * lr * lr) / (jz * u_) * lin[2 * i - 1] \
                + cf * lf * d_ / jz
            lin[2 * i] = lin[2 * i - 2] + dt * br
            lin[2 * i + 1] = lin[2 * i - 1] + dt * rr

        it = 0
        while True:
            it += 1
            for j in range(nloc):
                y[j] = 0.0
                band[0, j] = 0.0
                band[1, j] = 0.0
                band[2, j] = 0.0
                band[3, j] = 0.0

            # Step 1: prior rows, then the two measurement rows.
            rc[0] = 0
            rv[0] = 1.0 / s_pb
            bval = -(lin[0] - prior_b) / s_pb
            _add_row(band, y, rc, rv, 1, bval)

            rc[0] = 1
            rv[0] = 1.0 / s_pr
            bval = -(lin[1] - prior_r) / s_pr
            _add_row(band, y, rc, rv, 1, bval)

            rc[0] = 1
            rv[0] = 1.0 / s_phi
            bval = (zphi[s] - lin[1]) / s_phi
            _add_row(band, y, rc, rv, 1, bval)

            u_ = u[s]
            ay_b = (cf + cr) / m_
            ay_r = (cf * lf - cr * lr) / (m_ * u_)
            pred_ay = -(cf + cr) / m_ * lin[0] \
                - (cf * lf - cr * lr) / (m_ * u_) * lin[1] \
                + cf * dl[s] / m_
            rc[0] = 0
            rc[1] = 1
            rv[0] = -ay_b / s_ay
            rv[1] = -ay_r / s_ay
            bval = (zay[s] - pred_ay) / s_ay
            _add_row(band, y, rc, rv, 2, bval)

            # Later steps: two dynamic rows, then the two measurement rows.
            for i in range(1, m):
                g = s + i
                u_ = u[g - 1]
                d_ = dl[g - 1]
                dt = t[g] - t[g - 1]
                ca = (cf + cr) / (m_ * u_)
                cb = (cf * lf - cr * lr) / (m_ * u_ * u_) + 1.0
                cc = (cf * lf - cr * lr) / jz
                cd = (cf * lf * lf + cr * lr * lr) / (jz * u_)
                db_b = -(1.0 - dt * ca)
                db_r = dt * cb
                dr_b = dt * cc
                dr_r = -(1.0 - dt * cd)
                br = -(cf + cr) / (m_ * u_) * lin[2 * i - 2] \
                    - ((cf * lf - cr * lr) / (m_ * u_ * u_) + 1.0) * lin[2 * i - 1] \
                    + cf * d_ / (m_ * u_)
                rr = -(cf * lf - cr * lr) / jz * lin[2 * i - 2] \
                    - (cf * lf * lf + cr * lr * lr) / (jz * u_) * lin[2 * i - 1] \
                    + cf * lf * d_ / jz
                pred_b = lin[2 * i - 2] + dt * br
                pred_r = lin[2 * i - 1] + dt * rr

                rc[0] = 2 * i - 2
                rc[1] = 2 * i - 1
                rc[2] = 2 * i
                rv[0] = db_b / s_b
                rv[1] = db_r / s_b
                rv[2] = 1.0 / s_b
                bval = -(lin[2 * i] - pred_b) / s_b
                _add_row(band, y, rc, rv, 3, bval)

                rc[0] = 2 * i - 2
                rc[1] = 2 * i - 1
                rc[2] = 2 * i + 1
                rv[0] = dr_b / s_r
                rv[1] = dr_r / s_r
                rv[2] = 1.0 / s_r
                bval = -(lin[2 * i + 1] - pred_r) / s_r
                _add_row(band, y, rc, rv, 3, bval)

                rc[0] = 2 * i + 1
                rv[0] = 1.0 / s_phi
                bval = (zphi[g] - lin[2 * i + 1]) / s_phi
                _add_row(band, y, rc, rv, 1, bval)

                u_ = u[g]
                ay_b = (cf + cr) / m_
                ay_r = (cf * lf - cr * lr) / (m_ * u_)
                pred_ay = -(cf + cr) / m_ * lin[2 * i] \
                    - (cf * lf - cr * lr) / (m_ * u_) * lin[2 * i + 1] \
                    + cf * dl[g] / m_
                rc[0] = 2 * i
                rc[1] = 2 * i + 1
                rv[0] = -ay_b / s_ay
                rv[1] = -ay_r / s_ay
                bval = (zay[g] - pred_ay) / s_ay
                _add_row(band, y, rc, rv, 2, bval)

            maxdiag = 0.0
            for j in range(nloc):
                if band[0, j] > maxdiag:
                    maxdiag = band[0, j]
            floor_ = 1e-12 * maxdiag

            # Banded Cholesky, half-bandwidth 3, stored by diagonals.
            for j in range(nloc):
                ajj = band[0, j]
                kmin = j - 3
                if kmin < 0:
                    kmin = 0
                for k in range(kmin, j):
                    ajj -= band[j - k, k] * band[j - k, k]
                if ajj <= floor_:
                    raise RuntimeError(
                        "window %d (samples %d..%d): normal equations are rank "
                        "deficient: pivot %.6e at column %d is not above the "
                        "threshold %.6e" % (s, s, s + m - 1, ajj, j, floor_)
                    )
                ljj = sqrt(ajj)
                band[0, j] = ljj
                imax = j + 3
                if imax > nloc - 1:
                    imax = nloc - 1
                for i2 in range(j + 1, imax + 1):
                    acc = band[i2 - j, j]
                    kmin = i2 - 3
                    if kmin < 0:
                        kmin = 0
                    for k in range(kmin, j):
                        acc -= band[i2 - k, k] * band[j - k, k]
                    band[i2 - j, j] = acc / ljj

            for i2 in range(nloc):
                acc = y[i2]
                kmin = i2 - 3
                if kmin < 0:
                    kmin = 0
                for k in range(kmin, i2):
                    acc -= band[i2 - k, k] * half[k]
                half[i2] = acc / band[0, i2]
            for i2 in range(nloc - 1, -1, -1):
                acc = half[i2]
                imax = i2 + 3
                if imax > nloc - 1:
                    imax = nloc - 1
                for k in range(i2 + 1, imax + 1):
                    acc -= band[k - i2, i2] * delta[k]
                delta[i2] = acc / band[0, i2]

            upd = 0.0
            for j in range(nloc):
                lin[j] += delta[j]
                if fabs(delta[j]) > upd:
                    upd = fabs(delta[j])
            if upd < tol or it >= max_iter:
                break

        if s < n - m:
            beta_out[s] = lin[0]
            r_out[s] = lin[1]
            wid_out[s] = s
            iters_out[s] = it
            if m >= 2:
                prior_b = lin[2]
                prior_r = lin[3]
            else:
                u_ = u[s]
                d_ = dl[s]
                dt = t[s + 1] - t[s]
                br = -(cf + cr) / (m_ * u_) * lin[0] \
                    - ((cf * lf - cr * lr) / (m_ * u_ * u_) + 1.0) * lin[1] \
                    + cf * d_ / (m_ * u_)
                rr = -(cf * lf - cr * lr) / jz * lin[0] \
                    - (cf * lf * lf + cr * lr * lr) / (jz * u_) * lin[1] \
                    + cf * lf * d_ / jz
                prior_b = lin[0] + dt * br
                prior_r = lin[1] + dt * rr
        else:
            for i in range(m):
                beta_out[s + i] = lin[2 * i]
                r_out[s + i] = lin[2 * i + 1]
                wid_out[s + i] = s
                iters_out[s + i] = it
