# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernels for the two-group model.

Mirrors ``_pykernel`` operation for operation; build with
``-ffp-contract=off`` so no fused multiply-add changes the rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport NAN

cnp.import_array()

cdef double CLAMP_TOL = 1e-12
cdef double BLOWUP_LOW = -1e-6
cdef double BLOWUP_HIGH = 2.0


cdef inline void _rhs(const double* y, const double* c, double* out) noexcept nogil:
    cdef double x1 = y[2] / c[6]
    cdef double x2 = y[3] / c[7]
    cdef double inc1 = y[0] * (c[0] * (c[2] * x1 + c[3] * x2))
    cdef double inc2 = y[1] * (c[1] * (c[4] * x1 + c[5] * x2))
    cdef double g = c[12]
    out[0] = -inc1
    out[1] = -inc2
    out[2] = c[10] * inc1 - g * y[2]
    out[3] = c[11] * inc2 - g * y[3]
    out[4] = c[8] * inc1 - g * y[4]
    out[5] = c[9] * inc2 - g * y[5]
    out[6] = g * (y[2] + y[3]) + g * (c[15] * y[4] + c[16] * y[5])
    out[7] = g * (c[13] * y[4] + c[14] * y[5])
    out[8] = c[8] * inc1
    out[9] = c[9] * inc2


cdef inline bint _step(double* y, const double* c, double dt) noexcept nogil:
    """RK4 step plus clamp, in place.  Returns False on blow-up."""
    cdef double k1[10]
    cdef double k2[10]
    cdef double k3[10]
    cdef double k4[10]
    cdef double tmp[10]
    cdef double h2 = 0.5 * dt
    cdef double h6 = dt / 6.0
    cdef int j
    cdef double v
    _rhs(y, c, k1)
    for j in range(10):
        tmp[j] = y[j] + h2 * k1[j]
    _rhs(tmp, c, k2)
    for j in range(10):
        tmp[j] = y[j] + h2 * k2[j]
    _rhs(tmp, c, k3)
    for j in range(10):
        tmp[j] = y[j] + dt * k3[j]
    _rhs(tmp, c, k4)
    for j in range(10):
        y[j] = y[j] + h6 * (((k1[j] + 2.0 * k2[j]) + 2.0 * k3[j]) + k4[j])
    for j in range(10):
        v = y[j]
        if not (BLOWUP_LOW <= v <= BLOWUP_HIGH):
            return False
        if v < 0.0 and v >= -CLAMP_TOL:
            y[j] = 0.0
    return True


cdef long _run(double* y, const double* c, double dt, long n_steps, double dt_last) noexcept nogil:
    cdef long k
    for k in range(1, n_steps + 1):
        if not _step(y, c, dt):
            return k
    if dt_last > 0.0:
        if not _step(y, c, dt_last):
            return n_steps + 1
    return 0


def rhs(y, c):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef double out[10]
    _rhs(&yv[0], &cv[0], out)
    return tuple(out[j] for j in range(10))


def step(y, c, double dt):
    """One RK4 step with clamping.  Returns ``(new_state, ok)``."""
    cdef double[::1] yv = np.array(y, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    cdef bint ok = _step(&yv[0], &cv[0], dt)
    return np.asarray(yv), ok


def integrate(y0, coeffs, double dt, long n_steps, double dt_last, long stride):
    cdef double[::1] y = np.array(y0, dtype=np.float64)
    cdef double[::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef long n_rec = n_steps // stride + 1
    cdef bint tail = dt_last > 0.0 or n_steps % stride != 0
    if tail:
        n_rec += 1
    samples = np.empty((n_rec, 10), dtype=np.float64)
    cdef double[:, ::1] s = samples
    cdef long k, r = 0
    cdef int j
    for j in range(10):
        s[0, j] = y[j]
    r = 1
    with nogil:
        for k in range(1, n_steps + 1):
            if not _step(&y[0], &c[0], dt):
                with gil:
                    return samples[:r].copy(), k
            if k % stride == 0:
                for j in range(10):
                    s[r, j] = y[j]
                r += 1
        if dt_last > 0.0:
            if not _step(&y[0], &c[0], dt_last):
                with gil:
                    return samples[:r].copy(), n_steps + 1
        if tail:
            for j in range(10):
                s[r, j] = y[j]
            r += 1
    return samples, 0


def integrate_final_batch(Y0, C, double dt, long n_steps, double dt_last,
                          out, status, long start, long stop):
    cdef double[:, ::1] y0v = np.ascontiguousarray(Y0, dtype=np.float64)
    cdef double[:, ::1] cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef long[::1] sv = status
    cdef long row, k
    cdef int j
    cdef double y[10]
    with nogil:
        for row in range(start, stop):
            for j in range(10):
                y[j] = y0v[row, j]
            k = _run(y, &cv[row, 0], dt, n_steps, dt_last)
            sv[row] = k
            for j in range(10):
                if k == 0:
                    ov[row, j] = y[j]
                else:
                    ov[row, j] = NAN
