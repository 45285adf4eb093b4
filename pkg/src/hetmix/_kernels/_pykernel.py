"""Pure-Python RK4 kernels, used when the compiled extension is unavailable.

The same arithmetic runs on Python floats (single trajectories) and on numpy
columns (batches of independent runs); the operation order matches the
compiled kernel so all three paths agree bit for bit.
"""
import numpy as np

CLAMP_TOL = 1e-12
BLOWUP_LOW = -1e-6
BLOWUP_HIGH = 2.0


def rhs(y, c):
    b1, b2, p11, p12, p21, p22, n1, n2, a1, a2, na1, na2, g, mu1, mu2, nmu1, nmu2 = c
    s1, s2, i1, i2, q1, q2 = y[0], y[1], y[2], y[3], y[4], y[5]
    x1 = i1 / n1
    x2 = i2 / n2
    inc1 = s1 * (b1 * (p11 * x1 + p12 * x2))
    inc2 = s2 * (b2 * (p21 * x1 + p22 * x2))
    return (
        -inc1,
        -inc2,
        na1 * inc1 - g * i1,
        na2 * inc2 - g * i2,
        a1 * inc1 - g * q1,
        a2 * inc2 - g * q2,
        g * (i1 + i2) + g * (nmu1 * q1 + nmu2 * q2),
        g * (mu1 * q1 + mu2 * q2),
        a1 * inc1,
        a2 * inc2,
    )


def rk4_update(y, c, dt):
    """One classical RK4 step, no clamping."""
    h2 = 0.5 * dt
    h6 = dt / 6.0
    k1 = rhs(y, c)
    k2 = rhs([y[j] + h2 * k1[j] for j in range(10)], c)
    k3 = rhs([y[j] + h2 * k2[j] for j in range(10)], c)
    k4 = rhs([y[j] + dt * k3[j] for j in range(10)], c)
    return [y[j] + h6 * (((k1[j] + 2.0 * k2[j]) + 2.0 * k3[j]) + k4[j]) for j in range(10)]


def _clamp_scalar(y):
    """Clamp roundoff negatives in place; return False on blow-up."""
    for j in range(10):
        v = y[j]
        if not (BLOWUP_LOW <= v <= BLOWUP_HIGH):
            return False
        if v < 0.0 and v >= -CLAMP_TOL:
            y[j] = 0.0
    return True


def step(y, c, dt):
    """One RK4 step with clamping.  Returns ``(new_state, ok)``."""
    y = rk4_update([float(v) for v in y], [float(v) for v in c], dt)
    ok = _clamp_scalar(y)
    return np.array(y, dtype=np.float64), ok


def integrate(y0, coeffs, dt, n_steps, dt_last, stride):
    """Integrate one run and record every ``stride`` steps plus the endpoint.

    Returns ``(samples, status)``; ``status`` is 0 on success, otherwise the
    1-based index of the step that blew up (``n_steps + 1`` for the trailing
    partial step).
    """
    c = [float(v) for v in coeffs]
    y = [float(v) for v in y0]
    rows = [list(y)]
    for k in range(1, n_steps + 1):
        y = rk4_update(y, c, dt)
        if not _clamp_scalar(y):
            return np.array(rows), k
        if k % stride == 0:
            rows.append(list(y))
    if dt_last > 0.0:
        y = rk4_update(y, c, dt_last)
        if not _clamp_scalar(y):
            return np.array(rows), n_steps + 1
        rows.append(list(y))
    elif n_steps % stride != 0:
        rows.append(list(y))
    return np.array(rows, dtype=np.float64), 0


def integrate_final_batch(Y0, C, dt, n_steps, dt_last, out, status, start, stop):
    """Advance rows ``start:stop`` of ``Y0`` to the horizon, writing ``out``.

    Rows are independent; the whole slice is advanced together as numpy
    columns.  Failed rows get their ``status`` set and NaN output.
    """
    if stop <= start:
        return
    y = [np.array(Y0[start:stop, j], dtype=np.float64) for j in range(10)]
    c = [np.array(C[start:stop, j], dtype=np.float64) for j in range(C.shape[1])]
    failed = np.zeros(stop - start, dtype=np.int64)

    def advance(y, h, k):
        y = rk4_update(y, c, h)
        for j in range(10):
            v = y[j]
            bad = ~((v >= BLOWUP_LOW) & (v <= BLOWUP_HIGH))
            if bad.any():
                newly = bad & (failed == 0)
                failed[newly] = k
            y[j] = np.where((v < 0.0) & (v >= -CLAMP_TOL), 0.0, v)
        return y

    for k in range(1, n_steps + 1):
        y = advance(y, dt, k)
    if dt_last > 0.0:
        y = advance(y, dt_last, n_steps + 1)
    res = np.column_stack(y)
    res[failed != 0] = np.nan
    out[start:stop] = res
    status[start:stop] = failed
