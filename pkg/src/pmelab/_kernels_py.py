"""Pure numpy stepping loops; reference semantics for the compiled kernels."""
import numpy as np


def _phi(u, m):
    if m == 1.0:
        return u.copy()
    if m == 2.0:
        return u * np.abs(u)
    return np.copysign(np.abs(u) ** m, u)


def _cfl(maxabs, m, h, d, safety, floor):
    q = 1.0 if m == 1.0 else maxabs ** (m - 1.0)
    fl = floor
    if fl <= 0.0:
        fl = 1e-8 * q if q > 0.0 else 1e-8
    q = max(q, fl)
    return safety * h * h / (2.0 * d * m * q)


def advance_1d(u, f, m, h, safety, floor, dt_cap, t, t_end, periodic, gl, gr, max_steps, dts):
    n = u.shape[0]
    w = np.empty(n + 2)
    k = 0
    while k < max_steps:
        rem = t_end - t
        if rem <= 0.0:
            break
        a = np.abs(u)
        if not np.all(np.isfinite(a)):
            return t, k, 1
        dt = min(_cfl(float(a.max()), m, h, 1, safety, floor), dt_cap)
        if dt >= rem:
            dt = rem
        w[1:-1] = _phi(u, m)
        if periodic:
            w[0], w[-1] = w[n], w[1]
        else:
            w[0] = _phi(np.array(gl, float), m)
            w[-1] = _phi(np.array(gr, float), m)
        lam = dt / (h * h)
        flux = w[1:] - w[:-1]
        u += lam * (flux[1:] - flux[:-1]) + dt * f
        t = t_end if dt == rem else t + dt
        dts[k] = dt
        k += 1
    return t, k, 0


def advance_2d(u, f, m, h, safety, floor, dt_cap, t, t_end, periodic, gl, gr, gb, gt,
               max_steps, dts):
    nx, ny = u.shape
    w = np.empty((nx + 2, ny + 2))
    k = 0
    while k < max_steps:
        rem = t_end - t
        if rem <= 0.0:
            break
        a = np.abs(u)
        if not np.all(np.isfinite(a)):
            return t, k, 1
        dt = min(_cfl(float(a.max()), m, h, 2, safety, floor), dt_cap)
        if dt >= rem:
            dt = rem
        w[1:-1, 1:-1] = _phi(u, m)
        if periodic:
            w[0, 1:-1] = w[nx, 1:-1]
            w[-1, 1:-1] = w[1, 1:-1]
            w[1:-1, 0] = w[1:-1, ny]
            w[1:-1, -1] = w[1:-1, 1]
        else:
            w[0, 1:-1] = _phi(np.asarray(gl, float), m)
            w[-1, 1:-1] = _phi(np.asarray(gr, float), m)
            w[1:-1, 0] = _phi(np.asarray(gb, float), m)
            w[1:-1, -1] = _phi(np.asarray(gt, float), m)
        lam = dt / (h * h)
        c = w[1:-1, 1:-1]
        fx = w[1:, 1:-1] - w[:-1, 1:-1]
        fy = w[1:-1, 1:] - w[1:-1, :-1]
        u += lam * ((fx[1:] - fx[:-1]) + (fy[:, 1:] - fy[:, :-1])) + dt * f
        t = t_end if dt == rem else t + dt
        dts[k] = dt
        k += 1
    return t, k, 0
