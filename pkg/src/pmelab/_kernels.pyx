# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled explicit stepping loops for the conservative PME scheme.

Semantics match ``pmelab._kernels_py`` exactly; see that module for the
reference implementation.
"""
from libc.math cimport fabs, pow, copysign, isfinite
from libc.stdlib cimport malloc, free


cdef inline double _phi(double u, double m) noexcept nogil:
    if m == 1.0:
        return u
    if m == 2.0:
        return u * fabs(u)
    return copysign(pow(fabs(u), m), u)


cdef inline double _cfl(double maxabs, double m, double h, int d, double safety,
                        double floor) noexcept nogil:
    cdef double q
    if m == 1.0:
        q = 1.0
    else:
        q = pow(maxabs, m - 1.0)
    cdef double fl = floor
    if fl <= 0.0:
        fl = 1e-8 * q if q > 0.0 else 1e-8
    if q < fl:
        q = fl
    return safety * h * h / (2.0 * d * m * q)


def advance_1d(double[::1] u, double[::1] f, double m, double h, double safety,
               double floor, double dt_cap, double t, double t_end, bint periodic,
               double gl, double gr, Py_ssize_t max_steps, double[::1] dts):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t i, k = 0
    cdef double maxabs, dt, rem, lam, a
    cdef double *w = <double *> malloc((n + 2) * sizeof(double))
    if w == NULL:
        raise MemoryError()
    cdef int status = 0
    try:
        with nogil:
            while k < max_steps:
                rem = t_end - t
                if rem <= 0.0:
                    break
                maxabs = 0.0
                for i in range(n):
                    a = fabs(u[i])
                    if not isfinite(a):
                        status = 1
                        break
                    if a > maxabs:
                        maxabs = a
                if status:
                    break
                dt = _cfl(maxabs, m, h, 1, safety, floor)
                if dt > dt_cap:
                    dt = dt_cap
                if dt >= rem:
                    dt = rem
                for i in range(n):
                    w[i + 1] = _phi(u[i], m)
                if periodic:
                    w[0] = w[n]
                    w[n + 1] = w[1]
                else:
                    w[0] = _phi(gl, m)
                    w[n + 1] = _phi(gr, m)
                lam = dt / (h * h)
                for i in range(n):
                    u[i] = u[i] + lam * ((w[i + 2] - w[i + 1]) - (w[i + 1] - w[i])) + dt * f[i]
                if dt == rem:
                    t = t_end
                else:
                    t = t + dt
                dts[k] = dt
                k += 1
    finally:
        free(w)
    return t, k, status


def advance_2d(double[:, ::1] u, double[:, ::1] f, double m, double h, double safety,
               double floor, double dt_cap, double t, double t_end, bint periodic,
               double[::1] gl, double[::1] gr, double[::1] gb, double[::1] gt,
               Py_ssize_t max_steps, double[::1] dts):
    cdef Py_ssize_t nx = u.shape[0], ny = u.shape[1]
    cdef Py_ssize_t i, j, k = 0, s = ny + 2
    cdef double maxabs, dt, rem, lam, a, c
    cdef double *w = <double *> malloc((nx + 2) * (ny + 2) * sizeof(double))
    if w == NULL:
        raise MemoryError()
    cdef int status = 0
    try:
        with nogil:
            while k < max_steps:
                rem = t_end - t
                if rem <= 0.0:
                    break
                maxabs = 0.0
                for i in range(nx):
                    for j in range(ny):
                        a = fabs(u[i, j])
                        if not isfinite(a):
                            status = 1
                        elif a > maxabs:
                            maxabs = a
                if status:
                    break
                dt = _cfl(maxabs, m, h, 2, safety, floor)
                if dt > dt_cap:
                    dt = dt_cap
                if dt >= rem:
                    dt = rem
                for i in range(nx):
                    for j in range(ny):
                        w[(i + 1) * s + j + 1] = _phi(u[i, j], m)
                if periodic:
                    for j in range(ny):
                        w[j + 1] = w[nx * s + j + 1]
                        w[(nx + 1) * s + j + 1] = w[s + j + 1]
                    for i in range(nx):
                        w[(i + 1) * s] = w[(i + 1) * s + ny]
                        w[(i + 1) * s + ny + 1] = w[(i + 1) * s + 1]
                else:
                    for j in range(ny):
                        w[j + 1] = _phi(gl[j], m)
                        w[(nx + 1) * s + j + 1] = _phi(gr[j], m)
                    for i in range(nx):
                        w[(i + 1) * s] = _phi(gb[i], m)
                        w[(i + 1) * s + ny + 1] = _phi(gt[i], m)
                lam = dt / (h * h)
                for i in range(nx):
                    for j in range(ny):
                        c = w[(i + 1) * s + j + 1]
                        u[i, j] = u[i, j] + lam * (
                            ((w[(i + 2) * s + j + 1] - c) - (c - w[i * s + j + 1]))
                            + ((w[(i + 1) * s + j + 2] - c) - (c - w[(i + 1) * s + j]))
                        ) + dt * f[i, j]
                if dt == rem:
                    t = t_end
                else:
                    t = t + dt
                dts[k] = dt
                k += 1
    finally:
        free(w)
    return t, k, status
