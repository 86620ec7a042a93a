"""Explicit conservative finite-volume solver for ``u_t - Laplace(u^m) = f``.

The nonlinearity is the odd extension ``phi(u) = sign(u) |u|^m`` so that
sign-changing data, whose zero level-sets sit inside the domain, are
handled by the same scheme.  Fluxes of ``phi(u)`` are taken across cell
faces; the update telescopes, so mass changes only through the boundary
and the source.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import kernels
from .errors import CFLViolation, DomainError, NumericalFailure
from .field import Field, Grid

BOUNDARY_KINDS = ("dirichlet0", "periodic")


def phi(u, m: float):
    """Odd power ``sign(u) |u|^m``."""
    u = np.asarray(u, dtype=float)
    return np.copysign(np.abs(u) ** m, u)


@dataclass
class PMEProblem:
    """Exponent, source, initial data and boundary descriptor.

    ``f`` may be ``None``, a constant, an array on the grid, or a callable
    ``f(x, t)``.  ``initial`` may be a Field (first slice used), an array or
    a callable ``u0(x)``.  ``boundary`` is ``"dirichlet0"``, ``"periodic"`` or
    a callable ``g(x, t)`` giving ghost-cell values (oracle Dirichlet).
    """

    m: float
    initial: object
    f: object = None
    boundary: object = "dirichlet0"

    def __post_init__(self):
        if self.m < 1.0:
            raise DomainError(f"m must be >= 1, got {self.m}")
        if not callable(self.boundary) and self.boundary not in BOUNDARY_KINDS:
            raise DomainError(f"unknown boundary {self.boundary!r}")

    def initial_values(self, grid: Grid) -> np.ndarray:
        u0 = self.initial
        if isinstance(u0, Field):
            vals = u0.values[0]
        elif callable(u0):
            vals = np.asarray(u0(grid.points()), dtype=float).reshape(grid.shape)
        else:
            vals = np.asarray(u0, dtype=float)
        if vals.shape != grid.shape:
            raise DomainError(f"initial data shape {vals.shape} != grid {grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise NumericalFailure("initial data not finite")
        return np.array(vals, dtype=float)

    @property
    def source_is_static(self) -> bool:
        return not callable(self.f)

    def source_values(self, grid: Grid, t: float) -> np.ndarray:
        f = self.f
        if f is None:
            return np.zeros(grid.shape)
        if callable(f):
            return np.asarray(f(grid.points(), t), dtype=float).reshape(grid.shape)
        arr = np.broadcast_to(np.asarray(f, dtype=float), grid.shape)
        return np.ascontiguousarray(arr, dtype=float)

    @property
    def boundary_name(self) -> str:
        return "oracle" if callable(self.boundary) else self.boundary


def cfl_dt(u, m: float, h: float, safety: float = 0.4, floor: float | None = None,
           d: int | None = None) -> float:
    """``safety h^2 / (2 d m max(|u|^(m-1), floor))``.

    The default floor is ``1e-8 max|u|^(m-1)``, or ``1e-8`` for ``u == 0``.
    """
    if not 0.0 < safety <= 1.0:
        raise DomainError("safety must lie in (0, 1]")
    u = np.asarray(u, dtype=float)
    d = u.ndim if d is None else d
    maxabs = float(np.max(np.abs(u))) if u.size else 0.0
    q = 1.0 if m == 1.0 else maxabs ** (m - 1.0)
    fl = floor if floor is not None else (1e-8 * q if q > 0.0 else 1e-8)
    return safety * h * h / (2.0 * d * m * max(q, fl))


def _ghost_points(grid: Grid):
    c = grid.centers
    lo_g, hi_g = grid.lo - 0.5 * grid.h, grid.hi + 0.5 * grid.h
    if grid.d == 1:
        return np.array([[lo_g], [hi_g]])
    ones = np.ones_like(c)
    return (np.column_stack([lo_g * ones, c]), np.column_stack([hi_g * ones, c]),
            np.column_stack([c, lo_g * ones]), np.column_stack([c, hi_g * ones]))


class _Stepper:
    """Binds a problem to a grid and a kernel backend."""

    def __init__(self, problem: PMEProblem, grid: Grid, safety: float, floor, backend):
        self.problem = problem
        self.grid = grid
        self.safety = safety
        self.floor = -1.0 if floor is None else float(floor)
        self.k = kernels.get(backend)
        self.periodic = problem.boundary == "periodic"
        self.oracle = callable(problem.boundary)
        self.gpts = _ghost_points(grid) if self.oracle else None
        if grid.d == 1:
            self.ghosts = (0.0, 0.0)
        else:
            z = np.zeros(grid.n)
            self.ghosts = (z, z, z, z)
        self.f = problem.source_values(grid, grid.t0)
        self.per_step = self.oracle or not problem.source_is_static

    def refresh(self, t: float):
        if self.oracle:
            g = self.problem.boundary
            if self.grid.d == 1:
                vals = np.asarray(g(self.gpts, t), dtype=float).reshape(2)
                self.ghosts = (float(vals[0]), float(vals[1]))
            else:
                self.ghosts = tuple(np.ascontiguousarray(np.asarray(g(p, t), dtype=float))
                                    for p in self.gpts)
        if not self.problem.source_is_static:
            self.f = self.problem.source_values(self.grid, t)

    def advance(self, u, t, t_end, dt_cap, max_steps, dts):
        g = self.grid
        args = (u, self.f, float(self.problem.m), float(g.h), float(self.safety), self.floor,
                float(dt_cap), float(t), float(t_end), bool(self.periodic))
        if g.d == 1:
            return self.k.advance_1d(*args, self.ghosts[0], self.ghosts[1], max_steps, dts)
        return self.k.advance_2d(*args, *self.ghosts, max_steps, dts)


def step_explicit(u, problem: PMEProblem, dt: float, grid: Grid, t: float = 0.0,
                  safety: float = 1.0, backend=None) -> np.ndarray:
    """One forward-Euler step of the conservative scheme; returns a new slice.

    Refuses ``dt`` above ``cfl_dt(u, m, h, safety)``.
    """
    u = np.array(u, dtype=float)
    limit = cfl_dt(u, problem.m, grid.h, safety=safety, d=grid.d)
    if dt > limit * (1.0 + 1e-12):
        raise CFLViolation(f"dt={dt:.3e} exceeds CFL limit {limit:.3e}")
    st = _Stepper(problem, grid, safety=1.0, floor=None, backend=backend)
    st.refresh(t)
    dts = np.empty(1)
    _, k, status = st.advance(u, t, t + dt, dt, 1, dts)
    if status or not np.all(np.isfinite(u)):
        raise NumericalFailure(f"non-finite values after step at t={t}")
    return u


def solve(problem: PMEProblem, grid: Grid, times=None, frames: int = 11,
          safety: float = 0.4, floor: float | None = None, backend=None,
          chunk: int = 65536) -> Field:
    """Evolve from ``grid.t0`` to ``grid.T`` and return the sampled space-time Field.

    Slices are stored at ``times`` (default: ``frames`` evenly spaced
    instants); steps are shortened to land on each.  Every step is gated
    by :func:`cfl_dt` and by ``grid.dt`` when set.  The realised step
    sizes are kept in ``Field.dt_schedule``.
    """
    if times is None:
        times = np.linspace(grid.t0, grid.T, frames)
    times = np.asarray(times, dtype=float)
    if abs(times[0] - grid.t0) > 1e-14 * max(1.0, abs(grid.t0)):
        times = np.concatenate([[grid.t0], times])
    u = problem.initial_values(grid)
    st = _Stepper(problem, grid, safety, floor, backend)
    dt_cap = math.inf if grid.dt is None else grid.dt
    out = [u.copy()]
    sched = []
    t = float(times[0])
    buf = np.empty(1 if st.per_step else chunk)
    for t_out in times[1:]:
        while t < t_out:
            if st.per_step:
                st.refresh(t)
            t_new, k, status = st.advance(u, t, float(t_out), dt_cap, buf.size, buf)
            sched.append(buf[:k].copy())
            if status:
                raise NumericalFailure(f"non-finite values near t={t}")
            t = t_new
        if not np.all(np.isfinite(u)):
            raise NumericalFailure(f"non-finite values at t={t_out}")
        out.append(u.copy())
    sched = np.concatenate(sched) if sched else np.zeros(0)
    return Field(np.stack(out), times, grid, sched,
                 meta={"m": problem.m, "boundary": problem.boundary_name, "safety": safety,
                       "backend": backend or kernels.DEFAULT})


def mass(values, grid: Grid):
    """Midpoint-rule integral of each slice (``values`` may carry a leading time axis)."""
    v = np.asarray(values, dtype=float)
    axes = tuple(range(v.ndim - grid.d, v.ndim))
    return np.sum(v, axis=axes) * grid.cell_volume


# ---------------------------------------------------------------------------
# weak formulation

def _psi(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


def _dpsi(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si)) * (-2.0 * si / (1.0 - si * si) ** 2)
    return out


_PSI_INTEGRAL = quad(lambda s: float(_psi(np.array([s]))[0]), -1.0, 1.0, epsabs=1e-14)[0]


class Bump:
    """Smooth tensor-product bump supported in ``|x_i - c_i| < r``, ``|t - tc| < tau``.

    ``unit=True`` scales it to unit space-time integral.
    """

    def __init__(self, center, radius: float, t_center: float, t_halfwidth: float, unit=False):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.d = self.center.size
        self.radius = float(radius)
        self.t_center = float(t_center)
        self.t_halfwidth = float(t_halfwidth)
        self.scale = 1.0
        if unit:
            vol = (_PSI_INTEGRAL * self.radius) ** self.d * _PSI_INTEGRAL * self.t_halfwidth
            self.scale = 1.0 / vol

    def _parts(self, x, t):
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        s = (x - self.center) / self.radius
        st = (np.asarray(t, dtype=float) - self.t_center) / self.t_halfwidth
        return s, st

    def value(self, x, t):
        s, st = self._parts(x, t)
        return self.scale * np.prod(_psi(s), axis=1) * _psi(st)

    def dt(self, x, t):
        s, st = self._parts(x, t)
        return self.scale * np.prod(_psi(s), axis=1) * _dpsi(st) / self.t_halfwidth

    def grad(self, x, t):
        s, st = self._parts(x, t)
        ps = _psi(s)
        g = np.empty_like(s)
        for i in range(self.d):
            others = np.prod(np.delete(ps, i, axis=1), axis=1) if self.d > 1 else 1.0
            g[:, i] = _dpsi(s[:, i]) / self.radius * others
        return self.scale * g * _psi(st)[..., None]

    def inside(self, lo, hi, t_lo, t_hi) -> bool:
        return (np.all(self.center - self.radius > lo) and np.all(self.center + self.radius < hi)
                and self.t_center - self.t_halfwidth > t_lo
                and self.t_center + self.t_halfwidth < t_hi)


def _trapz_weights(times):
    t = np.asarray(times, dtype=float)
    w = np.zeros_like(t)
    dtt = np.diff(t)
    w[:-1] += 0.5 * dtt
    w[1:] += 0.5 * dtt
    return w


def weak_residual(u: Field, problem: PMEProblem, testfn: Bump) -> float:
    """Discrete pairing ``int int (-u phi_t + grad(u^m) . grad(phi) - f phi)``.

    Space: midpoint rule on cells, with ``grad(u^m)`` as face differences
    paired with ``grad(phi)`` at face centres.  Time: trapezoid over the
    stored slices.
    """
    g = u.grid
    if testfn.d != g.d:
        raise DomainError("test function dimension mismatch")
    if not testfn.inside(g.lo, g.hi, u.times[0], u.times[-1]):
        raise DomainError("test function support must lie strictly inside the field's domain")
    c = g.centers
    faces = c[:-1] + 0.5 * g.h
    pts = g.points()
    wt = _trapz_weights(u.times)
    vol = g.cell_volume
    total = 0.0
    for j, t in enumerate(u.times):
        if wt[j] == 0.0:
            continue
        v = u.values[j]
        w = phi(v, problem.m)
        term = -np.sum(v.ravel() * testfn.dt(pts, t))
        f = problem.source_values(g, t)
        term -= np.sum(f.ravel() * testfn.value(pts, t))
        term *= vol
        if g.d == 1:
            fp = faces.reshape(-1, 1)
            dw = np.diff(w) / g.h
            term += np.sum(dw * testfn.grad(fp, t)[:, 0]) * g.h
        else:
            X, Y = np.meshgrid(faces, c, indexing="ij")
            fx = np.column_stack([X.ravel(), Y.ravel()])
            dwx = (np.diff(w, axis=0) / g.h).ravel()
            term += np.sum(dwx * testfn.grad(fx, t)[:, 0]) * vol
            X, Y = np.meshgrid(c, faces, indexing="ij")
            fy = np.column_stack([X.ravel(), Y.ravel()])
            dwy = (np.diff(w, axis=1) / g.h).ravel()
            term += np.sum(dwy * testfn.grad(fy, t)[:, 1]) * vol
        total += wt[j] * term
    return float(total)


def bump_integral(u: Field, testfn: Bump) -> float:
    """The same quadrature applied to ``phi`` alone."""
    pts = u.grid.points()
    wt = _trapz_weights(u.times)
    return float(sum(wt[j] * np.sum(testfn.value(pts, t)) for j, t in enumerate(u.times))
                 * u.grid.cell_volume)
