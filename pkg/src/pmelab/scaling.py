"""Intrinsic rescaling of PME solutions and sources, and the normalisation reduction.

``v(x, t) = u(x0 + a x, t0 + b t) / gamma`` solves the same equation when
``gamma = (a^2 / b)^(1/(m-1))``; a source transforms with the factor
``b^(m/(m-1)) / a^(2/(m-1))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .exponents import localization_margin, sigma_of
from .field import Field, Grid
from .norms import MixedNormSpec, lpq_norm


def _check(a, b, m):
    if not (a > 0 and b > 0):
        raise DomainError("dilations a, b must be positive")
    if m <= 1.0:
        raise DomainError("intrinsic scaling needs m > 1 (heat scaling has a free amplitude)")


def _exp_checked(logval: float, what: str) -> float:
    if not -745.0 < logval < 709.0:
        raise DomainError(f"{what} is outside the floating-point range (log = {logval:.4g})")
    return math.exp(logval)


def gamma_of(a: float, b: float, m: float) -> float:
    _check(a, b, m)
    return _exp_checked((2.0 * math.log(a) - math.log(b)) / (m - 1.0), "gamma")


def rescaled_source_factor(a: float, b: float, m: float) -> float:
    _check(a, b, m)
    return _exp_checked((m * math.log(b) - 2.0 * math.log(a)) / (m - 1.0), "source factor")


def cascade_dilations(rho: float, k: int, m: float, alpha: float) -> tuple[float, float]:
    """``(a, b) = (rho^k, rho^(k sigma))`` used at level ``k`` of the oscillation cascade."""
    s = sigma_of(m, alpha)
    return rho ** k, rho ** (k * s)


def norm_transport_exponent(m: float, alpha: float, p: float, q: float, d: int) -> float:
    """Exponent ``e`` with ``||f~||_{Q_1} = rho^(k e) ||f||_{Q_{rho^k}}`` at cascade level ``k``."""
    return localization_margin(p, q, m, d, alpha)


@dataclass(frozen=True)
class ScalingParams:
    x0: tuple
    t0: float
    a: float
    b: float
    m: float

    def __post_init__(self):
        _check(self.a, self.b, self.m)
        object.__setattr__(self, "x0", tuple(np.atleast_1d(np.asarray(self.x0, float)).tolist()))

    @property
    def gamma(self) -> float:
        return gamma_of(self.a, self.b, self.m)

    @property
    def source_factor(self) -> float:
        return rescaled_source_factor(self.a, self.b, self.m)

    def inverse(self) -> "ScalingParams":
        x0 = tuple(-c / self.a for c in self.x0)
        return ScalingParams(x0=x0, t0=-self.t0 / self.b, a=1.0 / self.a, b=1.0 / self.b, m=self.m)

    def image(self, x, t):
        """Map unit-cylinder coordinates to the original ones."""
        x = np.asarray(x, float)
        return np.asarray(self.x0) + self.a * x, self.t0 + self.b * np.asarray(t, float)


def unit_grid(d: int, n: int, lo: float = -1.0, hi: float = 1.0) -> Grid:
    return Grid.box(d, n, lo, hi, t0=-1.0, T=0.0)


def rescale_field(u: Field, params: ScalingParams, grid: Grid | None = None,
                  times=None) -> Field:
    """Materialise ``u(x0 + a x, t0 + b t) / gamma`` on a fresh grid.

    Defaults: the unit box ``[-1, 1]^d`` with ``u``'s cell count and as many
    slices as ``u`` spread over ``[-1, 0]``.  Multilinear resampling, so no
    new extrema are created.
    """
    if len(params.x0) != u.d:
        raise DomainError("scaling centre has wrong dimension")
    grid = grid or unit_grid(u.d, u.grid.n)
    if times is None:
        times = np.linspace(-1.0, 0.0, u.times.size)
    times = np.asarray(times, float)
    pts = grid.points()
    interp = u.interpolator()
    g = params.gamma
    vals = np.empty((times.size,) + grid.shape)
    for j, t in enumerate(times):
        x, s = params.image(pts, t)
        col = interp(x, np.full(len(x), s))
        if np.any(np.isnan(col)):
            raise DomainError("rescaled cylinder leaves the field's sampled domain")
        vals[j] = col.reshape(grid.shape) / g
    meta = dict(u.meta)
    meta.update(scaling={"x0": list(params.x0), "t0": params.t0, "a": params.a, "b": params.b,
                         "gamma": g, "source_factor": params.source_factor})
    return Field(vals, times, grid, meta=meta)


def rescale_source(f, params: ScalingParams):
    """Transformed source: ``factor * f(x0 + a x, t0 + b t)``.

    ``f`` may be a callable ``f(x, t)`` (a callable is returned) or a Field
    (resampled onto the unit grid like :func:`rescale_field`).
    """
    c = params.source_factor
    if isinstance(f, Field):
        out = rescale_field(f, params)
        out.values *= params.gamma * c
        return out

    def ftilde(x, t):
        xi, s = params.image(np.asarray(x, float), t)
        return c * np.asarray(f(xi, s), dtype=float)

    return ftilde


def normalization_factor(u_sup: float, f_norm: float, eps: float, margin: float = 1e-9) -> float:
    """``K`` with ``||u||_inf / K < 1`` and ``||f|| / K < eps``.

    The basic choice is ``(||f|| + ||u||) / eps``; it is raised to at least
    ``||f|| + ||u||`` (so the sup bound holds for ``eps >= 1``) and to at
    least 1 (data are never amplified), then inflated by ``1 + margin``.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    total = f_norm + u_sup
    return (1.0 + margin) * max(1.0, total / min(eps, 1.0))


def normalize(u: Field, f: Field | None, eps: float, p: float = 2.0, q: float = 2.0,
              n: int | None = None, margin: float = 1e-9):
    """Return ``(v, f_tilde)`` with ``v(x,t) = u(K^((m-1)/2) x, t) / K``.

    ``f_tilde = f(K^((m-1)/2) x, t) / K`` is the source ``v`` satisfies.
    Both live on ``[-1, 1]^d`` at ``u``'s times; the dilated box must fit
    inside ``u``'s domain.  ``K`` is stored in ``v.meta["normalization_factor"]``.
    The degenerate case ``u = f = 0`` returns the inputs unchanged.
    """
    m = float(u.meta.get("m", 2.0))
    f_norm = 0.0 if f is None else lpq_norm(f, MixedNormSpec(p, q))
    u_sup = u.sup
    if u_sup == 0.0 and f_norm == 0.0:
        return u, f
    K = normalization_factor(u_sup, f_norm, eps, margin)
    c = K ** ((m - 1.0) / 2.0)
    grid = unit_grid(u.d, n or u.grid.n)
    pts = grid.points()

    def resample(fld: Field) -> Field:
        interp = fld.interpolator()
        vals = np.empty((fld.times.size,) + grid.shape)
        for j, t in enumerate(fld.times):
            col = interp(c * pts, np.full(len(pts), t))
            if np.any(np.isnan(col)):
                raise DomainError(f"dilated box (factor {c:.4g}) exceeds the field's domain")
            vals[j] = col.reshape(grid.shape) / K
        meta = dict(fld.meta)
        meta.update(normalization_factor=K, dilation=c)
        return Field(vals, fld.times.copy(), grid, meta=meta)

    return resample(u), (None if f is None else resample(f))


def denormalize(v: Field, grid: Grid, m: float | None = None) -> Field:
    """Undo :func:`normalize` on ``grid`` (which must lie inside the dilated unit box)."""
    K = float(v.meta["normalization_factor"])
    m = float(v.meta.get("m", 2.0)) if m is None else m
    c = K ** ((m - 1.0) / 2.0)
    interp = v.interpolator()
    pts = grid.points()
    vals = np.empty((v.times.size,) + grid.shape)
    for j, t in enumerate(v.times):
        col = interp(pts / c, np.full(len(pts), t))
        if np.any(np.isnan(col)):
            raise DomainError("target grid exceeds the normalised field's domain")
        vals[j] = K * col.reshape(grid.shape)
    return Field(vals, v.times.copy(), grid, meta={"m": m})
