"""Discrete anisotropic L^{p,q} norms over space-time cylinders."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .field import Field

_TOL = 1e-12


@dataclass(frozen=True)
class Cylinder:
    """Ball of ``radius`` about ``center`` times the interval ``[t_start, t_end]``."""

    center: tuple
    radius: float
    t_start: float
    t_end: float


@dataclass(frozen=True)
class MixedNormSpec:
    p: float
    q: float
    region: Cylinder | None = None  # None: whole field

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise DomainError("norm exponents must be >= 1")


def _slice_weights(times, rule):
    t = np.asarray(times, float)
    if t.size == 1:
        return np.ones(1)
    if rule == "trapezoid":
        w = np.zeros_like(t)
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
        return w
    if rule == "midpoint":
        # slices are centres of equal subintervals of the sample spacing
        return np.full(t.size, (t[-1] - t[0]) / (t.size - 1))
    raise DomainError(f"unknown time rule {rule!r}")


def _select(f: Field, region: Cylinder | None):
    g = f.grid
    if region is None:
        return np.ones(g.shape, dtype=bool), np.ones(f.times.size, dtype=bool)
    c = np.atleast_1d(np.asarray(region.center, float))
    if c.size != g.d:
        raise DomainError("region centre has wrong dimension")
    scale = max(1.0, abs(g.lo), abs(g.hi))
    if np.any(c - region.radius < g.lo - _TOL * scale) or np.any(c + region.radius > g.hi + _TOL * scale):
        raise DomainError("region ball exceeds the field's spatial extent")
    tscale = max(1.0, abs(f.times[0]), abs(f.times[-1]))
    if region.t_start < f.times[0] - _TOL * tscale or region.t_end > f.times[-1] + _TOL * tscale:
        raise DomainError("region time interval exceeds the field's time samples")
    r2 = sum((x - ci) ** 2 for x, ci in zip(g.mesh(), c))
    smask = r2 <= region.radius ** 2 * (1 + _TOL)
    tmask = (f.times >= region.t_start - _TOL * tscale) & (f.times <= region.t_end + _TOL * tscale)
    return smask, tmask


def _fsum_pow(a: np.ndarray, e: float) -> float:
    return math.fsum(np.power(a, e).ravel().tolist())


def lpq_norm(f: Field, spec: MixedNormSpec, time_rule: str = "trapezoid") -> float:
    """``( int |int |f|^p dx|^(q/p) dt )^(1/q)`` on the region's samples.

    Inner integral by the midpoint rule on cells whose centre lies in the
    ball; outer by ``time_rule`` over the slices in the interval.
    Infinite exponents take the maximum over samples.
    """
    smask, tmask = _select(f, spec.region)
    vals = np.abs(f.values[tmask][:, smask])
    if vals.size == 0:
        return 0.0
    scale = float(vals.max())
    if scale == 0.0:
        return 0.0
    vals = vals / scale
    p, q = spec.p, spec.q
    vol = f.grid.cell_volume
    if math.isinf(p):
        inner = vals.max(axis=1)
    else:
        inner = np.array([(_fsum_pow(row, p) * vol) ** (1.0 / p) for row in vals])
    if math.isinf(q):
        return scale * float(inner.max())
    w = _slice_weights(f.times[tmask], time_rule)
    return scale * math.fsum((w * inner ** q).tolist()) ** (1.0 / q)


def space_time_lp(f: Field, p: float, region: Cylinder | None = None,
                  time_rule: str = "trapezoid") -> float:
    """Plain space-time ``L^p`` norm with the same quadrature weights."""
    smask, tmask = _select(f, region)
    vals = np.abs(f.values[tmask][:, smask])
    if vals.size == 0:
        return 0.0
    if math.isinf(p):
        return float(vals.max())
    w = _slice_weights(f.times[tmask], time_rule)[:, None] * f.grid.cell_volume
    return math.fsum((w * vals ** p).ravel().tolist()) ** (1.0 / p)


def sup_norm(f: Field) -> float:
    return f.sup
