"""Grids, space-time fields and the snapshot container."""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import DomainError, NumericalFailure

SNAPSHOT_MAGIC = b"PMESNAP1\n"


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on the box ``[lo, lo + n h]^d`` and a time window.

    ``dt`` is an upper bound on the time step; the solver further limits
    each step by the CFL gate.
    """

    d: int
    n: int
    h: float
    t0: float = 0.0
    T: float = 1.0
    dt: float | None = None
    lo: float | None = None

    def __post_init__(self):
        if self.d not in (1, 2):
            raise DomainError(f"only d = 1 or 2 supported, got {self.d}")
        if self.n < 3 or self.h <= 0:
            raise DomainError("grid needs n >= 3 cells of positive width")
        if self.lo is None:
            object.__setattr__(self, "lo", -0.5 * self.n * self.h)

    @classmethod
    def box(cls, d, n, lo, hi, t0=0.0, T=1.0, dt=None):
        return cls(d=d, n=n, h=(hi - lo) / n, t0=t0, T=T, dt=dt, lo=lo)

    @property
    def hi(self) -> float:
        return self.lo + self.n * self.h

    @property
    def extent(self) -> float:
        return self.n * self.h

    @property
    def centers(self) -> np.ndarray:
        return self.lo + (np.arange(self.n) + 0.5) * self.h

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    def mesh(self) -> tuple[np.ndarray, ...]:
        """Cell-centre coordinate arrays, one per axis, broadcast to ``shape``."""
        c = self.centers
        return tuple(np.meshgrid(*([c] * self.d), indexing="ij"))

    def points(self) -> np.ndarray:
        """Cell centres as an ``(n**d, d)`` array in row-major order."""
        return np.stack([a.ravel() for a in self.mesh()], axis=-1)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    def to_dict(self) -> dict:
        return {"d": self.d, "n": self.n, "h": self.h, "lo": self.lo, "t0": self.t0,
                "T": self.T, "dt": self.dt}

    @classmethod
    def from_dict(cls, data: dict) -> "Grid":
        return cls(d=int(data["d"]), n=int(data["n"]), h=float(data["h"]),
                   t0=float(data.get("t0", 0.0)), T=float(data.get("T", 1.0)),
                   dt=None if data.get("dt") is None else float(data["dt"]),
                   lo=None if data.get("lo") is None else float(data["lo"]))


@dataclass
class Field:
    """Samples ``values[j, ...]`` of a function at times ``times[j]`` on ``grid``'s cells."""

    values: np.ndarray
    times: np.ndarray
    grid: Grid
    dt_schedule: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.times = np.asarray(self.times, dtype=np.float64).reshape(-1)
        self.dt_schedule = np.asarray(self.dt_schedule, dtype=np.float64).reshape(-1)
        expect = (self.times.size,) + self.grid.shape
        if self.values.shape != expect:
            raise DomainError(f"values shape {self.values.shape} != {expect}")
        if not np.all(np.isfinite(self.values)):
            raise NumericalFailure("field contains non-finite values")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise DomainError("field times must be strictly increasing")

    @classmethod
    def from_function(cls, fn, grid: Grid, times, **meta) -> "Field":
        """Sample ``fn(x, t)`` (``x`` of shape ``(N, d)``) at cell centres."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        pts = grid.points()
        vals = np.empty((times.size,) + grid.shape)
        for j, t in enumerate(times):
            vals[j] = np.asarray(fn(pts, t), dtype=float).reshape(grid.shape)
        return cls(vals, times, grid, meta=dict(meta))

    @property
    def d(self) -> int:
        return self.grid.d

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def slice_at(self, j: int) -> np.ndarray:
        return self.values[j]

    def interpolator(self):
        from scipy.interpolate import RegularGridInterpolator

        axes = (self.times,) + (self.grid.centers,) * self.d
        if self.times.size == 1:
            # single slice: interpolate in space only
            axes_s = (self.grid.centers,) * self.d
            rgi = RegularGridInterpolator(axes_s, self.values[0], method="linear",
                                          bounds_error=False, fill_value=np.nan)
            t_only = self.times[0]

            def single(points, t):
                t = np.broadcast_to(np.asarray(t, float), (len(points),))
                out = rgi(points)
                out[np.abs(t - t_only) > 1e-12 * max(1.0, abs(t_only))] = np.nan
                return out

            return single
        rgi = RegularGridInterpolator(axes, self.values, method="linear",
                                      bounds_error=False, fill_value=np.nan)
        lo = np.array([a[0] for a in axes])
        hi = np.array([a[-1] for a in axes])
        # queries that miss the hull by rounding only are pulled onto it
        slack = 1e-9 * np.array([np.min(np.diff(a)) for a in axes])

        def call(points, t):
            points = np.asarray(points, float).reshape(-1, self.d)
            t = np.broadcast_to(np.asarray(t, float), (len(points),))
            q = np.column_stack([t, points])
            near = (q >= lo - slack) & (q <= hi + slack)
            q = np.where(near, np.clip(q, lo, hi), q)
            return rgi(q)

        return call

    def sample(self, points, t) -> np.ndarray:
        """Multilinear interpolation at ``points`` (shape ``(N, d)``) and times ``t``.

        Raises DomainError when any query falls outside the sampled hull.
        """
        out = self.interpolator()(points, t)
        if np.any(np.isnan(out)):
            raise DomainError("sample point outside the field's sampled region")
        return out

    def spatial_hull(self) -> tuple[float, float]:
        c = self.grid.centers
        return float(c[0]), float(c[-1])

    def copy(self) -> "Field":
        return Field(self.values.copy(), self.times.copy(), self.grid, self.dt_schedule.copy(),
                     dict(self.meta))


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return repr(obj)


def save_snapshot(field: Field, path) -> None:
    """Write ``field`` as magic line, length-prefixed JSON header, then raw float64 blocks.

    Blocks, all little-endian and row-major: times, dt schedule, values.
    """
    header = {
        "format": "pmelab-snapshot",
        "version": 1,
        "grid": field.grid.to_dict(),
        "d": field.grid.d,
        "n": field.grid.n,
        "h": field.grid.h,
        "t0": float(field.times[0]),
        "m": field.meta.get("m"),
        "n_times": int(field.times.size),
        "n_steps": int(field.dt_schedule.size),
        "blocks": ["times", "dt_schedule", "values"],
        "dtype": "<f8",
        "meta": _json_safe(field.meta),
    }
    raw = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        for arr in (field.times, field.dt_schedule, field.values):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_snapshot(path) -> Field:
    data = Path(path).read_bytes()
    if not data.startswith(SNAPSHOT_MAGIC):
        raise ValueError(f"{path}: not a pmelab snapshot")
    off = len(SNAPSHOT_MAGIC)
    (hlen,) = struct.unpack_from("<Q", data, off)
    off += 8
    header = json.loads(data[off:off + hlen].decode())
    off += hlen
    grid = Grid.from_dict(header["grid"])
    nt, ns = header["n_times"], header["n_steps"]
    body = np.frombuffer(data, dtype="<f8", offset=off)
    nv = nt * grid.n ** grid.d
    if body.size != nt + ns + nv:
        raise ValueError(f"{path}: truncated snapshot")
    times = body[:nt].copy()
    sched = body[nt:nt + ns].copy()
    values = body[nt + ns:].reshape((nt,) + grid.shape).copy()
    return Field(values, times, grid, sched, header.get("meta", {}))
