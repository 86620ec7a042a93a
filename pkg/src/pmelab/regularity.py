"""Measurement harness for the regularity of solutions along their zero level-set.

A *probe* is a function of offsets ``(dx, ds)`` from a base point.  Fields
are probed by multilinear interpolation, analytic solutions either directly
or, when they provide ``local(x0, t0)``, through an offset evaluator that
keeps relative accuracy at radii far below ``|x0|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, asdict

import numpy as np

from .errors import DomainError
from .exponents import sigma_of, universal_rho_delta
from .field import Field

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class IntrinsicCylinder:
    """``B_r(x0)`` times ``(t0 - r^sigma, t0]`` (one-sided) or ``(t0 - r^sigma, t0 + r^sigma)``."""

    center: tuple
    t0: float
    r: float
    sigma: float
    two_sided: bool = False

    @property
    def half_width(self) -> float:
        return self.r ** self.sigma

    @property
    def temporal_extent(self) -> float:
        return (2.0 if self.two_sided else 1.0) * self.half_width

    @property
    def variant(self) -> str:
        return "two-sided" if self.two_sided else "one-sided"


@dataclass
class Probe:
    fn: object
    d: int
    h: float = 0.0
    dt: float = 0.0
    noise: float = 0.0
    bounds: tuple | None = None  # (lo, hi, t_lo, t_hi) of admissible absolute coordinates
    x0: np.ndarray | None = None
    t0: float = 0.0

    def __call__(self, dx, ds):
        return np.asarray(self.fn(dx, ds), dtype=float)

    def contains(self, r: float, t_lo: float, t_hi: float) -> bool:
        if self.bounds is None:
            return True
        lo, hi, tl, th = self.bounds
        tol = 1e-12 * max(1.0, abs(self.t0))
        return (np.all(self.x0 - r >= lo - 1e-12) and np.all(self.x0 + r <= hi + 1e-12)
                and self.t0 + t_lo >= tl - tol and self.t0 + t_hi <= th + tol)


def as_probe(u, x0, t0: float, on_front: bool = False, noise: float | None = None) -> Probe:
    """Wrap a Field, an object with ``local``, or a callable ``u(x, t)`` as an offset probe."""
    x0a = np.atleast_1d(np.asarray(x0, dtype=float)) if x0 is not None else None
    if isinstance(u, Field):
        interp = u.interpolator()
        d = u.d
        x0a = x0a.reshape(d)

        def fn(dx, ds):
            dx = np.asarray(dx, float).reshape(-1, d)
            return interp(x0a + dx, t0 + np.broadcast_to(ds, (dx.shape[0],)))

        lo, hi = u.spatial_hull()
        dts = np.diff(u.times)
        return Probe(fn, d, h=u.grid.h, dt=float(dts.min()) if dts.size else 0.0,
                     noise=EPS * u.sup if noise is None else noise,
                     bounds=(lo, hi, float(u.times[0]), float(u.times[-1])), x0=x0a, t0=t0)
    d = getattr(u, "d", None) or (x0a.size if x0a is not None else 1)
    if hasattr(u, "local"):
        loc = u.local(x0a, t0, on_front=on_front)
        x0a = loc.x0
        return Probe(loc, d, noise=0.0 if noise is None else noise, x0=x0a, t0=t0)
    if not callable(u):
        raise TypeError("cannot probe object of type %r" % type(u))
    x0a = x0a.reshape(d)

    def fn(dx, ds):
        dx = np.asarray(dx, float).reshape(-1, d)
        return np.asarray(u(x0a + dx, t0 + np.broadcast_to(ds, (dx.shape[0],))), dtype=float)

    return Probe(fn, d, noise=0.0 if noise is None else noise, x0=x0a, t0=t0)


def _space_offsets(probe: Probe, r: float, refine: int, n_analytic: int, cap: int = 2049):
    if r == 0.0:
        return np.zeros((1, probe.d))
    if probe.h > 0:
        ns = 2 * int(math.ceil(r / (probe.h / refine))) + 1
    else:
        ns = n_analytic
    ns = max(3, min(ns | 1, cap))
    line = np.linspace(-r, r, ns)
    line[ns // 2] = 0.0
    if probe.d == 1:
        return line.reshape(-1, 1)
    ns2 = min(ns, 257) | 1
    gx = np.linspace(-r, r, ns2)
    X, Y = np.meshgrid(gx, gx, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    pts = pts[np.sum(pts * pts, axis=1) <= r * r]
    ang = np.linspace(0.0, 2.0 * math.pi, 4 * ns2, endpoint=False)
    ring = r * np.column_stack([np.cos(ang), np.sin(ang)])
    return np.vstack([pts, ring])


def _time_offsets(probe: Probe, tau: float, two_sided: bool, refine: int, n_analytic: int,
                  cap: int = 257):
    if tau == 0.0:
        return np.zeros(1)
    if probe.dt > 0:
        nt = int(math.ceil(tau / (probe.dt / refine))) + 1
    else:
        nt = n_analytic
    nt = max(2, min(nt, cap))
    back = np.linspace(-tau, 0.0, nt)
    if not two_sided:
        return back
    return np.concatenate([back, -back[-2::-1]])


def _sup_abs(probe: Probe, cyl: IntrinsicCylinder, mode: str, refine: int, n_analytic: int,
             relative: bool):
    r = cyl.r if mode in ("full", "space") else 0.0
    tau = cyl.half_width if mode in ("full", "time") else 0.0
    t_lo = -tau
    t_hi = tau if cyl.two_sided else 0.0
    if not probe.contains(r, t_lo, t_hi):
        raise DomainError(f"cylinder r={cyl.r:g} (half-width {cyl.half_width:g}) exceeds the domain")
    dx = _space_offsets(probe, r, refine, n_analytic)
    ds = _time_offsets(probe, tau, cyl.two_sided, refine, n_analytic)
    base = float(probe(np.zeros((1, probe.d)), 0.0)[0]) if relative else 0.0
    best = 0.0
    # chunk over time offsets to bound memory
    for s in ds:
        vals = probe(dx, np.full(dx.shape[0], s))
        best = max(best, float(np.max(np.abs(vals - base))))
    return best


def oscillation(u, cyl: IntrinsicCylinder, mode: str = "full", refine: int = 4,
                n_analytic: int = 65, on_front: bool = False) -> float:
    """``sup |u(x, t) - u(x0, t0)|`` over the cylinder.

    ``mode`` restricts to the spatial slice ``t = t0`` (``"space"``) or the
    time segment ``x = x0`` (``"time"``).  Fields are resampled at
    ``refine`` times their resolution inside the cylinder.
    """
    probe = u if isinstance(u, Probe) else as_probe(u, cyl.center, cyl.t0, on_front=on_front)
    return _sup_abs(probe, cyl, mode, refine, n_analytic, relative=True)


def cylinder_sup(u, cyl: IntrinsicCylinder, refine: int = 4, n_analytic: int = 65,
                 on_front: bool = False) -> float:
    """``sup |u|`` over the cylinder."""
    probe = u if isinstance(u, Probe) else as_probe(u, cyl.center, cyl.t0, on_front=on_front)
    return _sup_abs(probe, cyl, "full", refine, n_analytic, relative=False)


# ---------------------------------------------------------------------------
# zero set

@dataclass
class ZeroSet:
    points: np.ndarray          # (N, d + 1): x..., t
    indices: np.ndarray         # (N, d + 1): slice index, cell indices
    tol_zero: float
    crossings: np.ndarray = dc_field(default_factory=lambda: np.zeros((0, 2)))

    def __len__(self):
        return len(self.points)


def detect_zero_set(u: Field, tol_zero: float | None = None, crossings: bool = False) -> ZeroSet:
    """Grid samples with ``|u| <= tol_zero`` (default ``1e-3 ||u||_inf``).

    With ``crossings=True`` also returns sub-cell sign-change locations along
    each spatial axis, found by linear interpolation between neighbours.
    """
    if tol_zero is None:
        tol_zero = 1e-3 * u.sup
    if tol_zero <= 0:
        tol_zero = np.finfo(float).tiny
    mask = np.abs(u.values) <= tol_zero
    idx = np.argwhere(mask)
    c = u.grid.centers
    pts = np.column_stack([c[idx[:, 1 + a]] for a in range(u.d)] + [u.times[idx[:, 0]]]) \
        if idx.size else np.zeros((0, u.d + 1))
    cross = []
    if crossings:
        for ax in range(u.d):
            v = np.moveaxis(u.values, 1 + ax, -1)
            a, b = v[..., :-1], v[..., 1:]
            hit = np.argwhere(a * b < 0)
            for h_ in hit:
                va, vb = a[tuple(h_)], b[tuple(h_)]
                i = h_[-1]
                xs = c[i] + u.grid.h * va / (va - vb)
                rest = list(h_[1:-1])
                coords = [None] * u.d
                coords[ax] = xs
                others = [k for k in range(u.d) if k != ax]
                for k, ri in zip(others, rest):
                    coords[k] = c[ri]
                cross.append(coords + [u.times[h_[0]]])
    cross = np.array(cross, dtype=float).reshape(-1, u.d + 1)
    return ZeroSet(pts, idx, float(tol_zero), cross)


def free_boundary_points(u: Field, zs: ZeroSet) -> np.ndarray:
    """Zero-set samples with at least one spatial neighbour outside the zero set."""
    mask = np.zeros(u.values.shape, dtype=bool)
    if len(zs):
        mask[tuple(zs.indices.T)] = True
    edge = np.zeros_like(mask)
    for ax in range(1, u.values.ndim):
        fwd = np.zeros_like(mask)
        sl_a = [slice(None)] * mask.ndim
        sl_b = [slice(None)] * mask.ndim
        sl_a[ax] = slice(None, -1)
        sl_b[ax] = slice(1, None)
        fwd[tuple(sl_a)] |= mask[tuple(sl_a)] & ~mask[tuple(sl_b)]
        fwd[tuple(sl_b)] |= mask[tuple(sl_b)] & ~mask[tuple(sl_a)]
        edge |= fwd
    idx = np.argwhere(edge)
    c = u.grid.centers
    if not idx.size:
        return np.zeros((0, u.d + 1))
    return np.column_stack([c[idx[:, 1 + a]] for a in range(u.d)] + [u.times[idx[:, 0]]])


# ---------------------------------------------------------------------------
# exponent fits

@dataclass
class ExponentEstimate:
    alpha_hat_space: float
    alpha_hat_time: float
    C_measured: float
    slope_space: float
    slope_time: float
    theta_hat: float
    sigma: float
    radii: np.ndarray
    osc_space: np.ndarray
    osc_time: np.ndarray
    variant: str
    degenerate_space: bool = False
    degenerate_time: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("radii", "osc_space", "osc_time"):
            out[k] = np.asarray(out[k]).tolist()
        return out


def _fit(radii, osc, noise):
    """OLS slope of log osc vs log r after dropping noise-level points from the small end."""
    r = np.asarray(radii, float)
    o = np.asarray(osc, float)
    order = np.argsort(r)
    r, o = r[order], o[order]
    floor = max(10.0 * noise, np.finfo(float).tiny)
    keep = o > floor
    # only trim from the small-radius end
    start = 0
    while start < r.size and not keep[start]:
        start += 1
    if r.size - start < 2 or not np.all(keep[start:]):
        return math.nan, True, start
    slope = np.polyfit(np.log(r[start:]), np.log(o[start:]), 1)[0]
    return float(slope), False, start


def estimate_exponent(u, point, radii, sigma: float, two_sided: bool = False,
                      on_front: bool = False, refine: int = 4, n_analytic: int = 65,
                      cap: float = 1.0) -> ExponentEstimate:
    """Fit Hoelder exponents at ``point = (x0, t0)`` from oscillation decay.

    Spatial probe: ``sup_{B_r(x0)} |u(., t0) - u(x0, t0)|``.  Temporal probe:
    ``sup |u(x0, .) - u(x0, t0)|`` over a window of half-width ``r^sigma``.
    Exponents are the least-squares log-log slopes, capped at ``cap``
    (oscillation without polynomial subtraction cannot resolve exponents
    above 1).  The temporal exponent ``theta_hat`` refers to ``|t - t0|``;
    ``alpha_hat_time = sigma * theta_hat`` is its intrinsic counterpart.
    A fit whose oscillations all sit at noise level is flagged degenerate
    and reports the cap as a lower bound.
    """
    radii = np.sort(np.asarray(radii, float))
    if radii.size < 4 or math.log10(radii[-1] / radii[0]) < 1.5 - 1e-9:
        raise DomainError("need at least 4 radii spanning 1.5 decades")
    x0, t0 = point
    probe = as_probe(u, x0, t0, on_front=on_front)
    osc_s = np.empty(radii.size)
    osc_t = np.empty(radii.size)
    for i, r in enumerate(radii):
        cyl = IntrinsicCylinder(tuple(np.atleast_1d(x0)), t0, r, sigma, two_sided)
        osc_s[i] = _sup_abs(probe, cyl, "space", refine, n_analytic, relative=True)
        osc_t[i] = _sup_abs(probe, cyl, "time", refine, n_analytic, relative=True)
    slope_s, deg_s, start = _fit(radii, osc_s, probe.noise)
    slope_t, deg_t, _ = _fit(radii, osc_t, probe.noise)
    a_s = cap if deg_s else min(cap, slope_s)
    theta_raw = math.nan if deg_t else slope_t / sigma
    theta = cap if deg_t else min(cap, theta_raw)
    kept = radii[start:] if not deg_s else radii
    kept_osc = osc_s[start:] if not deg_s else osc_s
    C = float(np.max(kept_osc / kept ** a_s)) if kept.size else 0.0
    return ExponentEstimate(alpha_hat_space=a_s, alpha_hat_time=sigma * theta, C_measured=C,
                            slope_space=slope_s, slope_time=slope_t, theta_hat=theta,
                            sigma=sigma, radii=radii, osc_space=osc_s, osc_time=osc_t,
                            variant="two-sided" if two_sided else "one-sided",
                            degenerate_space=deg_s, degenerate_time=deg_t)


# ---------------------------------------------------------------------------
# cascade

@dataclass
class CascadeLevel:
    n: int
    radius: float
    half_width: float
    sup: float
    bound: float
    margin: float     # bound / sup (inf when sup == 0)
    status: str       # "pass" | "fail" | "insufficient resolution"

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def cascade_check(u, point, rho: float, alpha: float, sigma: float, N: int,
                  tol_zero: float | None = None, on_front: bool = False, refine: int = 4,
                  n_analytic: int = 65) -> list[CascadeLevel]:
    """Compare ``sup |u|`` over two-sided cylinders of radius ``rho^n`` with ``rho^(n alpha)``.

    Levels whose cylinder leaves the domain or drops below the grid
    spacing (or, for analytic probes, below floating range) are reported
    as ``"insufficient resolution"`` rather than failures.
    """
    if not 0.0 < rho < 0.5:
        raise DomainError("rho must lie in (0, 1/2)")
    x0, t0 = point
    probe = as_probe(u, x0, t0, on_front=on_front)
    u0 = abs(float(probe(np.zeros((1, probe.d)), 0.0)[0]))
    if tol_zero is None:
        tol_zero = 1e-3 * (u.sup if isinstance(u, Field) else 1.0)
    if u0 > tol_zero:
        raise DomainError(f"|u(x0, t0)| = {u0:.3e} exceeds tol_zero = {tol_zero:.3e}")
    out = []
    for n in range(1, N + 1):
        r = rho ** n
        tau = r ** sigma
        cyl = IntrinsicCylinder(tuple(np.atleast_1d(probe.x0)), t0, r, sigma, two_sided=True)
        bound = rho ** (n * alpha)
        resolvable = r > 1e-300 and tau > 1e-300
        if probe.h > 0:
            resolvable = resolvable and r >= probe.h and tau >= probe.dt
        if resolvable and not probe.contains(r, -tau, tau):
            resolvable = False
        if not resolvable:
            out.append(CascadeLevel(n, r, tau, math.nan, bound, math.nan,
                                    "insufficient resolution"))
            continue
        s = _sup_abs(probe, cyl, "full", refine, n_analytic, relative=False)
        margin = math.inf if s == 0.0 else bound / s
        out.append(CascadeLevel(n, r, tau, s, bound, margin, "pass" if s <= bound else "fail"))
    return out


# ---------------------------------------------------------------------------
# caloric approximation

@dataclass
class CaloricGap:
    h: Field
    gap: float
    delta_target: float
    inner_radius: float
    inner_t_start: float

    @property
    def within(self) -> bool:
        return self.gap <= self.delta_target


def caloric_gap(u: Field, delta_target: float, boundary=None, inner: float = 0.9,
                refine: int = 4, backend=None) -> CaloricGap:
    """Distance from ``u`` to the caloric function with its initial and boundary data.

    ``h`` solves the heat equation from ``u``'s first slice; ``boundary``
    defaults to ``u.meta["boundary"]``.  The gap is the sup of ``|u - h|``
    over the inner cylinder: the ball of ``inner`` times the box half-width
    about the box centre, times the final ``inner**2`` fraction of the
    time window.
    """
    from .exact import heat_reference

    bnd = boundary if boundary is not None else u.meta.get("boundary", "dirichlet0")
    if bnd == "oracle":
        raise DomainError("oracle boundary data must be passed explicitly")
    h = heat_reference(u, u.times, boundary=bnd, refine=refine, backend=backend)
    g = u.grid
    half = 0.5 * g.extent
    mid = g.lo + half
    R = inner * half
    r2 = sum((x - mid) ** 2 for x in g.mesh())
    smask = r2 <= R * R * (1 + 1e-12)
    t_lo = u.times[-1] - inner ** 2 * (u.times[-1] - u.times[0])
    tmask = u.times >= t_lo - 1e-12
    diff = np.abs(u.values - h.values)[tmask][:, smask]
    gap = float(diff.max()) if diff.size else 0.0
    return CaloricGap(h=h, gap=gap, delta_target=delta_target, inner_radius=R,
                      inner_t_start=float(t_lo))


# ---------------------------------------------------------------------------
# reports

def interior_vs_boundary_contrast(u, report_pairs, radii, sigma: float, two_sided: bool = False,
                                  on_front: bool = False) -> list[dict]:
    """Fitted exponents at (free-boundary point, interior point) pairs, side by side."""
    rows = []
    for fb, interior in report_pairs:
        e_fb = estimate_exponent(u, fb, radii, sigma, two_sided=two_sided, on_front=on_front)
        e_in = estimate_exponent(u, interior, radii, sigma, two_sided=two_sided)
        rows.append({
            "free_boundary_point": [np.atleast_1d(fb[0]).tolist(), fb[1]],
            "interior_point": [np.atleast_1d(interior[0]).tolist(), interior[1]],
            "alpha_hat_free_boundary": e_fb.alpha_hat_space,
            "alpha_hat_interior": e_in.alpha_hat_space,
            "slope_free_boundary": e_fb.slope_space,
            "slope_interior": e_in.slope_space,
            "contrast": e_fb.alpha_hat_space - e_in.alpha_hat_space,
        })
    return rows


@dataclass
class RegularityReport:
    point: tuple
    radii: list
    oscillations: list
    oscillations_time: list
    alpha_hat_space: float
    alpha_hat_time: float
    theta_hat: float
    C_measured: float
    sigma: float
    variant: str
    rho: float
    alpha: float
    cascade: list
    flags: dict

    def to_dict(self) -> dict:
        d = asdict(self)
        d["point"] = [np.atleast_1d(self.point[0]).tolist(), float(self.point[1])]
        d["cascade"] = [asdict(c) if not isinstance(c, dict) else c for c in self.cascade]
        return _finite(d)


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def regularity_report(u, point, radii, alpha: float, m: float, N: int = 5, rho: float | None = None,
                      sigma: float | None = None, two_sided: bool = False,
                      on_front: bool = False) -> RegularityReport:
    """Exponent fit plus cascade at one point.

    When ``rho`` is not given it comes from ``universal_rho_delta`` with the
    measured constant, clamped below at 1 so that ``rho < 1/2``.
    """
    sigma = sigma_of(m, alpha) if sigma is None else sigma
    est = estimate_exponent(u, point, radii, sigma, two_sided=two_sided, on_front=on_front)
    if rho is None:
        rho = universal_rho_delta(max(1.0, est.C_measured), alpha).rho
    levels = cascade_check(u, point, rho, alpha, sigma, N, on_front=on_front)
    return RegularityReport(
        point=point, radii=est.radii.tolist(), oscillations=est.osc_space.tolist(),
        oscillations_time=est.osc_time.tolist(), alpha_hat_space=est.alpha_hat_space,
        alpha_hat_time=est.alpha_hat_time, theta_hat=est.theta_hat,
        C_measured=est.C_measured, sigma=sigma, variant=est.variant, rho=rho, alpha=alpha,
        cascade=levels,
        flags={"degenerate_space": est.degenerate_space, "degenerate_time": est.degenerate_time,
               "slope_space": est.slope_space, "slope_time": est.slope_time})
