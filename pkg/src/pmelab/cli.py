"""Command-line orchestration: ``pmelab <subcommand> ...``.

Exit codes: 0 success, 2 validation, 3 numerical failure, 4 I/O.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .errors import CFLViolation, DomainError, NumericalFailure
from .exact import (BarenblattParams, barenblatt_cell_averages, barenblatt_eval, observed_order)
from .exponents import (ExponentConfig, barenblatt_exponents, localization_margin, q_lower_bound,
                        sigma_of, universal_rho_delta, violated_conditions)
from .field import Field, Grid, load_snapshot, save_snapshot
from .norms import Cylinder, MixedNormSpec, lpq_norm
from .regularity import (detect_zero_set, estimate_exponent, cascade_check,
                         free_boundary_points)
from .scaling import ScalingParams, rescale_field
from .solver import mass, solve
from .svg import loglog_svg

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def provenance(config_hash: str | None = None) -> dict:
    return {"config_hash": config_hash,
            "versions": {"pmelab": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__}}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def dumps(record: dict) -> str:
    return json.dumps(_clean(record), sort_keys=True, indent=2)


def _emit(record: dict, config_hash=None, path=None):
    record = dict(record)
    record["provenance"] = provenance(config_hash)
    text = dumps(record)
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text + "\n")
    else:
        print(text)
    return record


def _error(kind: str, message: str, details=None, config_hash=None) -> None:
    rec = {"error": kind, "message": message, "details": details or {},
           "provenance": provenance(config_hash)}
    print(dumps(rec), file=sys.stderr)


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


# ---------------------------------------------------------------------------
# subcommands

def cmd_exponents(args) -> int:
    rec = {"m": args.m, "d": args.d}
    if args.m > 1:
        a, b = barenblatt_exponents(args.m, args.d)
        rec["barenblatt"] = {"alpha_B": a, "beta_B": b}
    if args.alpha is not None:
        rec["alpha"] = args.alpha
        rec["sigma"] = sigma_of(args.m, args.alpha)
        rec["universal"] = universal_rho_delta(args.C, args.alpha).__dict__
    if args.p is not None and args.q is not None:
        if not 1.0 < args.m < 2.0:
            raise ConfigError("integrability conditions need 1 < m < 2", {"m": args.m})
        bad = violated_conditions(args.p, args.q, args.m, args.d, args.gamma)
        cfg = ExponentConfig(args.m, args.d, args.alpha or 0.5, args.p, args.q)
        rec.update(p=args.p, q=args.q, q_lower_bound=q_lower_bound(args.p, args.m, args.d, args.gamma),
                   admissible=not bad, violations=bad, p_threshold=args.d / (2.0 - args.m))
        if args.alpha is not None:
            rec["localization_margin"] = localization_margin(args.p, args.q, args.m, args.d,
                                                             args.alpha)
        rec["config"] = cfg.as_dict()
    _emit(rec, path=args.out)
    return EXIT_OK


def cmd_barenblatt(args) -> int:
    prm = BarenblattParams(m=args.m, d=args.d, M=args.M, t_offset=args.t_offset)
    grid = Grid.box(args.d, args.n, args.lo, args.hi)
    pts = grid.points()
    header = {"m": prm.m, "d": prm.d, "M": prm.M, "k": prm.k, "alpha_B": prm.alpha_B,
              "beta_B": prm.beta_B, "time_exponent": prm.time_exponent}
    header["provenance"] = provenance()
    cols = [f"x{i}" for i in range(args.d)] + ["t", "u"]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        fh.write("# " + json.dumps(_clean(header), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for t in args.times:
            u = barenblatt_eval(prm, pts, t)
            for x, val in zip(pts, u):
                w.writerow([repr(float(v)) for v in x] + [repr(float(t)), repr(float(val))])
    _emit({"profile": str(out), **{k: v for k, v in header.items() if k != "provenance"}},
          path=args.json)
    return EXIT_OK


def _parse_float(s: str) -> float:
    return math.inf if s.lower() in ("inf", "infinity") else float(s)


def cmd_norm(args) -> int:
    f = load_snapshot(args.snapshot)
    region = None
    if args.center is not None:
        region = Cylinder(tuple(args.center), args.radius, args.t_start, args.t_end)
    val = lpq_norm(f, MixedNormSpec(args.p, args.q, region), time_rule=args.time_rule)
    _emit({"snapshot": args.snapshot, "p": args.p, "q": args.q, "norm": val,
           "time_rule": args.time_rule,
           "region": None if region is None else region.__dict__}, path=args.out)
    return EXIT_OK


def _solve_config(cfg: ExperimentConfig, n: int | None = None, backend=None) -> Field:
    grid = cfg.make_grid(n)
    problem = cfg.make_problem(grid)
    u = solve(problem, grid, times=cfg.times(grid), safety=float(cfg.grid.get("safety", 0.4)),
              backend=backend)
    u.meta.update(config=cfg.name, config_hash=cfg.digest)
    return u


def _outdir(cfg: ExperimentConfig, override) -> Path:
    return Path(override or cfg.output.get("dir", f"out/{cfg.name}"))


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    admiss = cfg.validate()
    out = _outdir(cfg, args.out_dir)
    u = _solve_config(cfg, backend=args.backend)
    out.mkdir(parents=True, exist_ok=True)
    snap = out / "snapshot.pme"
    save_snapshot(u, snap)
    m0, m1 = mass(u.values[0], u.grid), mass(u.values[-1], u.grid)
    _emit({"snapshot": str(snap), "steps": int(u.dt_schedule.size), "mass_initial": m0,
           "mass_final": m1, "min": float(u.values.min()), "max": float(u.values.max()),
           "admissibility": admiss}, cfg.digest, out / "solve.json")
    return EXIT_OK


def cmd_rescale(args) -> int:
    u = load_snapshot(args.snapshot)
    m = args.m if args.m is not None else u.meta.get("m")
    if m is None:
        raise ConfigError("exponent m not recorded in snapshot; pass --m", {"missing": "m"})
    x0 = tuple(args.x0) if args.x0 is not None else (0.0,) * u.d
    prm = ScalingParams(x0, args.t0, args.a, args.b, float(m))
    v = rescale_field(u, prm)
    save_snapshot(v, args.out)
    norm_factor = prm.source_factor * args.a ** (-u.d / args.p) * args.b ** (-1.0 / args.q)
    _emit({"snapshot": args.out, "gamma": prm.gamma, "source_factor": prm.source_factor,
           "norm_factor": norm_factor, "p": args.p, "q": args.q,
           "params": {"x0": list(x0), "t0": args.t0, "a": args.a, "b": args.b, "m": float(m)}},
          path=args.json)
    return EXIT_OK


def auto_radii(u: Field, point, sigma: float, n: int = 6) -> np.ndarray:
    """Geometric radii from 2h up to what the domain and past time window allow."""
    x0, t0 = point
    lo, hi = u.spatial_hull()
    x0 = np.atleast_1d(x0)
    r_space = float(min(np.min(x0 - lo), np.min(hi - x0), 0.25 * u.grid.extent))
    r_time = max(t0 - float(u.times[0]), 0.0) ** (1.0 / sigma)
    r_min = 2.0 * u.grid.h
    r_max = min(r_space, r_time)
    if r_max <= r_min:
        return np.array([])
    return np.geomspace(r_min, r_max, n)


def auto_points(u: Field, count: int, seed: int) -> list:
    """Deterministic sample of free-boundary points whose time is not the first slice."""
    zs = detect_zero_set(u)
    fb = free_boundary_points(u, zs)
    if fb.size:
        fb = fb[fb[:, -1] > u.times[0] + 0.5 * (u.times[-1] - u.times[0])]
    if not fb.size:
        return []
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(fb), size=min(count, len(fb)), replace=False))
    return [(fb[i, :-1].tolist(), float(fb[i, -1])) for i in pick]


def measure_point(u: Field, point, alpha: float, m: float, N: int, rho=None, radii=None) -> dict:
    sigma = sigma_of(m, alpha) if m > 1 else 2.0
    radii = np.asarray(radii, float) if radii is not None else auto_radii(u, point, sigma)
    rec = {"point": [list(point[0]), point[1]], "alpha": alpha, "m": m, "sigma": sigma}
    try:
        est = estimate_exponent(u, point, radii, sigma)
    except DomainError as exc:
        rec.update(status="insufficient resolution", reason=str(exc), radii=radii.tolist())
        return rec
    rec.update(status="ok", estimate=est.to_dict())
    if rho is None:
        rho = universal_rho_delta(max(1.0, est.C_measured), alpha).rho
    rec["rho"] = rho
    try:
        rec["cascade"] = [lvl.__dict__ for lvl in cascade_check(u, point, rho, alpha, sigma, N)]
    except DomainError as exc:
        rec["cascade"] = []
        rec["cascade_skipped"] = str(exc)
    return rec


def _write_point_outputs(rec: dict, out: Path, idx: int, config_hash=None):
    out.mkdir(parents=True, exist_ok=True)
    _emit(rec, config_hash, out / f"regularity_{idx}.json")
    est = rec.get("estimate")
    if est is None:
        return
    rows = list(zip(est["radii"], est["osc_space"], est["osc_time"]))
    _write_csv(out / f"oscillation_{idx}.csv", ["r", "oscillation", "oscillation_time"], rows)
    svg = loglog_svg([("space", est["radii"], est["osc_space"]),
                      ("time", est["radii"], est["osc_time"])],
                     title=f"point {idx}: alpha_hat = {est['alpha_hat_space']:.3f}")
    (out / f"oscillation_{idx}.svg").write_text(svg)


def _parse_points(spec: str, d: int):
    pts = []
    for chunk in spec.split(";"):
        vals = [float(v) for v in chunk.split(",") if v.strip()]
        if len(vals) != d + 1:
            raise ConfigError(f"probe point {chunk!r} needs {d} space coordinates and a time",
                              {"point": chunk})
        pts.append((vals[:-1], vals[-1]))
    return pts


def cmd_regularity(args) -> int:
    u = load_snapshot(args.snapshot)
    m = args.m if args.m is not None else u.meta.get("m")
    if m is None:
        raise ConfigError("exponent m not recorded in snapshot; pass --m", {"missing": "m"})
    pts = auto_points(u, args.n_points, args.seed) if args.points == "auto" \
        else _parse_points(args.points, u.d)
    out = Path(args.out_dir)
    summary = []
    for i, p in enumerate(pts):
        rec = measure_point(u, p, args.alpha, float(m), args.N, rho=args.rho, radii=args.radii)
        _write_point_outputs(rec, out, i)
        summary.append({"point": rec["point"], "status": rec["status"],
                        "alpha_hat_space": rec.get("estimate", {}).get("alpha_hat_space")})
    _emit({"snapshot": args.snapshot, "points": summary}, path=out / "regularity.json")
    return EXIT_OK


def convergence_study(cfg: ExperimentConfig, backend=None):
    """Space-time L1 and Linf errors against cell averages for each refinement level."""
    prm = cfg.barenblatt()
    rows, finest = [], None
    for n in cfg.refinement:
        u = _solve_config(cfg, n, backend=backend)
        err = np.empty_like(u.values)
        for j, t in enumerate(u.times):
            err[j] = u.values[j] - barenblatt_cell_averages(prm, u.grid, float(t))
        l1 = float(np.max(np.sum(np.abs(err).reshape(len(u.times), -1), axis=1)
                          * u.grid.cell_volume))
        linf = float(np.max(np.abs(err)))
        rows.append({"n": int(n), "h": u.grid.h, "l1": l1, "linf": linf})
        finest = u
    hs = [r["h"] for r in rows]
    o1 = observed_order([r["l1"] for r in rows], hs) if len(rows) > 1 else []
    oi = observed_order([r["linf"] for r in rows], hs) if len(rows) > 1 else []
    for i, r in enumerate(rows):
        r["order_l1"] = float(o1[i - 1]) if i else None
        r["order_linf"] = float(oi[i - 1]) if i else None
    return rows, finest


def run(cfg: ExperimentConfig, out_dir=None, backend=None) -> dict:
    admiss = cfg.validate()
    out = _outdir(cfg, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(cfg.dumps() + "\n")
    summary = {"name": cfg.name, "admissibility": admiss}
    kind = cfg.problem.get("initial", {}).get("kind", "barenblatt")
    if cfg.refinement and kind == "barenblatt":
        rows, u = convergence_study(cfg, backend=backend)
        _write_csv(out / "convergence.csv", ["n", "h", "l1", "linf", "order_l1", "order_linf"],
                   [[r["n"], r["h"], r["l1"], r["linf"],
                     "" if r["order_l1"] is None else r["order_l1"],
                     "" if r["order_linf"] is None else r["order_linf"]] for r in rows])
        summary["convergence"] = rows
    else:
        u = _solve_config(cfg, backend=backend)
    save_snapshot(u, out / "snapshot.pme")
    summary.update(snapshot=str(out / "snapshot.pme"), steps=int(u.dt_schedule.size),
                   mass_initial=mass(u.values[0], u.grid), mass_final=mass(u.values[-1], u.grid))
    probe = cfg.probe or {}
    points = probe.get("points", [])
    if points == "auto":
        points = auto_points(u, int(probe.get("n_points", 3)), cfg.seed)
    else:
        points = [(list(p[:-1]), float(p[-1])) for p in points]
    reports = []
    for i, p in enumerate(points):
        rec = measure_point(u, p, float(probe.get("alpha", 0.9)), cfg.m, int(probe.get("N", 5)),
                            rho=probe.get("rho"), radii=probe.get("radii"))
        _write_point_outputs(rec, out, i, cfg.digest)
        reports.append({"point": rec["point"], "status": rec["status"],
                        "alpha_hat_space": rec.get("estimate", {}).get("alpha_hat_space")})
    summary["regularity"] = reports
    return _emit(summary, cfg.digest, out / "run.json")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    rec = run(cfg, args.out_dir, backend=args.backend)
    if "convergence" in rec:
        print("n,h,l1,linf,order_l1,order_linf")
        for r in rec["convergence"]:
            print(",".join("" if r[k] is None else f"{r[k]:.6g}" if isinstance(r[k], float)
                           else str(r[k]) for k in ("n", "h", "l1", "linf", "order_l1",
                                                    "order_linf")))
    else:
        print(dumps({k: v for k, v in rec.items() if k != "provenance"}))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmelab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exponents", help="derived exponents and integrability checks")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--alpha", type=float)
    p.add_argument("--p", type=_parse_float)
    p.add_argument("--q", type=_parse_float)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--C", type=float, default=1.0, help="approximation constant for rho, delta")
    p.add_argument("--out")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("barenblatt", help="sample Barenblatt profiles to CSV")
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--t-offset", type=float, default=0.0)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--lo", type=float, default=-5.0)
    p.add_argument("--hi", type=float, default=5.0)
    p.add_argument("--times", type=float, nargs="+", default=[1.0])
    p.add_argument("--out", required=True)
    p.add_argument("--json")
    p.set_defaults(func=cmd_barenblatt)

    p = sub.add_parser("norm", help="mixed L^{p,q} norm of a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--p", type=_parse_float, required=True)
    p.add_argument("--q", type=_parse_float, required=True)
    p.add_argument("--center", type=float, nargs="+")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--t-start", type=float, default=-1.0)
    p.add_argument("--t-end", type=float, default=0.0)
    p.add_argument("--time-rule", choices=("trapezoid", "midpoint"), default="trapezoid")
    p.add_argument("--out")
    p.set_defaults(func=cmd_norm)

    for name, fn, hlp in (("solve", cmd_solve, "run the solver from a config"),
                          ("run", cmd_run, "solve, detect and measure from a config")):
        p = sub.add_parser(name, help=hlp)
        p.add_argument("config", help="config path or bundled name")
        p.add_argument("--out-dir")
        p.add_argument("--backend", choices=("cython", "numpy"))
        p.set_defaults(func=fn)

    p = sub.add_parser("rescale", help="intrinsic rescaling of a snapshot onto the unit cylinder")
    p.add_argument("snapshot")
    p.add_argument("--x0", type=float, nargs="+")
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--m", type=float)
    p.add_argument("--p", type=_parse_float, default=2.0)
    p.add_argument("--q", type=_parse_float, default=2.0)
    p.add_argument("--out", required=True)
    p.add_argument("--json")
    p.set_defaults(func=cmd_rescale)

    p = sub.add_parser("regularity", help="oscillation-decay report at probe points")
    p.add_argument("snapshot")
    p.add_argument("--points", default="auto", help='"auto" or "x,...,t;x,...,t"')
    p.add_argument("--n-points", type=int, default=3)
    p.add_argument("--radii", type=float, nargs="+")
    p.add_argument("--alpha", type=float, default=0.9)
    p.add_argument("--m", type=float)
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--rho", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_regularity)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _error("validation", str(exc), exc.details)
        return EXIT_VALIDATION
    except DomainError as exc:
        _error("validation", str(exc))
        return EXIT_VALIDATION
    except (CFLViolation, NumericalFailure, FloatingPointError) as exc:
        _error("numerical", str(exc))
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        if isinstance(exc, OSError) or "snapshot" in str(exc):
            _error("io", str(exc))
            return EXIT_IO
        _error("validation", str(exc))
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
