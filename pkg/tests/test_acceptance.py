"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import math

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import quad

from conftest import record_acceptance
from pmelab.exact import (BarenblattParams, BarenblattSolution, barenblatt_cell_averages,
                          barenblatt_curvature, barenblatt_eval, barenblatt_field,
                          barenblatt_residual, fit_curvature, observed_order,
                          select_time_exponent, support_radius)
from pmelab.exponents import (admissible, barenblatt_exponents, sigma_of, universal_rho_delta)
from pmelab.field import Field, Grid
from pmelab.norms import MixedNormSpec, lpq_norm, space_time_lp
from pmelab.regularity import caloric_gap, cascade_check, estimate_exponent
from pmelab.scaling import (ScalingParams, cascade_dilations, gamma_of, norm_transport_exponent,
                            rescale_field, rescale_source, rescaled_source_factor, unit_grid)
from pmelab.solver import Bump, PMEProblem, bump_integral, cfl_dt, mass, solve, weak_residual

mp.mp.dps = 40


def rel(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------

def test_criterion_01_exponent_algebra():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        m = float(rng.uniform(1.0001, 3.0))
        d = int(rng.integers(1, 4))
        alpha = float(rng.uniform(1e-3, 0.99))
        a = float(10 ** rng.uniform(-2, 2))
        b = float(10 ** rng.uniform(-2, 2))
        C = float(10 ** rng.uniform(0, 2))
        M, D, A, aa, bb, CC = (mp.mpf(v) for v in (m, d, alpha, a, b, C))
        ex = {
            "sigma": 2 + (1 - M) * A,
            "alpha_B": D / (D * (M - 1) + 2),
            "beta_B": 1 / (D * (M - 1) + 2),
            "gamma": (aa ** 2 / bb) ** (1 / (M - 1)),
            "source": bb ** (M / (M - 1)) / aa ** (2 / (M - 1)),
            "rho": (1 / (2 * CC)) ** (1 / (1 - A)),
        }
        ex["delta"] = ex["rho"] ** A / 2
        u = universal_rho_delta(C, alpha)
        got = {"sigma": sigma_of(m, alpha), "alpha_B": barenblatt_exponents(m, d)[0],
               "beta_B": barenblatt_exponents(m, d)[1], "rho": u.rho, "delta": u.delta}
        # gamma and the source factor overflow as m -> 1; only compare representable values
        if abs(float(mp.log(ex["gamma"]))) < 700 and abs(float(mp.log(ex["source"]))) < 700:
            got["gamma"] = gamma_of(a, b, m)
            got["source"] = rescaled_source_factor(a, b, m)
        for k, v in got.items():
            worst = max(worst, rel(v, float(ex[k])))
    ok = worst <= 1e-12
    record_acceptance(1, "exponent algebra", ok, f"max rel err {worst:.2e} over 1000 inputs (tol 1e-12)")
    assert ok


def test_criterion_02_barenblatt_oracle():
    e, table = select_time_exponent(2.0, 1)
    k_fit = fit_curvature(2.0, n=512)
    k_ok = rel(k_fit, 1 / 12) < 0.01 and barenblatt_curvature(2.0, 1) == pytest.approx(1 / 12)
    prm = BarenblattParams(m=2.0, d=1, time_exponent=e)
    levels = (256, 512, 1024)
    res = [barenblatt_residual(prm, n, t_range=(1.0, 2.0)) for n in levels]
    order = float(np.min(observed_order(res, [1.0 / n for n in levels])))

    def quad_mass(t):
        R = support_radius(prm, t)
        return quad(lambda x: barenblatt_eval(prm, x, t), -R, R, epsabs=1e-14, epsrel=1e-13)[0]

    m1 = quad_mass(1.0)
    drift = max(rel(quad_mass(t), m1) for t in np.linspace(1.0, 2.0, 11))
    ok = abs(e - 2.0 / 3.0) < 1e-15 and k_ok and order >= 1.5 and drift <= 1e-6
    record_acceptance(2, "Barenblatt oracle", ok,
                      f"exponent {e:.6f} (2 beta), k fit {k_fit:.5f}, residual order {order:.2f} "
                      f"(tol 1.5), mass drift {drift:.1e} (tol 1e-6)")
    assert ok


def test_criterion_03_solver_accuracy():
    prm = BarenblattParams(m=2.0)
    bc = lambda x, t: barenblatt_eval(prm, x, t)
    l1, linf, hs = [], [], []
    for n in (256, 512, 1024):
        g = Grid.box(1, n, -5.0, 5.0, t0=1.0, T=2.0)
        u = solve(PMEProblem(2.0, barenblatt_cell_averages(prm, g, 1.0), boundary=bc), g,
                  frames=41)
        err = np.stack([u.values[j] - barenblatt_cell_averages(prm, g, t)
                        for j, t in enumerate(u.times)])
        l1.append(float(np.max(np.sum(np.abs(err), axis=1) * g.h)))
        linf.append(float(np.max(np.abs(err))))
        hs.append(g.h)
    o1 = float(np.min(observed_order(l1, hs)))
    oi = float(np.min(observed_order(linf, hs)))
    ok = o1 >= 0.9 and oi >= 0.5
    record_acceptance(3, "solver accuracy", ok,
                      f"L1 order {o1:.2f} (tol 0.9), Linf order {oi:.2f} (tol 0.5), "
                      f"L1 errors {', '.join(f'{e:.2e}' for e in l1)}")
    assert ok


def random_compact(rng, grid):
    """Random nonnegative data: a few smooth bumps plus rough noise on a compact patch."""
    x = grid.mesh()
    u = np.zeros(grid.shape)
    for _ in range(int(rng.integers(1, 4))):
        c = rng.uniform(-1.0, 1.0, grid.d)
        w = rng.uniform(0.2, 0.6)
        r2 = sum((xi - ci) ** 2 for xi, ci in zip(x, c)) / w ** 2
        u += rng.uniform(0.1, 1.0) * np.maximum(1 - r2, 0.0) ** rng.uniform(0.5, 2.0)
    patch = np.all([np.abs(xi) < 1.2 for xi in x], axis=0)
    u += patch * rng.uniform(0, 0.05, grid.shape) * (rng.uniform() < 0.5)
    return u


def test_criterion_04_conservation_positivity_comparison():
    rng = np.random.default_rng(404)
    drift, lowest = 0.0, math.inf
    for i in range(50):
        d = 1 if i < 40 else 2
        g = Grid.box(d, 128 if d == 1 else 48, -4.0, 4.0, T=float(rng.uniform(0.05, 0.2)))
        m = float(rng.uniform(1.2, 3.0))
        u = solve(PMEProblem(m, random_compact(rng, g)), g, frames=5)
        ms = mass(u.values, g)
        drift = max(drift, float(np.max(np.abs(ms - ms[0])) / ms[0]))
        lowest = min(lowest, float(u.values.min()))
    worst_violation = 0.0
    for _ in range(20):
        g0 = Grid.box(1, 128, -4.0, 4.0, T=0.1)
        m = float(rng.uniform(1.2, 3.0))
        lo = random_compact(rng, g0)
        hi = lo + random_compact(rng, g0)
        # a common step schedule: the CFL step of the larger data binds for both
        g = Grid(1, 128, g0.h, lo=g0.lo, T=0.1, dt=cfl_dt(hi, m, g0.h, safety=0.4))
        a = solve(PMEProblem(m, lo), g, frames=6)
        b = solve(PMEProblem(m, hi), g, frames=6)
        assert np.array_equal(a.dt_schedule, b.dt_schedule)
        worst_violation = max(worst_violation, float(np.max(a.values - b.values)))
    ok = drift <= 1e-10 and lowest >= -1e-14 and worst_violation <= 0.0
    record_acceptance(4, "conservation/positivity/comparison", ok,
                      f"mass drift {drift:.1e} (tol 1e-10), min {lowest:.1e} (tol -1e-14), "
                      f"max(u_lo - u_hi) {worst_violation:.1e} over 20 pairs")
    assert ok


def test_criterion_05_scaling_transport():
    rng = np.random.default_rng(505)
    prm = BarenblattParams(m=2.0)
    bump = Bump((0.0,), 0.6, -0.5, 0.3)
    levels = (64, 128, 256, 512)
    fails, ratios = 0, []
    for _ in range(25):
        t0 = float(rng.uniform(1.6, 2.0))
        a = float(rng.uniform(0.3, 1.0))
        b = float(rng.uniform(0.2, 0.5))
        x0 = support_radius(prm, t0) * float(rng.uniform(0.8, 1.0))
        s = ScalingParams((x0,), t0, a, b, 2.0)
        res = []
        for n in levels:
            u = barenblatt_field(prm, Grid.box(1, 4 * n, 0.0, 7.0), np.linspace(1.0, 2.0, 4 * n + 1))
            v = rescale_field(u, s, unit_grid(1, n), np.linspace(-1.0, 0.0, n + 1))
            res.append(abs(weak_residual(v, PMEProblem(2.0, None), bump)) / bump_integral(v, bump))
        # the signed residual changes sign under refinement, so a coarse level can be
        # accidentally small; require decay of the envelope instead of of every level
        ratios.append(res[-1] / max(res[:-1]))
        if not (res[-1] < res[-2] and res[-1] <= 0.25 * max(res[:-1]) and res[-1] <= 1e-5):
            fails += 1
    # norm transport on constant sources
    worst = 0.0
    for _ in range(25):
        m = float(rng.uniform(1.05, 1.95))
        d = int(rng.integers(1, 3))
        alpha = float(rng.uniform(0.05, 0.95))
        p = d / (2 - m) * float(rng.uniform(1.1, 4.0))
        q = float(rng.uniform(1.0, 60.0))
        rho, k = float(rng.uniform(0.05, 0.45)), int(rng.integers(1, 4))
        a, b = cascade_dilations(rho, k, m, alpha)
        x0, t0 = tuple(rng.uniform(-1, 1, d)), float(rng.uniform(0, 1))
        g = Grid(d, 16, 2 * a / 16, lo=float(x0[0]) - a) if d == 1 else None
        if d == 2:
            x0 = (float(x0[0]),) * 2
            g = Grid(2, 16, 2 * a / 16, lo=x0[0] - a)
        f = Field(np.ones((9,) + g.shape), np.linspace(t0 - b, t0, 9), g)
        ft = rescale_source(f, ScalingParams(x0, t0, a, b, m))
        ratio = lpq_norm(ft, MixedNormSpec(p, q)) / lpq_norm(f, MixedNormSpec(p, q))
        e = math.log(ratio) / math.log(rho ** k)
        worst = max(worst, abs(e - norm_transport_exponent(m, alpha, p, q, d)))
    ok = fails == 0 and worst <= 1e-10
    record_acceptance(5, "scaling transport", ok,
                      f"{25 - fails}/25 weak residuals decay (worst finest/coarse-max "
                      f"{max(ratios):.2f}, tol 0.25), transport exponent max abs err {worst:.1e}")
    assert ok


def test_criterion_06_estimator_calibration():
    errs = {}
    for s in (0.25, 0.5, 0.75, 1.0):
        fn = lambda x, t, s=s: np.abs(x[:, 0]) ** s
        est = estimate_exponent(fn, ((0.0,), 0.0), np.geomspace(1e-4, 1e-1, 6), sigma=1.5)
        g = Grid.box(1, 4097, -1.0, 1.0)
        fld = Field.from_function(fn, g, [0.0, 1.0])
        est_g = estimate_exponent(fld, ((0.0,), 1.0), np.geomspace(8 * g.h, 0.5, 6), sigma=1.5)
        errs[s] = max(abs(est.alpha_hat_space - s), abs(est_g.alpha_hat_space - s))
    worst = max(errs.values())
    ok = worst <= 0.01
    record_acceptance(6, "estimator calibration", ok,
                      "max |alpha_hat - s| = " + f"{worst:.1e} (tol 0.01) for s in 0.25..1 "
                      "(analytic and gridded)")
    assert ok


def test_criterion_07_front_exponents():
    rows, ok = [], True
    for m in (1.1, 1.5, 2.0, 3.0):
        sol = BarenblattSolution(BarenblattParams(m=m))
        R = support_radius(sol.params, 1.0)
        radii = R * np.geomspace(1e-4, 1e-2, 6)
        point = (sol.front_point(1.0), 1.0)
        first = estimate_exponent(sol, point, radii, sigma=2.0, two_sided=True, on_front=True)
        a_hat = first.alpha_hat_space
        sigma = sigma_of(m, min(a_hat, 1 - 1e-6))
        est = estimate_exponent(sol, point, radii, sigma=sigma, two_sided=True, on_front=True)
        target = min(1.0, 1.0 / (m - 1.0))
        space_ok = abs(est.alpha_hat_space - target) <= 0.05
        if m <= 2.0:
            space_ok = space_ok and est.alpha_hat_space >= 0.95
        # the time exponent cannot exceed the space exponent measured in intrinsic units
        ratio = est.alpha_hat_time / sigma
        time_ok = ratio >= est.alpha_hat_space / sigma - 0.1
        ok = ok and space_ok and time_ok
        rows.append(f"m={m}: alpha_hat {est.alpha_hat_space:.3f}, alpha_hat_time/sigma {ratio:.3f}")
    record_acceptance(7, "front exponents", ok, "; ".join(rows))
    assert ok


def test_criterion_08_cascade():
    sol = BarenblattSolution(BarenblattParams(m=1.1))
    x0 = sol.front_point(1.0)
    alpha = 0.9
    sigma = sigma_of(1.1, alpha)
    R = support_radius(sol.params, 1.0)
    est = estimate_exponent(sol, (x0, 1.0), R * np.geomspace(1e-4, 1e-2, 6), sigma=sigma,
                            two_sided=True, on_front=True)
    # the measured constant is tiny at this front; clamping at 1 keeps rho < 1/2
    rho = universal_rho_delta(max(1.0, est.C_measured), alpha).rho
    levels = cascade_check(sol, (x0, 1.0), rho, alpha, sigma, 8, on_front=True)
    resolvable = [lv for lv in levels if lv.status != "insufficient resolution"]
    bar_ok = len(resolvable) >= 5 and all(lv.status == "pass" for lv in resolvable)
    sub = lambda x, t: np.abs(x[:, 0]) ** (alpha / 2)
    sub_levels = cascade_check(sub, ((0.0,), 0.0), rho, alpha, sigma, 4)
    first_fail = next((lv.n for lv in sub_levels if lv.status == "fail"), None)
    ok = bar_ok and first_fail is not None and first_fail <= 4
    record_acceptance(8, "cascade", ok,
                      f"rho {rho:.3e}: Barenblatt {sum(lv.status == 'pass' for lv in levels)}/"
                      f"{len(resolvable)} resolvable levels pass; sub-Hoelder first fails at "
                      f"level {first_fail}")
    assert ok


def test_criterion_09_caloric_gap():
    g = Grid.box(1, 128, -1.0, 1.0, t0=-1.0, T=0.0)
    u0 = lambda x: 0.5 * np.sin(np.pi * x[:, 0])
    ms = (1.5, 1.25, 1.1, 1.01)
    gaps = [caloric_gap(solve(PMEProblem(m, u0), g, frames=51), 0.1).gap for m in ms]
    ok = all(a > b for a, b in zip(gaps, gaps[1:])) and gaps[-1] <= 0.1 * gaps[0]
    record_acceptance(9, "caloric gap", ok,
                      ", ".join(f"gap({m})={v:.2e}" for m, v in zip(ms, gaps))
                      + f", ratio {gaps[-1] / gaps[0]:.3f} (tol 0.1)")
    assert ok


def test_criterion_10_lpq_norm():
    g = Grid.box(1, 400, 0.0, 1.0)
    t = np.linspace(0.0, 1.0, 401)
    f = Field.from_function(lambda x, s: (2 + np.sin(2 * np.pi * x[:, 0])) *
                            (2 + np.cos(2 * np.pi * s)), g, t)
    # int (2+sin)^2 = 9/2, int (2+sin)^4 = 227/8, int (2+cos)^3 = 11, int (2+cos)^2 = 9/2
    closed = {(2, 3): math.sqrt(4.5) * 11 ** (1 / 3), (4, 2): (227 / 8) ** 0.25 * math.sqrt(4.5),
              (2, 2): 4.5, (1, 3): 2 * 11 ** (1 / 3)}
    sep = max(rel(lpq_norm(f, MixedNormSpec(p, q)), v) for (p, q), v in closed.items())
    fc = Field(f.values[::8, ::4], t[::8], Grid.box(1, 100, 0.0, 1.0))
    red = max(rel(lpq_norm(fc, MixedNormSpec(p, p)), space_time_lp(fc, p)) for p in (1, 2, 3.5, 7))
    gate = admissible(5.0, 30.0, 1.5, 2) and not admissible(4.0, 30.0, 1.5, 2)
    ok = sep <= 1e-8 and red <= 1e-10 and gate
    record_acceptance(10, "L^{p,q} norm", ok,
                      f"separable rel err {sep:.1e} (tol 1e-8), p=q reduction {red:.1e} "
                      f"(tol 1e-10), gate (5,30,1.5,2)->True (4,30,1.5,2)->False: {gate}")
    assert ok
