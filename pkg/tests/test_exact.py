import math

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad

from pmelab.errors import DomainError
from pmelab.exact import (BarenblattLocal, BarenblattParams, BarenblattSolution,
                          barenblatt_cell_averages, barenblatt_curvature, barenblatt_eval,
                          barenblatt_mass, barenblatt_residual, fit_curvature, gaussian_heat,
                          heat_reference, observed_order, select_time_exponent, support_radius,
                          support_speed)
from pmelab.field import Field, Grid


def symbolic_residual(m, d):
    """u_t - Laplace(u^m) of the radial profile with exponent 2 beta, simplified."""
    r, t = sp.symbols("r t", positive=True)
    M = sp.Integer(1)
    alpha = sp.Rational(d) / (d * (m - 1) + 2)
    beta = sp.Integer(1) / (d * (m - 1) + 2)
    k = (m - 1) * beta / (2 * m)
    # exp-log form keeps sympy away from sign/abs branches inside the support
    base = sp.log(M - k * r ** 2 / t ** (2 * beta))
    u = t ** (-alpha) * sp.exp(base / (m - 1))
    w = t ** (-alpha * m) * sp.exp(m * base / (m - 1))
    lap = sp.diff(w, r, 2) + (d - 1) / r * sp.diff(w, r)
    return sp.lambdify((r, t), sp.diff(u, t) - lap), sp.lambdify((r, t), u)


@pytest.mark.parametrize("m,d", [(sp.Integer(2), 1), (sp.Rational(3, 2), 2), (sp.Integer(3), 1)])
def test_profile_solves_pme_inside_support(m, d):
    res, u = symbolic_residual(m, d)
    prm = BarenblattParams(m=float(m), d=d)
    for t in (1.0, 1.7):
        R = support_radius(prm, t)
        for r in np.linspace(0.05, 0.9, 7) * R:
            assert abs(res(r, t)) < 1e-11
            x = np.zeros(d)
            x[0] = r
            assert barenblatt_eval(prm, x, t) == pytest.approx(u(r, t), rel=1e-13)


def test_curvature_m2_d1():
    assert barenblatt_curvature(2.0, 1) == pytest.approx(1.0 / 12.0, rel=1e-15)


def test_support_and_speed():
    prm = BarenblattParams(m=2.0)
    # R(t) = sqrt(12) t^(1/3) for m = 2, d = 1
    assert support_radius(prm, 8.0) == pytest.approx(math.sqrt(12.0) * 2.0, rel=1e-14)
    t, e = 1.3, 1e-6
    fd = (support_radius(prm, t + e) - support_radius(prm, t - e)) / (2 * e)
    assert support_speed(prm, t) == pytest.approx(fd, rel=1e-8)
    assert barenblatt_eval(prm, [support_radius(prm, 1.0) * 1.0001], 1.0) == 0.0


@pytest.mark.parametrize("m,d", [(2.0, 1), (1.5, 1), (3.0, 1), (2.0, 2), (1.5, 3)])
def test_mass_against_quadrature(m, d):
    prm = BarenblattParams(m=m, d=d, M=0.7)
    t = 1.4
    R = support_radius(prm, t)
    omega = 2 * math.pi ** (d / 2) / math.gamma(d / 2)
    val, _ = quad(lambda r: omega * r ** (d - 1) * barenblatt_eval(prm, np.r_[r, [0.0] * (d - 1)], t),
                  0.0, R, epsabs=1e-14, epsrel=1e-13, limit=200)
    assert barenblatt_mass(prm, t) == pytest.approx(val, rel=1e-9)
    # mass is conserved in time
    assert barenblatt_mass(prm, 3.0) == pytest.approx(barenblatt_mass(prm, 1.0), rel=1e-13)


def test_with_height():
    prm = BarenblattParams(m=2.0).with_height(0.3, 1.5)
    assert barenblatt_eval(prm, [0.0], 1.5) == pytest.approx(0.3, rel=1e-14)


def test_rejects_nonpositive_time():
    with pytest.raises(DomainError):
        barenblatt_eval(BarenblattParams(m=2.0), [0.0], 0.0)
    assert barenblatt_eval(BarenblattParams(m=2.0, t_offset=1.0), [0.0], 0.0) > 0


def test_local_evaluator_matches_direct():
    prm = BarenblattParams(m=1.5)
    loc = BarenblattLocal(prm, x0=[0.7], t0=1.2)
    dx = np.array([[-0.01], [0.0], [0.02]])
    direct = barenblatt_eval(prm, 0.7 + dx, 1.2 + 0.003)
    assert loc(dx, 0.003) == pytest.approx(direct, rel=1e-12)


def test_front_evaluator_resolves_tiny_offsets():
    prm = BarenblattParams(m=2.0)
    sol = BarenblattSolution(prm)
    loc = sol.local(None, 1.0, on_front=True)
    # just inside the front u ~ (2 k R / tau^e) s / M^0 to first order for m = 2
    s = 1e-12
    val = loc(np.array([[-s]]), 0.0)[0]
    R = support_radius(prm, 1.0)
    assert val == pytest.approx(2 * prm.k * R * s, rel=1e-6)
    assert loc(np.array([[s]]), 0.0)[0] == 0.0


def test_residual_oracle_selects_double_beta():
    e, table = select_time_exponent(2.0)
    assert e == pytest.approx(2.0 / 3.0)
    # printed beta leaves an O(1) residual
    wrong = table[1.0 / 3.0]
    assert min(wrong) > 1e-2
    assert min(observed_order(table[e], [1 / 128, 1 / 256, 1 / 512])) > 1.8


def test_fit_curvature_recovers_k():
    assert fit_curvature(2.0, n=512) == pytest.approx(1.0 / 12.0, rel=0.01)


def test_residual_converges_second_order():
    prm = BarenblattParams(m=2.0)
    res = [barenblatt_residual(prm, n) for n in (256, 512, 1024)]
    assert np.all(observed_order(res, [1, 0.5, 0.25]) > 1.8)


def test_cell_averages_mass():
    prm = BarenblattParams(m=2.0)
    g = Grid.box(1, 200, -5, 5)
    avg = barenblatt_cell_averages(prm, g, 1.0, sub=256)
    assert avg.sum() * g.h == pytest.approx(barenblatt_mass(prm, 1.0), rel=1e-6)


def test_gaussian_heat_solves_heat_equation():
    x = np.array([[0.3], [1.1]])
    t, e = 0.4, 1e-4
    ut = (gaussian_heat(x, t + e) - gaussian_heat(x, t - e)) / (2 * e)
    uxx = (gaussian_heat(x + e, t) - 2 * gaussian_heat(x, t) + gaussian_heat(x - e, t)) / e ** 2
    assert ut == pytest.approx(uxx, rel=1e-5)


def test_heat_reference_converges_to_gaussian():
    errs = []
    for n in (64, 128):
        g = Grid.box(1, n, -8.0, 8.0)
        u0 = Field.from_function(lambda x, t: gaussian_heat(x, 0.0), g, [0.0])
        h = heat_reference(u0, [0.5, 1.0], boundary=lambda x, t: gaussian_heat(x, t),
                           initial_fn=lambda x: gaussian_heat(x, 0.0))
        exact = gaussian_heat(g.points(), 1.0)
        errs.append(np.max(np.abs(h.values[-1] - exact)))
    assert errs[0] < 1e-5
    assert errs[1] < errs[0] / 8


def test_heat_reference_periodic_conserves_mean():
    g = Grid.box(1, 64, 0.0, 1.0)
    u0 = Field.from_function(lambda x, t: 1.0 + np.sin(2 * np.pi * x[:, 0]), g, [0.0])
    h = heat_reference(u0, [0.01], boundary="periodic")
    assert h.values[-1].mean() == pytest.approx(1.0, rel=1e-12)
    decay = math.exp(-4 * math.pi ** 2 * 0.01)
    assert np.max(h.values[-1]) - 1.0 == pytest.approx(decay * np.max(u0.values[0] - 1), rel=1e-3)
