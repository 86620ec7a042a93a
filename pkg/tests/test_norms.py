import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmelab.errors import DomainError
from pmelab.field import Field, Grid
from pmelab.norms import Cylinder, MixedNormSpec, lpq_norm, space_time_lp


def separable(n=400, nt=401):
    # g(x) = 2 + sin(2 pi x) on [0, 1], h(t) = 2 + cos(2 pi t) on [0, 1]:
    # periodic integrands make both quadratures spectrally accurate
    g = Grid.box(1, n, 0.0, 1.0)
    t = np.linspace(0.0, 1.0, nt)
    return Field.from_function(lambda x, s: (2 + np.sin(2 * np.pi * x[:, 0])) *
                               (2 + np.cos(2 * np.pi * s)), g, t)


def test_separable_closed_forms():
    f = separable()
    # int (2 + sin)^2 = 4.5, int (2 + cos)^3 = 11, int (2 + cos)^2 = 4.5
    assert lpq_norm(f, MixedNormSpec(2, 3)) == pytest.approx(math.sqrt(4.5) * 11 ** (1 / 3),
                                                             rel=1e-8)
    assert lpq_norm(f, MixedNormSpec(2, 2)) == pytest.approx(4.5, rel=1e-8)
    # int (2 + sin)^4 = 16 + 6 * 4 * 0.5 + 3/8 = 28.375
    assert lpq_norm(f, MixedNormSpec(4, 2)) == pytest.approx(28.375 ** 0.25 * math.sqrt(4.5),
                                                             rel=1e-8)
    assert lpq_norm(f, MixedNormSpec(math.inf, math.inf)) == pytest.approx(9.0, rel=1e-4)
    assert lpq_norm(f, MixedNormSpec(1, math.inf)) == pytest.approx(2.0 * 3.0, rel=1e-8)


def test_p_equals_q_reduces_to_space_time():
    f = separable(128, 65)
    for p in (1.0, 2.0, 3.5):
        assert lpq_norm(f, MixedNormSpec(p, p)) == pytest.approx(space_time_lp(f, p), rel=1e-10)


def test_region_subset():
    g = Grid.box(1, 200, -1.0, 1.0)
    f = Field.from_function(lambda x, t: np.ones(len(x)), g, np.linspace(0, 1, 11))
    cyl = Cylinder((0.0,), 0.5, 0.2, 0.8)
    assert lpq_norm(f, MixedNormSpec(1, 1, cyl)) == pytest.approx(1.0 * 0.6, rel=1e-12)
    with pytest.raises(DomainError):
        lpq_norm(f, MixedNormSpec(1, 1, Cylinder((0.8,), 0.5, 0.2, 0.8)))
    with pytest.raises(DomainError):
        lpq_norm(f, MixedNormSpec(1, 1, Cylinder((0.0,), 0.5, -0.1, 0.8)))


def test_midpoint_rule_on_constant():
    g = Grid.box(1, 10, 0.0, 1.0)
    f = Field.from_function(lambda x, t: np.ones(len(x)), g, [0.1, 0.3, 0.5])
    assert lpq_norm(f, MixedNormSpec(1, 1), time_rule="midpoint") == pytest.approx(0.6)


def test_extreme_magnitudes_do_not_overflow():
    f = separable(64, 17)
    big = Field(f.values * 1e300, f.times, f.grid)
    tiny = Field(f.values * 1e-300, f.times, f.grid)
    ref = lpq_norm(f, MixedNormSpec(4, 6))
    assert lpq_norm(big, MixedNormSpec(4, 6)) == pytest.approx(ref * 1e300, rel=1e-12)
    assert lpq_norm(tiny, MixedNormSpec(4, 6)) == pytest.approx(ref * 1e-300, rel=1e-12)


def test_bad_exponent():
    with pytest.raises(DomainError):
        MixedNormSpec(0.5, 2)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(1, 20), q=st.floats(1, 20), c=st.floats(1e-3, 1e3), seed=st.integers(0, 99))
def test_homogeneity_and_monotone_in_p(p, q, c, seed):
    rng = np.random.default_rng(seed)
    g = Grid.box(1, 16, 0.0, 1.0)
    f = Field(rng.standard_normal((9, 16)), np.linspace(0, 1, 9), g)
    n1 = lpq_norm(f, MixedNormSpec(p, q))
    scaled = Field(c * f.values, f.times, g)
    assert lpq_norm(scaled, MixedNormSpec(p, q)) == pytest.approx(c * n1, rel=1e-10)
    # unit measure in x and t: norms increase with the exponents
    assert lpq_norm(f, MixedNormSpec(p + 1, q)) >= n1 * (1 - 1e-12)
    assert lpq_norm(f, MixedNormSpec(p, q + 1)) >= n1 * (1 - 1e-12)
