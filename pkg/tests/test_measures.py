import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from shemoments.errors import DivergentJ0
from shemoments.measures import (CustomDensity, InitialMeasure, Tail, atoms, check_j0_finite, dirac,
                                 dirac_derivative, exp_decay, exp_growth, exp_tail_rate, gaussian_bump,
                                 indicator, j0, lebesgue)
from shemoments.special import heat_kernel

mp.mp.dps = 30


def mp_j0(f, nu, t, x, pts=()):
    nu, t, x = mp.mpf(nu), mp.mpf(t), mp.mpf(x)
    g = lambda y: mp.exp(-(x - y) ** 2 / (2 * nu * t)) / mp.sqrt(2 * mp.pi * nu * t) * f(y)
    return float(mp.quad(g, [-mp.inf, *sorted({*pts, x}), mp.inf]))


def test_lebesgue_and_delta():
    assert j0(lebesgue(), 1.0, 0.3, 7.0) == 1.0
    assert j0(lebesgue(), 1.0, 0.3, 7.0, method="quad") == pytest.approx(1.0, rel=1e-10)
    for t, x in [(0.1, 0.0), (1.0, 0.5), (2.0, -3.0)]:
        assert j0(dirac(), 1.0, t, x) == heat_kernel(1.0, t, x)


@pytest.mark.parametrize("mu,f,pts", [
    (exp_decay(1.0), lambda y: mp.exp(-abs(y)), [0]),
    (exp_decay(0.25), lambda y: mp.exp(-abs(y) / 4), [0]),
    (exp_growth(0.5, 1.0), lambda y: mp.exp(abs(y) / 2), [0]),
    (exp_growth(0.2, 2.0), lambda y: mp.exp(y * y / 5), []),
    (gaussian_bump(0.5, 0.3), lambda y: mp.exp(-(y - 0.5) ** 2 / (2 * 0.09)), []),
    (indicator(-1.0, 0.5), lambda y: 1 if -1 <= y <= 0.5 else 0, [-1, 0.5]),
])
@pytest.mark.parametrize("t,x", [(1.0, 0.0), (0.3, 0.8), (2.0, -1.5)])
def test_closed_forms_against_mpmath(mu, f, pts, t, x):
    ref = mp_j0(f, 1.0, t, x, pts)
    assert j0(mu, 1.0, t, x) == pytest.approx(ref, rel=1e-10)
    assert j0(mu, 1.0, t, x, method="quad") == pytest.approx(ref, rel=1e-8)


def test_exp_growth_fractional_power_far_time():
    # e^{|y|^1.5} is admissible at every t; compare with mpmath at moderate t
    mu = exp_growth(1.0, 1.5)
    assert check_j0_finite(mu, 1.0, 100.0, 0.0)
    ref = mp_j0(lambda y: mp.exp(abs(y) ** 1.5), 1.0, 1.0, 0.3, [0])
    assert j0(mu, 1.0, 1.0, 0.3) == pytest.approx(ref, rel=1e-8)


def test_exp_growth_out_of_range_raises():
    with pytest.raises(DivergentJ0):
        j0(exp_growth(1.0, 1.5), 1.0, 100.0, 0.0)


def test_admissibility():
    assert not check_j0_finite(exp_growth(1.0, 2.0), 1.0, 1.0, 0.0)
    assert check_j0_finite(exp_growth(0.2, 2.0), 1.0, 1.0, 0.0)
    assert check_j0_finite(indicator(-1, 1), 1.0, 1e6, 0.0)
    assert check_j0_finite(dirac(), 1.0, 1e-9, 3.0)
    with pytest.raises(DivergentJ0):
        j0(exp_growth(1.0, 2.0), 1.0, 1.0, 0.0)


def test_exp_tail_rate():
    assert exp_tail_rate(dirac()) == math.inf
    assert exp_tail_rate(exp_decay(3.0)) == 3.0
    assert exp_tail_rate(lebesgue()) == 0.0
    assert exp_tail_rate(gaussian_bump(0, 1)) == math.inf
    assert exp_tail_rate(indicator(0, 1) + exp_decay(2.0)) == 2.0
    assert exp_tail_rate(exp_growth(1.0, 1.0)) == 0.0


def test_algebra_and_jordan():
    mu = 2.0 * dirac(1.0) - dirac(-1.0) + 0.5 * exp_decay(1.0) - indicator(0, 1)
    plus, minus = mu.jordan()
    assert plus.is_nonnegative and minus.is_nonnegative
    assert not mu.is_nonnegative
    for t, x in [(0.5, 0.2), (1.5, -1.0)]:
        assert j0(mu, 1.0, t, x) == pytest.approx(j0(plus, 1.0, t, x) - j0(minus, 1.0, t, x), rel=1e-12)
        assert j0(mu, 1.0, t, x, method="quad") == pytest.approx(j0(mu, 1.0, t, x), rel=1e-8, abs=1e-12)
    assert mu.abs().is_nonnegative
    assert (dirac() - dirac()).j0_array(1.0, 1.0, 0.0) == 0.0
    assert atoms([(0, 1), (1, 2)]).is_pure_atomic
    assert dirac().single_atom == (0.0, 1.0)
    assert lebesgue().is_lebesgue and not exp_decay(1).is_lebesgue
    assert exp_decay(1).is_symmetric and not dirac(0.5).is_symmetric


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 3), st.floats(-3, 3))
def test_linearity(a, b, t, x):
    m1, m2 = exp_decay(0.7) + dirac(0.3), indicator(-1, 2)
    lhs = j0(a * m1 + b * m2, 1.0, t, x)
    rhs = a * j0(m1, 1.0, t, x) + b * j0(m2, 1.0, t, x)
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 2), st.floats(0.05, 1), st.floats(-2, 2))
def test_semigroup_consistency(t, s, x):
    mu = exp_decay(1.0) + dirac(0.5)
    nu = 1.0
    sd = math.sqrt(nu * s)
    val, _ = integrate.quad(lambda y: heat_kernel(nu, s, x - y) * j0(mu, nu, t, y), x - 14 * sd, x + 14 * sd,
                            epsrel=1e-10, epsabs=0, limit=200)
    assert val == pytest.approx(j0(mu, nu, t + s, x), rel=1e-8)


def test_solves_heat_equation_at_random_points():
    rng = np.random.default_rng(1)
    for mu in (exp_decay(1.0), exp_growth(0.5, 1.5), indicator(-1, 1), gaussian_bump(0, 0.4) + dirac(1)):
        for _ in range(40):
            t, x = rng.uniform(0.2, 3), rng.uniform(-4, 4)
            v = j0(mu, 1.0, t, x)
            assert math.isfinite(v)
            h = 1e-3
            dxx = (j0(mu, 1.0, t, x + h) - 2 * v + j0(mu, 1.0, t, x - h)) / h ** 2
            dt = (j0(mu, 1.0, t + h, x) - j0(mu, 1.0, t - h, x)) / (2 * h)
            assert dt == pytest.approx(0.5 * dxx, rel=1e-4, abs=1e-6)


def test_custom_density_signed():
    f = CustomDensity(lambda y: np.sin(y) * np.exp(-y * y), Tail("exponential", rate=-1.0, power=2.0),
                      (0.0,), False, "wave")
    mu = InitialMeasure(terms=((1.0, f),))
    ref = mp_j0(lambda y: mp.sin(y) * mp.exp(-y * y), 1.0, 0.5, 0.4)
    assert j0(mu, 1.0, 0.5, 0.4, method="quad") == pytest.approx(ref, rel=1e-8)


def test_distribution_input():
    d = dirac_derivative(1)
    assert d.order == 1
    # d/dx G_1(t, x) = -x/t G_1(t, x)
    assert j0(d, 1.0, 0.5, 0.3) == pytest.approx(-0.3 / 0.5 * heat_kernel(1.0, 0.5, 0.3), rel=1e-12)


def test_spec_round_trip_labels():
    assert dirac().spec() == "delta"
    assert lebesgue().spec() == "lebesgue"
    assert exp_decay(1.0).spec().startswith("exp_decay")
