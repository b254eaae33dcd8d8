import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shemoments.kernels import (GrowthEnvelope, a_p_vip, bdg_constants, even_ceil, kernel_c, kernel_H,
                                kernel_H_variant, kernel_K, kernel_K_alt, kernel_variant, lam_for_variant,
                                z_p)
from shemoments import _quadrature as q

mp.mp.dps = 40


def mp_H(t, nu, lam):
    l4 = mp.mpf(lam) ** 4
    return 2 * mp.exp(l4 * t / (4 * nu)) * mp.ncdf(mp.mpf(lam) ** 2 * mp.sqrt(mp.mpf(t) / (2 * nu))) - 1


def mp_K(t, x, nu, lam):
    t, x, nu, lam = map(mp.mpf, (t, x, nu, lam))
    g = mp.exp(-x * x / (nu * t)) / mp.sqrt(mp.pi * nu * t)
    l2 = lam * lam
    c = l2 / mp.sqrt(4 * mp.pi * nu * t) + l2 * l2 / (2 * nu) * mp.exp(l2 * l2 * t / (4 * nu)) * mp.ncdf(
        l2 * mp.sqrt(t / (2 * nu)))
    return g * c


def test_H_examples():
    assert kernel_H(0.0, 1.0, 1.0) == 0.0
    assert kernel_H(1.0, 1.0, 1.0) == pytest.approx(float(mp_H(1, 1, 1)), rel=1e-14)
    # 2 e^{1/4} Phi(1/sqrt 2) - 1
    assert kernel_H(1.0, 1.0, 1.0) == pytest.approx(0.9523604891825570, rel=1e-14)


@pytest.mark.parametrize("t,x,nu,lam", [(1, 0, 1, 1), (0.3, 0.7, 0.5, 2), (2.5, -1.2, 2, 0.5), (1e-4, 0, 1, 1)])
def test_K_against_mpmath(t, x, nu, lam):
    assert kernel_K(t, x, nu, lam) == pytest.approx(float(mp_K(t, x, nu, lam)), rel=1e-13)


def test_K_value_at_unit_parameters():
    # G_{1/2}(1, 0) = 1/sqrt(pi) times 1/sqrt(4 pi) + e^{1/4} Phi(1/sqrt 2) / 2
    c = 1 / math.sqrt(4 * math.pi) + 0.5 * math.exp(0.25) * 0.7602499389065233
    assert kernel_K(1.0, 0.0, 1.0, 1.0) == pytest.approx(c / math.sqrt(math.pi), rel=1e-14)


def test_K_limits_and_errors():
    assert kernel_K(1.0, 0.3, 1.0, 1e-8) < 1e-15
    assert kernel_K(1.0, 50.0, 1.0, 1.0) < 1e-300
    with pytest.raises(ValueError):
        kernel_K(0.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        kernel_K(-1.0, 0.0, 1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 20), st.floats(-5, 5), st.floats(0.1, 4), st.floats(0.1, 2.5))
def test_K_alternative_form(t, x, nu, lam):
    a, b = kernel_K(t, x, nu, lam), kernel_K_alt(t, x, nu, lam)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 4), st.floats(0.1, 2.5))
def test_H_nondecreasing_nonnegative(nu, lam):
    t = np.linspace(0, 10, 400)
    h = kernel_H(t, nu, lam)
    assert np.all(h >= 0)
    assert np.all(np.diff(h) >= -1e-15)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 5), st.floats(-4, 4), st.floats(0.1, 3), st.floats(0.05, 2), st.floats(0.0, 2))
def test_K_monotone_in_lambda(t, x, nu, l1, dl):
    assert kernel_K(t, x, nu, l1) <= kernel_K(t, x, nu, l1 + dl) * (1 + 1e-14)


def test_H_log_slope():
    nu, lam = 1.0, 1.0
    t = np.linspace(50, 200, 31)
    slope = np.polyfit(t, np.log(kernel_H(t, nu, lam)), 1)[0]
    assert slope == pytest.approx(lam ** 4 / (4 * nu), rel=0.02)


def test_H_is_one_star_K():
    nu, lam, t = 1.0, 1.0, 0.5

    def space(tau):
        sd = math.sqrt(0.5 * nu * tau)
        fn = lambda y: kernel_K(tau, y + 0.3, nu, lam)
        return q.integrate_significant(fn, (-0.3 - 40 * sd, -0.3 + 40 * sd), [(-0.3, sd)], n=24)

    assert q.split_time_integral(space, t) == pytest.approx(kernel_H(t, nu, lam), rel=1e-6)


def test_kernel_c():
    assert kernel_c(0.0, 1.0, 1.0) == math.inf
    assert kernel_c(-1.0, 1.0, 1.0) == 0.0
    assert kernel_c(1.0, 1.0, 1.0) * (1 / math.sqrt(math.pi)) == pytest.approx(kernel_K(1, 0, 1, 1))


def test_bdg_constants():
    assert z_p(2) == 1.0
    for p in (4, 6, 8, 10):
        assert z_p(p) <= 2 * math.sqrt(p) + 1e-15
        for vip in (0.0, 0.5):
            a = a_p_vip(p, vip)
            assert a in (1.0, math.sqrt(2.0), 2.0 ** ((p - 1) / p))
            assert a <= 2.0
    assert a_p_vip(2, 0.3) == 1.0
    assert a_p_vip(4, 0.0) == math.sqrt(2)
    assert a_p_vip(4, 1.0) == 2.0 ** 0.75
    b = bdg_constants(4, 0.0)
    assert (b.p, b.z_p, b.a_p_vip) == (4, 4.0, math.sqrt(2))
    with pytest.raises(ValueError):
        z_p(3)
    assert even_ceil(2.5) == 4 and even_ceil(4) == 4 and even_ceil(3) == 4


def test_envelope_invariants():
    env = GrowthEnvelope.quasi_linear(1.5, 0.2)
    assert env.Lip_up == env.lip_low == 1.5 and env.Vip_up == env.vip_low == 0.2
    with pytest.raises(ValueError):
        GrowthEnvelope.bounds(Lip_up=1.0, lip_low=2.0)
    with pytest.raises(ValueError):
        GrowthEnvelope.bounds(Lip_up=1.0, Vip_up=-0.1)
    with pytest.raises(ValueError):
        GrowthEnvelope(LIP=1, Lip_up=1, lip_low=0.5, quasi=(1.0, 0.0))


def test_envelope_rho():
    rho = GrowthEnvelope.quasi_linear(2.0, 0.0).rho()
    assert rho(3.0) == 6.0
    rho = GrowthEnvelope.quasi_linear(2.0, 0.5).rho()
    assert rho(np.array([0.0]))[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        GrowthEnvelope.bounds(Lip_up=1.0).rho()


def test_variants():
    env = GrowthEnvelope.bounds(Lip_up=2.0, lip_low=0.5)
    t, x, nu = 1.0, 0.0, 1.0
    assert kernel_variant("upper", env, 2, t, x, nu) == kernel_K(t, x, nu, 2.0)
    assert kernel_variant("lower", env, 2, t, x, nu) == kernel_K(t, x, nu, 0.5)
    assert kernel_variant("hat_p", env, 2, t, x, nu) == kernel_variant("upper", env, 2, t, x, nu)
    assert lam_for_variant("hat_p", env, 4) == pytest.approx(math.sqrt(2) * 4 * 2.0)
    q_env = GrowthEnvelope.quasi_linear(0.7)
    assert kernel_variant("upper", q_env, 2, t, 0.3, nu) == kernel_variant("lower", q_env, 2, t, 0.3, nu) \
        == kernel_K(t, 0.3, nu, 0.7)
    assert kernel_H_variant("lower", GrowthEnvelope.bounds(Lip_up=1.0), 2, t, nu) == 0.0
    with pytest.raises(ValueError):
        kernel_variant("upper", env, 3, t, x, nu)
    with pytest.raises(ValueError):
        kernel_variant("sideways", env, 2, t, x, nu)
