import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from eulerzeros.errors import BranchCut, BudgetExceeded, DomainError
from eulerzeros.specfun import (EvalAccuracy, arg_chi_half, exp_integral_e2, f2_kernel, im_f2_imag_axis,
                                lambert_w0, log_chi_half, riemann_siegel_theta)


def e2_quad(z):
    """int_z^inf e^{-w}/w^2 dw along the horizontal ray w = z + u."""
    z = complex(z)

    def part(fn):
        return integrate.quad(lambda u: fn(np.exp(-(z + u)) / (z + u) ** 2), 0, np.inf,
                              epsabs=0, epsrel=1e-13, limit=500)[0]

    return complex(part(np.real), part(np.imag))


def e2_mp(z):
    z = mpmath.mpc(z)
    return complex(mpmath.expint(2, z) / z)


def test_e2_at_one_matches_quadrature():
    val = exp_integral_e2(1.0)
    assert abs(val - 0.14849550677592205) < 1e-14
    assert abs(val - e2_quad(1.0)) < 1e-12


def test_scalar_in_scalar_out():
    assert np.ndim(exp_integral_e2(1.0)) == 0
    assert exp_integral_e2(np.array([1.0, 2.0])).shape == (2,)


@pytest.mark.parametrize("x", np.logspace(-2, 2, 50))
def test_e2_imaginary_axis_against_quadrature(x):
    z = 1j * x
    ref = e2_mp(z)
    assert abs(exp_integral_e2(z) - ref) <= 1e-10 * abs(ref)
    if x >= 0.05:
        ref_q = e2_quad(z)
        assert abs(exp_integral_e2(z) - ref_q) <= 1e-10 * abs(ref_q)


@pytest.mark.parametrize("z", [0.3 + 0.1j, 2.5 - 4j, 10 + 1j, -1 + 0.5j, -4 - 3j, 40j, 7.0, 0.01])
def test_e2_off_axis_against_mpmath(z):
    ref = e2_mp(z)
    assert abs(exp_integral_e2(z) - ref) <= 1e-10 * abs(ref)


def test_e2_branch_cut_rejected():
    for z in (0.0, -1.0, -3.5 + 0j):
        with pytest.raises(BranchCut):
            exp_integral_e2(z)


def test_e2_budget():
    with pytest.raises(BudgetExceeded):
        exp_integral_e2(-30 + 1e-3j, EvalAccuracy(max_terms=16))


def test_accuracy_validation():
    with pytest.raises(ValueError):
        EvalAccuracy(rel_tol=0.1)
    with pytest.raises(ValueError):
        EvalAccuracy(max_terms=4)


@pytest.mark.parametrize("x", [1.0, 5.0, 20.0, 100.0, 700.0])
def test_e2_real_decay_envelope(x):
    assert 0 < exp_integral_e2(x).real <= math.exp(-x) / x ** 2


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 50), st.floats(-50, 50))
def test_e2_conjugation(re, im):
    z = complex(re, im)
    a, b = exp_integral_e2(z), exp_integral_e2(z.conjugate())
    assert abs(b - a.conjugate()) <= 1e-12 * abs(a)


def test_e2_conjugation_random_batch():
    rng = np.random.default_rng(7)
    z = rng.uniform(0.001, 30, 1000) + 1j * rng.uniform(-30, 30, 1000)
    a, b = exp_integral_e2(z), exp_integral_e2(np.conj(z))
    assert np.all(np.abs(b - np.conj(a)) <= 1e-12 * np.abs(a))


def test_f2_at_half():
    ref = 2 * e2_quad(1.0) - e2_quad(0.5)
    assert abs(f2_kernel(0.5) - ref) <= 1e-10 * abs(ref)


@pytest.mark.parametrize("x", np.logspace(-1, 1.7, 12))
def test_f2_against_quadrature(x):
    ref = 2 * e2_quad(2j * x) - e2_quad(1j * x)
    assert abs(f2_kernel(1j * x) - ref) <= 1e-10 * abs(ref)


def test_im_f2_odd():
    x = np.linspace(-50, 50, 2001)
    assert np.max(np.abs(im_f2_imag_axis(x) + im_f2_imag_axis(-x))) <= 1e-12
    assert im_f2_imag_axis(0.0) == 0.0


def test_f2_decay_envelope():
    # |F2(ix)| x^2 stays bounded for |x| >= 1: fit the constant on [1, 30], check it out to 1000
    x = np.linspace(1, 1000, 20000)
    scaled = np.abs(f2_kernel(1j * x)) * x ** 2
    k = scaled[x <= 30].max()
    assert np.all(scaled[x > 30] <= 1.01 * k)


def test_theta_against_mpmath():
    for t in (15.0, 100.0, 1234.5, 5000.0):
        assert abs(riemann_siegel_theta(t) - float(mpmath.siegeltheta(t))) < 1e-10


def test_chi_unimodular():
    t = np.linspace(15, 5000, 5000)
    assert np.max(np.abs(np.abs(np.exp(log_chi_half(t))) - 1)) <= 1e-10


def test_chi_arg_matches_log_chi_modulo_2pi():
    t = np.linspace(15, 500, 300)
    d = arg_chi_half(t, "exact") - np.imag(log_chi_half(t))
    assert np.allclose(np.mod(d + np.pi, 2 * np.pi) - np.pi, 0, atol=1e-9)


def test_stirling_envelope():
    t = np.linspace(100, 5000, 500)
    d = np.abs(arg_chi_half(t, "exact") - arg_chi_half(t, "stirling"))
    assert np.all(d <= 1 / t)
    assert np.allclose(d * 24 * t, 1, rtol=1e-3)


def test_arg_chi_monotone_decreasing():
    t = np.linspace(10, 1000, 20000)
    assert np.all(np.diff(arg_chi_half(t)) < 0)


def test_chi_auto_switch():
    assert arg_chi_half(499.0, "auto") == arg_chi_half(499.0, "exact")
    assert arg_chi_half(501.0, "auto") == arg_chi_half(501.0, "stirling")
    with pytest.raises(ValueError):
        arg_chi_half(100.0, "bogus")


def test_chi_domain():
    with pytest.raises(DomainError):
        arg_chi_half(5.0)


def test_lambert_trivial():
    assert lambert_w0(0.0) == 0.0
    assert abs(lambert_w0(math.e) - 1) < 1e-15
    with pytest.raises(DomainError):
        lambert_w0(-0.1)


def test_lambert_ten_against_bisection():
    from scipy.optimize import bisect
    ref = bisect(lambda w: w * math.exp(w) - 10, 0, 5, xtol=1e-15)
    w = lambert_w0(10.0)
    assert abs(w * math.exp(w) - 10) <= 1e-11
    assert abs(w - ref) < 1e-12


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1e6))
def test_lambert_round_trip(x):
    w = lambert_w0(x)
    assert w >= 0
    assert abs(w * math.exp(w) - x) <= 1e-11 * max(x, 1e-300) or x == 0
