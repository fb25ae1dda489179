import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eulerzeros.errors import DomainError, ResourceError, TableTooSmall
from eulerzeros.specfun import arg_chi_half, f2_kernel, log_chi_half
from eulerzeros.zerolab import count_zeros
from eulerzeros.zetax import (XMode, f_x_prime_theory, f_x_star, log_p_x, log_p_x_star, phase,
                              phase_derivative, von_mangoldt_table, zeta_afe, zeta_x_star)


def brute_lambda(n):
    for p in range(2, n + 1):
        if n % p == 0:
            while n % p == 0:
                n //= p
            return math.log(p) if n == 1 else 0.0
    return 0.0


def test_sieve_small():
    t = von_mangoldt_table(10)
    assert [n for n, _ in t.entries] == [2, 3, 4, 5, 7, 8, 9]
    expect = [math.log(v) for v in (2, 3, 2, 5, 7, 2, 3)]
    assert np.allclose([v for _, v in t.entries], expect, rtol=0, atol=0)
    assert von_mangoldt_table(2).entries == [(2, math.log(2))]


def test_sieve_psi_100():
    t = von_mangoldt_table(100)
    brute = sum(brute_lambda(n) for n in range(2, 101))
    assert abs(sum(t.lam) - brute) < 1e-12
    assert round(float(sum(t.lam)), 3) == 94.045


def test_sieve_matches_brute_force():
    t = von_mangoldt_table(2000)
    lam = dict(t.entries)
    for n in range(2, 2001):
        assert lam.get(n, 0.0) == brute_lambda(n)


def test_sieve_extends():
    a, b = von_mangoldt_table(500), von_mangoldt_table(5000)
    assert b.entries[: len(a)] == a.entries


def test_sieve_limits():
    with pytest.raises(ValueError):
        von_mangoldt_table(1)
    with pytest.raises(ResourceError):
        von_mangoldt_table(10 ** 6, cap=10 ** 5)


def test_log_p_x_hand_expansion():
    t = von_mangoldt_table(10)
    expect = 1 / math.sqrt(2) + 1 / math.sqrt(3) + 0.25 + 1 / math.sqrt(5)
    assert abs(log_p_x(0.5, 5, t) - expect) < 1e-14
    assert abs(expect - 1.98167) < 1e-5
    assert log_p_x(0.5 + 3j, 1.5, t) == 0


def test_log_p_x_table_too_small():
    with pytest.raises(TableTooSmall):
        log_p_x(0.5, 50, von_mangoldt_table(10))


def test_log_p_x_matches_euler_product(primes):
    # plain product: exponent equals sum over p <= X of -log(1 - p^-s) restricted to powers <= X
    s = 0.5 + 7.3j
    x = 30
    direct = sum(brute_lambda(n) / (n ** s * math.log(n)) for n in range(2, x + 1) if brute_lambda(n))
    assert abs(log_p_x(s, x, primes) - direct) < 1e-12


def test_im_log_p_continuous(primes):
    t = np.arange(100, 120, 0.001)
    im = np.imag(log_p_x(0.5 + 1j * t, 10, primes))
    assert np.max(np.abs(np.diff(im))) < 0.05


def test_log_p_x_star_correction_small(primes):
    s = 0.5 + 1000j
    diff = log_p_x_star(s, 5, primes) - log_p_x(s, 5, primes)
    oracle = complex(-(2 * mpmath.expint(2, 2 * (s - 1) * math.log(5)) / (2 * (s - 1) * math.log(5))
                       - mpmath.expint(2, (s - 1) * math.log(5)) / ((s - 1) * math.log(5))))
    assert abs(diff - oracle) < 1e-14
    assert abs(diff) < 1e-4


def test_log_p_x_star_envelope(primes):
    # |correction| <= K X / (t^2 log X): fit K at t = 200, check it holds out to 5000
    def ratio(t, x):
        s = 0.5 + 1j * t
        return abs(log_p_x_star(s, x, primes) - log_p_x(s, x, primes)) * t * t * math.log(x) / x

    for x in (3, 5, 10, 20):
        k = max(ratio(t, x) for t in np.linspace(100, 300, 50))
        assert all(ratio(t, x) <= 1.5 * k for t in np.linspace(300, 5000, 200))


@settings(max_examples=50, deadline=None)
@given(st.floats(15, 2000), st.integers(2, 60))
def test_log_p_x_star_conjugation(t, x):
    table = von_mangoldt_table(4000)
    for product in ("plain", "tapered"):
        a = log_p_x_star(0.5 + 1j * t, x, table, product=product)
        b = log_p_x_star(0.5 - 1j * t, x, table, product=product)
        assert abs(b - np.conj(a)) < 1e-12 * max(1, abs(a))


def test_phase_tracks_counting(zeros, primes):
    for x in (5, 10, 20):
        ts = np.linspace(50, 2000, 400)
        h = phase(ts, x, primes) / (2 * math.pi) + 1
        n = np.array([count_zeros(zeros, t) for t in ts])
        assert np.all(np.abs(h - n) < 3)
        if x == 10:
            sub = (ts >= 50) & (ts <= 500)
            assert np.all(np.abs(h[sub] - n[sub]) < 2)


def test_phase_no_tears(primes):
    t = np.arange(100, 200, 0.001)
    for x in (2, 5, 20):
        f = phase(t, x, primes)
        assert np.max(np.abs(np.diff(f))) < 0.5


def test_zero_of_zeta_x_star_at_phase_crossing(primes):
    from scipy.optimize import brentq
    mode = XMode.fixed(5)
    f = lambda t: f_x_star(t, mode, primes).f_star
    m = math.floor((f(100.0) / math.pi - 1) / 2) + 1
    t0 = brentq(lambda t: f(t) - (2 * m + 1) * math.pi, 100.0, 103.0, xtol=1e-14)
    assert abs(zeta_x_star(t0, mode, primes)) < 1e-8


def test_zeta_x_star_modulus_identity(primes):
    mode = XMode.fixed(7)
    for t in np.linspace(20, 800, 40):
        z = zeta_x_star(t, mode, primes)
        lp = log_p_x_star(0.5 + 1j * t, 7, primes, product="tapered")
        f = f_x_star(t, mode, primes, chi_method="exact").f_star
        assert abs(abs(z) - 2 * abs(np.exp(lp)) * abs(math.cos(f / 2))) < 1e-9 * max(1, abs(z))


def test_zeta_x_star_small_x(primes):
    mode = XMode.fixed(1.5)
    t = 40.0
    corr = f2_kernel((-0.5 + 1j * t) * math.log(1.5))
    lp = -corr
    expect = np.exp(lp) + np.exp(log_chi_half(t) + np.conj(lp))
    assert abs(zeta_x_star(t, mode, primes) - expect) < 1e-12


def test_mode_equivalence(primes):
    t = np.array([40.0, 123.4, 999.9])
    for ti in t:
        a = f_x_star(ti, XMode.varying(), primes)
        b = f_x_star(ti, XMode.fixed(math.floor(ti / (2 * math.pi))), primes)
        assert a.f_star == b.f_star and a.x_used == b.x_used
    t = 2 * math.pi * 7
    assert f_x_star(t + 1e-9, XMode.varying(), primes).x_used == 7


def test_varying_mode_domain():
    with pytest.raises(DomainError):
        XMode.varying().x_at(12.0)


def test_xmode_parse():
    assert XMode.parse("fixed:5") == XMode.fixed(5)
    assert XMode.parse("vary") == XMode.varying()
    assert str(XMode.fixed(5)) == "fixed:5"
    for bad in ("fixed:", "fixed:1", "nope"):
        with pytest.raises(ValueError):
            XMode.parse(bad)


def test_derivative_matches_finite_difference(primes):
    rng = np.random.default_rng(3)
    for _ in range(100):
        t = rng.uniform(100, 1000)
        x = float(rng.integers(2, 40))
        h = 1e-5
        fd = (phase(t + h, x, primes) - phase(t - h, x, primes)) / (2 * h)
        assert abs(f_x_prime_theory(t, XMode.fixed(x), primes) - fd) <= 0.05 * abs(fd)
        assert abs(phase_derivative(t, x, primes) - fd) <= 1e-6 * max(1, abs(fd))


def test_derivative_long_run_mean(primes):
    # the oscillating prime sum averages out over long stretches of t
    ts = np.linspace(100, 1000, 20001)
    for x in (5, 10, 20):
        mean = np.mean(f_x_prime_theory(ts, XMode.fixed(x), primes))
        main = np.mean(np.log(ts / (2 * math.pi)))
        assert abs(mean - main) <= 0.15 * main


def test_derivative_empty_sum(primes):
    assert f_x_prime_theory(300.0, XMode.fixed(1.5), primes, weight="sharp") == math.log(300 / (2 * math.pi))
    with pytest.raises(ValueError):
        f_x_prime_theory(300.0, XMode.fixed(5), primes, weight="flat")


def test_derivative_table_too_small():
    with pytest.raises(TableTooSmall):
        f_x_prime_theory(300.0, XMode.fixed(50), von_mangoldt_table(100))


def test_afe_matches_mpmath():
    for t in (14.134725141734693, 50.0, 101.3, 523.7, 2000.0):
        assert abs(zeta_afe(t) - complex(mpmath.zeta(0.5 + 1j * t))) < 1e-3


def test_afe_bare_error_scale():
    for t in (100.0, 1000.0):
        err = abs(zeta_afe(t, corrections=0) - complex(mpmath.zeta(0.5 + 1j * t)))
        assert err < 2 * t ** -0.25


def test_afe_first_zero_and_midpoints(zeros):
    g = zeros.ordinates
    assert abs(zeta_afe(g[0])) <= 0.05
    assert min(abs(zeta_afe(t)) for t in (g[:100] + g[1:101]) / 2) > 0.1


def test_afe_domain():
    with pytest.raises(DomainError):
        zeta_afe(5.0)
