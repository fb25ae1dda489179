"""Complex special functions for the finite Euler product machinery.

All functions accept scalars or numpy arrays and broadcast.  Scalars in,
scalars out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import lambertw, loggamma

from .errors import BranchCut, BudgetExceeded, DomainError

EULER_GAMMA = 0.57721566490153286061
T_MIN = 10.0
STIRLING_ABOVE = 500.0

# |z| at or below which E2 is summed as a power series.  Chosen by measuring
# both branches against quadrature along the imaginary axis: the series loses
# ~exp(|z|) * eps to cancellation, the continued fraction needs O(1/|z|^2)
# terms near the imaginary axis.  At 2.0 both are below 1e-14.
SERIES_RADIUS = 2.0

# Left of the imaginary axis the continued fraction slows down near the cut,
# so the series takes over out to this radius (cancellation ~exp(-Re z) stays
# below 1e-12 relative).
LEFT_SERIES_RADIUS = 6.0

ChiMethod = Literal["exact", "stirling", "auto"]


@dataclass(frozen=True)
class EvalAccuracy:
    rel_tol: float = 1e-10
    max_terms: int = 500

    def __post_init__(self):
        if not (0 < self.rel_tol <= 1e-3):
            raise ValueError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")
        if self.max_terms < 16:
            raise ValueError(f"max_terms must be >= 16, got {self.max_terms}")


DEFAULT_ACCURACY = EvalAccuracy()


def _unwrap(result, scalar):
    return result.reshape(-1)[0] if scalar else result


def _e2_series(z, acc):
    # z * E2(z) = exp(-z) - z * E1(z);  E1(z) = -gamma - log z - sum_k (-z)^k / (k k!)
    term = np.ones_like(z)
    total = np.zeros_like(z)
    tol = max(acc.rel_tol * 1e-4, 1e-17)
    for k in range(1, acc.max_terms + 1):
        term = term * (-z) / k
        contrib = term / k
        total = total + contrib
        if np.all(np.abs(contrib) <= tol * np.maximum(np.abs(total), 1e-300)):
            e1 = -EULER_GAMMA - np.log(z) - total
            return np.exp(-z) / z - e1
    raise BudgetExceeded(f"E2 power series did not converge in {acc.max_terms} terms")


def _e2_contfrac(z, acc):
    # Modified Lentz on the even continued fraction for the standard E_2,
    #   E_2(z) = e^{-z} / (z+2 - 1*2/(z+4 - 2*3/(z+6 - ...))),
    # then divided by z for the integral normalisation used here.
    tiny = 1e-300
    tol = max(acc.rel_tol * 1e-4, 2e-16)
    b = z + 2.0
    c = np.full_like(z, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    done = np.zeros(z.shape, dtype=bool)
    for i in range(1, acc.max_terms + 1):
        an = -i * (i + 1.0)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = c * d
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) <= tol
        if done.all():
            return h * np.exp(-z) / z
    raise BudgetExceeded(f"E2 continued fraction did not converge in {acc.max_terms} terms")


def exp_integral_e2(z, acc: EvalAccuracy = DEFAULT_ACCURACY):
    """Second exponential integral E2(z) = int_z^inf e^{-w} / w^2 dw.

    Principal branch, cut along the non-positive real axis.  Note the
    normalisation: this equals the textbook ``E_2(z) / z``.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    on_cut = (z.imag == 0) & (z.real <= 0)
    if on_cut.any():
        raise BranchCut(f"E2 undefined on the non-positive real axis: {z[on_cut][0]}")
    if not np.all(np.isfinite(z)):
        raise DomainError("E2 argument must be finite")
    out = np.empty_like(z)
    small = (np.abs(z) <= SERIES_RADIUS) | ((z.real < 0) & (np.abs(z) <= LEFT_SERIES_RADIUS))
    if small.any():
        out[small] = _e2_series(z[small], acc)
    if (~small).any():
        out[~small] = _e2_contfrac(z[~small], acc)
    return _unwrap(out, scalar)


def f2_kernel(z, acc: EvalAccuracy = DEFAULT_ACCURACY):
    """F2(z) = 2 E2(2z) - E2(z)."""
    z = np.asarray(z, dtype=complex)
    return 2.0 * exp_integral_e2(2.0 * z, acc) - exp_integral_e2(z, acc)


def im_f2_imag_axis(x, acc: EvalAccuracy = DEFAULT_ACCURACY):
    """Im F2(i x) for real x, with the x = 0 limit set to 0 (odd extension)."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    nz = x != 0
    if nz.any():
        out[nz] = np.imag(f2_kernel(1j * x[nz], acc))
    return _unwrap(out, scalar)


def riemann_siegel_theta(t):
    """theta(t) = Im log Gamma(1/4 + it/2) - (t/2) log pi, continuous in t."""
    t = np.asarray(t, dtype=float)
    return np.imag(loggamma(0.25 + 0.5j * t)) - 0.5 * t * math.log(math.pi)


def log_chi_half(t):
    """log chi(1/2 + it) built from log-gamma (not a principal-value log).

    The imaginary part is the continuous argument; the real part is log|chi|
    and vanishes up to rounding.
    """
    t = np.asarray(t, dtype=float)
    s = 0.5 + 1j * t
    return (s - 0.5) * math.log(math.pi) + loggamma((1.0 - s) / 2.0) - loggamma(s / 2.0)


def _resolve_chi_method(method, t):
    if method == "auto":
        return np.where(t > STIRLING_ABOVE, 1, 0)
    if method == "exact":
        return np.zeros(t.shape, dtype=int)
    if method == "stirling":
        return np.ones(t.shape, dtype=int)
    raise ValueError(f"unknown chi method {method!r}; expected exact, stirling or auto")


def arg_chi_half(t, method: ChiMethod = "exact", t_min: float = T_MIN):
    """Continuous branch of arg chi(1/2 + it), i.e. -2 theta(t).

    ``stirling`` uses arg[(t/2pi)^{-it} e^{it + i pi/4}] = -t log(t/2pi) + t + pi/4,
    which differs from the exact value by 1/(24 t) + O(t^-3).  ``auto`` picks
    stirling above t = 500.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < t_min):
        raise DomainError(f"ordinate {t[t < t_min][0]} below t_min={t_min}")
    which = _resolve_chi_method(method, t)
    out = np.empty_like(t)
    ex = which == 0
    if ex.any():
        out[ex] = -2.0 * riemann_siegel_theta(t[ex])
    st = ~ex
    if st.any():
        ts = t[st]
        out[st] = -ts * np.log(ts / (2 * math.pi)) + ts + math.pi / 4
    return _unwrap(out, scalar)


def lambert_w0(x):
    """Principal branch of Lambert W on x >= 0."""
    scalar = np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("lambert_w0 needs finite x >= 0")
    w = lambertw(x, 0).real
    # one Halley step; scipy is already close, this pins the round trip
    ew = np.exp(w)
    f = w * ew - x
    denom = ew * (w + 1) - (w + 2) * f / (2 * w + 2)
    w = np.where(x > 0, w - f / denom, 0.0)
    return _unwrap(w, scalar)
