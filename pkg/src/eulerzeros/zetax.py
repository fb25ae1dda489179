"""Finite symmetrized Euler products on the critical line.

Everything is carried in log space: ``log P_X(s)`` is a finite sum, so its
imaginary part is the argument of ``P_X`` with no branch ambiguity, and the
phase function ``F_X*(t)`` is assembled from continuous pieces only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.special import digamma

from .errors import DomainError, ResourceError, TableTooSmall
from .specfun import (
    DEFAULT_ACCURACY,
    STIRLING_ABOVE,
    T_MIN,
    EvalAccuracy,
    arg_chi_half,
    f2_kernel,
    log_chi_half,
    riemann_siegel_theta,
)

TWO_PI = 2.0 * math.pi
TABLE_CAP = 10**8


@dataclass(frozen=True)
class PrimePowerTable:
    """Prime powers n <= limit with their von Mangoldt weights Lambda(n)."""

    limit: int
    n: np.ndarray
    lam: np.ndarray

    def __len__(self):
        return len(self.n)

    @property
    def entries(self):
        return list(zip(self.n.tolist(), self.lam.tolist()))

    def upto(self, x):
        k = np.searchsorted(self.n, math.floor(x), side="right")
        return self.n[:k], self.lam[:k]

    def require(self, x):
        if self.limit < math.floor(x):
            raise TableTooSmall(f"prime power table stops at {self.limit}, need {math.floor(x)}")


def von_mangoldt_table(limit: int, cap: int = TABLE_CAP) -> PrimePowerTable:
    if limit < 2:
        raise ValueError(f"limit must be >= 2, got {limit}")
    if limit > cap:
        raise ResourceError(f"limit {limit} exceeds the configured cap {cap}")
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    primes = np.nonzero(sieve)[0]
    lam = np.zeros(limit + 1)
    for p in primes:
        lp = math.log(p)
        q = int(p)
        while q <= limit:
            lam[q] = lp
            q *= int(p)
    n = np.nonzero(lam)[0]
    return PrimePowerTable(limit=limit, n=n.astype(np.int64), lam=lam[n])


@dataclass(frozen=True)
class XMode:
    """Truncation policy: a fixed X, or X = floor(t / 2pi) at each ordinate."""

    kind: Literal["fixed", "varying"]
    x: float | None = None

    def __post_init__(self):
        if self.kind == "fixed":
            if self.x is None or not self.x > 1:
                raise ValueError(f"fixed X must be > 1, got {self.x}")
        elif self.kind == "varying":
            if self.x is not None:
                raise ValueError("varying mode takes no X")
        else:
            raise ValueError(f"unknown X mode {self.kind!r}")

    @classmethod
    def fixed(cls, x):
        return cls("fixed", float(x))

    @classmethod
    def varying(cls):
        return cls("varying")

    @classmethod
    def parse(cls, text: str) -> "XMode":
        """Parse ``fixed:<value>`` or ``vary``."""
        text = text.strip().lower()
        if text in ("vary", "varying"):
            return cls.varying()
        if text.startswith("fixed:"):
            try:
                return cls.fixed(float(text[6:]))
            except ValueError:
                pass
        raise ValueError(f"X mode must be 'fixed:<value>' or 'vary', got {text!r}")

    def x_at(self, t):
        """Effective X at ordinate(s) t."""
        if self.kind == "fixed":
            return self.x if np.ndim(t) == 0 else np.full(np.shape(t), self.x)
        t = np.asarray(t, dtype=float)
        if np.any(t <= 2 * TWO_PI):
            raise DomainError("varying X needs t > 4 pi so that X >= 2")
        x = np.floor(t / TWO_PI)
        return float(x) if x.ndim == 0 else x

    def __str__(self):
        return "vary" if self.kind == "varying" else f"fixed:{self.x:g}"


@dataclass(frozen=True)
class PhasePoint:
    t: float
    f_star: float
    x_used: float


Product = Literal["tapered", "plain"]
DEFAULT_PRODUCT: Product = "tapered"


def product_length(x, product: Product = DEFAULT_PRODUCT):
    """Largest n entering the exponent: X for the plain product, X^2 for the tapered one."""
    return math.floor(x) if product == "plain" else math.floor(x * x)


def _weights(n, lam, x, product):
    """Lambda_X(n) / log n restricted to the product's range."""
    logn = np.log(n)
    if product == "plain":
        return np.where(n <= math.floor(x), lam / logn, 0.0)
    if product == "tapered":
        taper = np.clip(2.0 - logn / math.log(x), 0.0, 1.0)
        return np.where(n <= math.floor(x * x), lam * taper / logn, 0.0)
    raise ValueError(f"product must be 'tapered' or 'plain', got {product!r}")


def log_p_x(s, x, table: PrimePowerTable, product: Product = "plain"):
    """Exponent of the finite Euler product at s.

    ``plain`` is sum_{n<=x} Lambda(n) / (n^s log n).  ``tapered`` runs to x^2
    with Lambda(n) tapered by (2 - log n / log x) beyond x, the form for which
    the explicit formula over zeta zeros is exact.
    """
    if product not in ("tapered", "plain"):
        raise ValueError(f"product must be 'tapered' or 'plain', got {product!r}")
    s = np.asarray(s, dtype=complex)
    if x < 2:
        return np.zeros_like(s)[()]
    length = product_length(x, product)
    table.require(length)
    n, lam = table.upto(length)
    w = _weights(n, lam, x, product)
    out = np.exp(-np.multiply.outer(s, np.log(n))) @ w
    return out[()]


def log_p_x_star(s, x, table: PrimePowerTable, acc: EvalAccuracy = DEFAULT_ACCURACY,
                 product: Product = "plain"):
    """log P_X*(s) = log P_X(s) - F2((s - 1) log X)."""
    s = np.asarray(s, dtype=complex)
    return log_p_x(s, x, table, product) - f2_kernel((s - 1.0) * math.log(x), acc)


def _grouped(t, x, table, product, fn):
    """Apply fn(t_group, n, weights) over groups of equal X; fn returns an array."""
    t = np.asarray(t, dtype=float)
    x = np.broadcast_to(np.asarray(x, dtype=float), t.shape)
    flat_t, flat_x = t.ravel(), x.ravel()
    out = np.zeros(flat_t.shape)
    for xv in np.unique(flat_x):
        rows = np.nonzero(flat_x == xv)[0]
        if xv < 2:
            continue
        length = product_length(xv, product)
        table.require(length)
        n, lam = table.upto(length)
        w = _weights(n, lam, xv, product) / np.sqrt(n)
        logn = np.log(n)
        chunk = max(1, 4_000_000 // max(n.size, 1))
        for i in range(0, rows.size, chunk):
            r = rows[i : i + chunk]
            out[r] = fn(flat_t[r], logn, w)
    return out.reshape(t.shape)


def _im_log_p_half(t, x, table, product=DEFAULT_PRODUCT):
    """Im log P_X(1/2 + it) for arrays t with per-element x."""
    return _grouped(t, x, table, product, lambda tt, ln, w: -(np.sin(np.outer(tt, ln)) @ w))


def _d_im_log_p_half(t, x, table, product=DEFAULT_PRODUCT):
    return _grouped(t, x, table, product, lambda tt, ln, w: -(np.cos(np.outer(tt, ln)) @ (w * ln)))


def phase(t, x, table: PrimePowerTable, chi_method="auto", acc: EvalAccuracy = DEFAULT_ACCURACY,
          t_min: float = T_MIN, product: Product = DEFAULT_PRODUCT):
    """F_X*(t) for arrays of ordinates with a matching array (or scalar) of X."""
    scalar = np.ndim(t) == 0 and np.ndim(x) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.broadcast_to(np.asarray(x, dtype=float), t.shape)
    if np.any(x <= 1):
        raise DomainError("X must exceed 1")
    corr = np.imag(f2_kernel((-0.5 + 1j * t) * np.log(x), acc))
    f = -arg_chi_half(t, chi_method, t_min) + 2.0 * (_im_log_p_half(t, x, table, product) - corr)
    return f[0] if scalar else f


def phase_derivative(t, x, table: PrimePowerTable, chi_method="auto", t_min: float = T_MIN,
                     product: Product = DEFAULT_PRODUCT):
    """Analytic dF_X*/dt, term by term."""
    scalar = np.ndim(t) == 0 and np.ndim(x) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    x = np.broadcast_to(np.asarray(x, dtype=float), t.shape)
    if np.any(t < t_min):
        raise DomainError(f"ordinate below t_min={t_min}")
    which = np.where(t > STIRLING_ABOVE, 1, 0) if chi_method == "auto" else \
        np.full(t.shape, 1 if chi_method == "stirling" else 0)
    dchi = np.where(which == 1, np.log(t / TWO_PI),
                    np.real(digamma(0.25 + 0.5j * t)) - math.log(math.pi))
    lx = np.log(x)
    z = (-0.5 + 1j * t) * lx
    df2 = 1j * lx * (np.exp(-z) - np.exp(-2 * z)) / (z * z)
    d = dchi + 2.0 * (_d_im_log_p_half(t, x, table, product) - np.imag(df2))
    return d[0] if scalar else d


def f_x_star(t: float, mode: XMode, table: PrimePowerTable, chi_method="auto",
             acc: EvalAccuracy = DEFAULT_ACCURACY, t_min: float = T_MIN,
             product: Product = DEFAULT_PRODUCT) -> PhasePoint:
    """F_X*(t) = -arg chi(1/2 + it) + 2 arg P_X*(1/2 + it) at a single ordinate."""
    x = mode.x_at(t)
    f = phase(t, x, table, chi_method, acc, t_min, product)
    return PhasePoint(t=float(t), f_star=float(f), x_used=float(x))


def zeta_x_star(t, mode: XMode, table: PrimePowerTable, acc: EvalAccuracy = DEFAULT_ACCURACY,
                t_min: float = T_MIN, product: Product = DEFAULT_PRODUCT):
    """zeta_X*(1/2 + it) = P*(s) + chi(s) P*(conj s), assembled from logs."""
    t = np.asarray(t, dtype=float)
    if np.any(t < t_min):
        raise DomainError(f"ordinate below t_min={t_min}")
    x = mode.x_at(t)
    s = 0.5 + 1j * t
    if np.ndim(x):
        lp = np.array([log_p_x_star(si, xi, table, acc, product) for si, xi in zip(s.ravel(), np.ravel(x))])
        lp = lp.reshape(t.shape)
    else:
        lp = log_p_x_star(s, x, table, acc, product)
    lpc = np.conj(lp)  # P* is real-symmetric, so log P*(conj s) = conj log P*(s)
    return (np.exp(lp) + np.exp(log_chi_half(t) + lpc))[()]


def f_x_prime_theory(t, mode: XMode, table: PrimePowerTable, weight: Literal["tapered", "sharp"] = "tapered"):
    """Main terms log(t/2pi) - 2 sum_{n <= X^2} Lambda_X(n) cos(t log n) / sqrt(n).

    ``sharp`` keeps Lambda(n) for every n <= X^2; ``tapered`` tapers the range
    X < n <= X^2 by (2 - log n / log X).
    """
    if weight not in ("tapered", "sharp"):
        raise ValueError(f"weight must be 'tapered' or 'sharp', got {weight!r}")
    t = np.asarray(t, dtype=float)
    x = np.broadcast_to(np.asarray(mode.x_at(t), dtype=float), t.shape)
    main = np.log(t / TWO_PI)
    if x.size == 0 or float(x.max()) < 2:
        return main[()]
    xmax = float(x.max())
    table.require(math.floor(xmax * xmax))
    n, lam = table.upto(xmax * xmax)
    logn = np.log(n)
    out = np.empty(t.shape)
    for idx in np.ndindex(t.shape):
        xi = x[idx]
        keep = n <= xi * xi
        wts = lam[keep].copy()
        if weight == "tapered":
            lx = math.log(xi)
            tail = n[keep] > xi
            wts[tail] *= 2.0 - logn[keep][tail] / lx
        out[idx] = 2.0 * np.sum(wts * np.cos(t[idx] * logn[keep]) / np.sqrt(n[keep]))
    return (main - out)[()]


@lru_cache(maxsize=1)
def _psi_taylor(order=48, radius=1.0):
    """Taylor coefficients of cos(2pi(p^2 - p - 1/16)) / cos(2pi p) about p = 1/2."""
    m = 256
    phi = 2 * np.pi * np.arange(m) / m
    p = 0.5 + radius * np.exp(1j * phi)
    vals = np.cos(2 * np.pi * (p * p - p - 1.0 / 16)) / np.cos(2 * np.pi * p)
    coef = np.fft.fft(vals) / m
    return (coef[:order] / radius ** np.arange(order)).real


def _psi_derivative(u, k):
    a = _psi_taylor()
    j = np.arange(k, len(a))
    fall = np.array([math.perm(int(i), k) for i in j], dtype=float)
    return np.polynomial.polynomial.polyval(u, a[k:] * fall)


def zeta_afe(t: float, acc: EvalAccuracy = DEFAULT_ACCURACY, corrections: int = 3):
    """zeta(1/2 + it) from the approximate functional equation at X = sqrt(t/2pi).

    Both sums then have floor(sqrt(t/2pi)) terms.  ``corrections`` adds that
    many leading Riemann-Siegel remainder terms (0 gives the bare two-sum
    formula, whose error is O(t^-1/4)).
    """
    if t < 10:
        raise DomainError(f"zeta_afe needs t >= 10, got {t}")
    if not 0 <= corrections <= 3:
        raise ValueError("corrections must be 0..3")
    a = math.sqrt(t / TWO_PI)
    m = math.floor(a)
    k = np.arange(1, m + 1)
    s = 0.5 + 1j * t
    first = np.sum(k ** (-s))
    second = np.sum(k ** (-(1 - s)))
    value = first + np.exp(log_chi_half(t)) * second
    if corrections:
        u = (a - m) - 0.5
        terms = [
            _psi_derivative(u, 0),
            -_psi_derivative(u, 3) / (96 * math.pi**2),
            _psi_derivative(u, 2) / (64 * math.pi**2) + _psi_derivative(u, 6) / (18432 * math.pi**4),
        ][:corrections]
        rem = sum(c * a ** (-i) for i, c in enumerate(terms))
        sign = -1.0 if m % 2 == 0 else 1.0
        value += np.exp(-1j * riemann_siegel_theta(t)) * sign * a ** -0.5 * rem
    return complex(value)
