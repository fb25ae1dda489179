"""Statistics over matched zeros: slopes, scaled differences, neighbour models,
moving variances and the separable A(X) B(t) variance fit."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import AlignmentError, EmptySample, InsufficientData, OutOfRange, SingularFit
from .specfun import im_f2_imag_axis, lambert_w0
from .zerolab import MatchedZero, ZeroSearchConfig, ZeroTable, prime_table_for
from .zetax import PrimePowerTable, XMode, phase

TWO_PI = 2.0 * math.pi
ANOMALY_D = 0.3

Family = Literal["logpow", "lambertw", "pow", "powlog"]
FAMILIES = ("logpow", "lambertw", "pow", "powlog")


@dataclass(frozen=True)
class SlopeEstimate:
    n: int
    gamma: float
    slope: float
    r2: float
    sample_count: int

    @property
    def staircase_slope(self):
        """Slope of H = F/2pi + 1, the scale on which zero differences are measured."""
        return self.slope / TWO_PI


def ols_rows(x, y):
    """Row-wise least-squares slope and r^2 for 2-D arrays."""
    xm = x - x.mean(axis=1, keepdims=True)
    ym = y - y.mean(axis=1, keepdims=True)
    sxx = np.sum(xm * xm, axis=1)
    sxy = np.sum(xm * ym, axis=1)
    syy = np.sum(ym * ym, axis=1)
    slope = sxy / sxx
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(syy > 0, sxy * sxy / (sxx * syy), 1.0)
    return slope, np.clip(r2, 0.0, 1.0)


def estimate_slopes(indices, table: ZeroTable, mode: XMode, sample_count: int = 33,
                    cfg: ZeroSearchConfig = ZeroSearchConfig(),
                    primes: PrimePowerTable | None = None) -> list[SlopeEstimate]:
    """OLS slope of F_X* over [gamma - 1/gamma, gamma + 1/gamma] for each zero."""
    if sample_count < 8:
        raise ValueError("sample_count must be >= 8")
    idx = np.asarray(list(indices), dtype=int)
    if idx.size == 0:
        return []
    g = np.asarray(table.gamma(idx), dtype=float)
    if primes is None:
        primes = prime_table_for(table, mode, int(idx.max()), cfg.product)
    x = np.asarray(mode.x_at(g), dtype=float) * np.ones_like(g)
    u = np.linspace(-1.0, 1.0, sample_count)
    ts = g[:, None] + u[None, :] / g[:, None]
    f = phase(ts.ravel(), np.repeat(x, sample_count), primes, cfg.chi_method,
              t_min=cfg.t_min, product=cfg.product).reshape(ts.shape)
    slope, r2 = ols_rows(ts, f)
    return [SlopeEstimate(int(n), float(gg), float(s), float(r), sample_count)
            for n, gg, s, r in zip(idx, g, slope, r2)]


def estimate_slope(n: int, table: ZeroTable, mode: XMode, sample_count: int = 33,
                   cfg: ZeroSearchConfig = ZeroSearchConfig(),
                   primes: PrimePowerTable | None = None) -> SlopeEstimate:
    return estimate_slopes([n], table, mode, sample_count, cfg, primes)[0]


@dataclass(frozen=True)
class ScaledDifference:
    n: int
    value: float
    flagged: bool = False


def scaled_differences(matches: Sequence[MatchedZero], slopes: Sequence[SlopeEstimate]) -> list[ScaledDifference]:
    """D_n = (slope of H around gamma_n) * delta_n, with H = F_X*/2pi + 1.

    |D_n| >= 0.3 is flagged, not dropped.
    """
    if len(matches) != len(slopes):
        raise AlignmentError(f"{len(matches)} matches vs {len(slopes)} slopes")
    out = []
    for m, s in zip(matches, slopes):
        if m.n != s.n:
            raise AlignmentError(f"match #{m.n} paired with slope #{s.n}")
        d = s.staircase_slope * m.delta
        out.append(ScaledDifference(m.n, d, abs(d) >= ANOMALY_D))
    return out


def zero_sum(n: int, table: ZeroTable, log_x: float, half_width: float = 50.0) -> float:
    """-(1/pi) sum over 0 < |gamma - gamma_n| < half_width of Im F2(i (gamma_n - gamma) log X)."""
    g = table.ordinates
    gn = float(table.gamma(n))
    lo, hi = np.searchsorted(g, [gn - half_width, gn + half_width])
    near = g[lo:hi]
    near = near[near != gn]
    return float(-np.sum(im_f2_imag_axis((gn - near) * log_x)) / math.pi)


@dataclass(frozen=True)
class ModelValue:
    n: int
    pairs: int
    value: float


def _model_log_x(mode: XMode, gamma):
    # the displayed model uses log(gamma / 2pi) in varying mode, not log floor(.)
    return math.log(mode.x) if mode.kind == "fixed" else math.log(gamma / TWO_PI)


def neighbor_model(n: int, k: int, table: ZeroTable, mode: XMode) -> ModelValue:
    """h_k(n) = -(1/pi) sum_{0<|j-n|<=k} Im F2(i (gamma_n - gamma_j) log X)."""
    if k < 1:
        raise ValueError("neighbour model needs at least one pair")
    if n - k < table.first_index or n + k > table.last_index:
        raise OutOfRange(f"zero #{n} lacks {k} neighbours on each side in the table")
    gn = float(table.gamma(n))
    j = np.array([n + o for o in range(-k, k + 1) if o != 0])
    x = (gn - table.gamma(j)) * _model_log_x(mode, gn)
    return ModelValue(n, k, float(-np.sum(im_f2_imag_axis(x)) / math.pi))


def neighbor_models(indices, k: int, table: ZeroTable, mode: XMode) -> list[ModelValue]:
    return [neighbor_model(int(n), k, table, mode) for n in indices]


def model_accuracy(diffs: Sequence[ScaledDifference], models: Sequence[ModelValue], start: int, end: int,
                   threshold: float = 0.2) -> float:
    """Percentage of n in [start, end] with |D_n - M_n| / |D_n| < threshold.

    Flagged records and D_n = 0 are left out of the sample.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    mm = {m.n: m.value for m in models}
    dd = {d.n: d for d in diffs}
    if set(mm) != set(dd):
        raise AlignmentError("scaled differences and model values cover different zeros")
    hits = total = 0
    for n in range(start, end + 1):
        d = dd.get(n)
        if d is None or d.flagged or d.value == 0:
            continue
        total += 1
        hits += abs(d.value - mm[n]) / abs(d.value) < threshold
    if total == 0:
        raise EmptySample(f"no usable samples in [{start}, {end}]")
    return 100.0 * hits / total


@dataclass
class VarianceSeries:
    mode: XMode
    window: int
    n: np.ndarray
    gamma: np.ndarray
    vbar: np.ndarray
    partial: np.ndarray

    @property
    def points(self):
        return list(zip(self.n.tolist(), self.gamma.tolist(), self.vbar.tolist()))

    def full(self):
        """(gamma, vbar) restricted to complete windows."""
        keep = ~self.partial
        return self.gamma[keep], self.vbar[keep]

    def select(self, lo, hi):
        """Sub-series with lo <= n <= hi."""
        keep = (self.n >= lo) & (self.n <= hi)
        return VarianceSeries(self.mode, self.window, self.n[keep], self.gamma[keep], self.vbar[keep],
                              self.partial[keep])


def scaled_squared_errors(matches: Sequence[MatchedZero]):
    """V_n = (delta_n * log(gamma_n / 2pi) / 2pi)^2."""
    g = np.array([m.gamma for m in matches], dtype=float)
    d = np.array([m.delta for m in matches], dtype=float)
    return (d * np.log(g / TWO_PI) / TWO_PI) ** 2


def moving_variance(matches: Sequence[MatchedZero], window: int, mode: XMode | None = None,
                    exclude_flagged: bool = True) -> VarianceSeries:
    """Centered moving mean of V_n; windows cut short by either end are marked partial."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if exclude_flagged:
        matches = [m for m in matches if not m.anomalous]
    if mode is None:
        mode = XMode.fixed(matches[0].x_eff) if matches and len({m.x_eff for m in matches}) == 1 \
            else XMode.varying()
    v = scaled_squared_errors(matches)
    size = v.size
    csum = np.concatenate([[0.0], np.cumsum(v)])
    i = np.arange(size)
    lo = i - window // 2
    hi = lo + window
    partial = (lo < 0) | (hi > size)
    lo, hi = np.clip(lo, 0, size), np.clip(hi, 0, size)
    with np.errstate(invalid="ignore"):
        vbar = v.copy() if window == 1 else (csum[hi] - csum[lo]) / (hi - lo)
    return VarianceSeries(mode, window, np.array([m.n for m in matches], dtype=int),
                          np.array([m.gamma for m in matches], dtype=float), vbar, partial)


@dataclass
class FitResult:
    """y = offset + coefficient * B(x; exponents)."""

    family: str
    exponents: list[float]
    coefficient: float
    offset: float | None = None
    r2: float = 0.0
    r2_uncentered: float = 0.0
    sample_range: tuple[float, float] | None = None

    def basis(self, x):
        return _basis(self.family, np.asarray(x, dtype=float), self.exponents)

    def predict(self, x):
        return (self.offset or 0.0) + self.coefficient * self.basis(x)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def _base(family, x):
    if family == "logpow":
        return np.log(x)
    if family == "lambertw":
        return lambert_w0(x)
    if family == "pow":
        return x
    raise ValueError(family)


def _basis(family, x, ks):
    if family == "powlog":
        return x ** ks[0] * np.log(x) ** ks[1]
    return _base(family, x) ** ks[0]


def _linear(b, y, offset):
    if offset:
        a = np.vstack([b, np.ones_like(b)]).T
        (coef, off), *_ = np.linalg.lstsq(a, y, rcond=None)
        return coef, off
    bb = np.dot(b, b)
    return (np.dot(b, y) / bb if bb > 0 else 0.0), 0.0


def _profile_sse(family, x, y, ks, offset):
    b = _basis(family, x, ks)
    if not np.all(np.isfinite(b)):
        return np.inf
    coef, off = _linear(b, y, offset)
    r = y - off - coef * b
    return float(np.dot(r, r))


def fit_family(xs, ys, family: Family, fixed_exponent=None, offset: bool = False,
               k_bounds=(-8.0, 8.0)) -> FitResult:
    """Least-squares fit of y = [c +] a B(x)^k for the chosen family.

    Exponents absent from ``fixed_exponent`` are found by a coarse profile scan
    followed by a joint least-squares polish.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size < 10 or x.size != y.size:
        raise InsufficientData("need at least 10 paired points")
    if np.all(x == x[0]):
        raise SingularFit("all abscissae are equal")
    if family in ("logpow", "powlog") and np.any(x <= 1):
        raise ValueError("log-based families need x > 1")
    nexp = 2 if family == "powlog" else 1
    if fixed_exponent is not None:
        ks = list(np.atleast_1d(np.asarray(fixed_exponent, dtype=float)))
        if len(ks) != nexp:
            raise ValueError(f"{family} takes {nexp} exponent(s)")
    else:
        grid = np.arange(k_bounds[0], k_bounds[1] + 1e-9, 0.1)
        if nexp == 1:
            sse = [_profile_sse(family, x, y, [k], offset) for k in grid]
            k0 = grid[int(np.argmin(sse))]
            res = minimize_scalar(lambda k: _profile_sse(family, x, y, [k], offset),
                                  bounds=(k0 - 0.1, k0 + 0.1), method="bounded", options={"xatol": 1e-10})
            ks = [float(res.x)]
        else:
            def inner(k1):
                r = minimize_scalar(lambda k2: _profile_sse(family, x, y, [k1, k2], offset),
                                    bounds=k_bounds, method="bounded", options={"xatol": 1e-8})
                return r.fun, r.x
            outer = [inner(k1)[0] for k1 in grid]
            k1 = grid[int(np.argmin(outer))]
            r1 = minimize_scalar(lambda k: inner(k)[0], bounds=(k1 - 0.1, k1 + 0.1), method="bounded",
                                 options={"xatol": 1e-8})
            ks = [float(r1.x), float(inner(r1.x)[1])]
        ks = _polish(family, x, y, ks, offset)
    b = _basis(family, x, ks)
    coef, off = _linear(b, y, offset)
    pred = off + coef * b
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_raw = float(np.sum(y * y))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    r2u = 1.0 - ss_res / ss_raw if ss_raw > 0 else 1.0
    return FitResult(family, [float(k) for k in ks], float(coef), float(off) if offset else None,
                     float(min(max(r2, 0.0), 1.0)), float(min(max(r2u, 0.0), 1.0)),
                     (float(x.min()), float(x.max())))


def _polish(family, x, y, ks, offset):
    """Joint least-squares refinement of the exponents (coefficients profiled out)."""
    scale = max(float(np.sqrt(np.mean(y * y))), 1e-300)

    def resid(p):
        b = _basis(family, x, list(p))
        coef, off = _linear(b, y, offset)
        return (y - off - coef * b) / scale

    try:
        sol = least_squares(resid, ks, xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
    except ValueError:
        return ks
    better = np.sum(sol.fun ** 2) <= np.sum(resid(ks) ** 2)
    return [float(v) for v in sol.x] if better and np.all(np.isfinite(sol.x)) else ks


@dataclass
class SeparableFit:
    k_star: float
    a_table: dict[float, float]
    a_fit: FitResult
    b_family: str
    mismatch: float
    scan: list[tuple[float, float]] = field(default_factory=list)


def _coef_fixed(t, v, family, k):
    b = _basis(family, t, [k])
    return float(np.dot(b, v) / np.dot(b, b))


def fit_separable(variances: dict, b_family: Family, short_range: tuple[int, int], long_range: tuple[int, int],
                  probe_x: float = 20, a_family: Family | None = None, k_range=(1.0, 8.0),
                  k_step: float = 0.1) -> SeparableFit:
    """Separable fit V(X, t) ~ A(X) B(t)^k.

    At probe_x the coefficient of B^k is fitted on the short and on the long
    range; k* is where the two coefficients agree (minimum of |log(a1/a2)|,
    grid then bounded refinement).  A(X) is then the coefficient of B^k* for
    every X, and A is fitted to ``a_family`` (default: same as B).
    """
    if b_family == "powlog":
        raise ValueError("the separable procedure scans a single exponent; use logpow, lambertw or pow")
    if probe_x not in variances:
        raise InsufficientData(f"no variance series for probe X = {probe_x}")
    probe = variances[probe_x]
    t_s, v_s = probe.select(*short_range).full()
    t_l, v_l = probe.select(*long_range).full()
    if t_s.size < 10 or t_l.size < 10:
        raise InsufficientData("probe series too short for the requested ranges")
    if probe.n.max() < long_range[1] * 0.98:
        raise InsufficientData(f"probe series ends at zero #{probe.n.max()}, long range needs {long_range[1]}")

    def mismatch(k):
        return abs(math.log(_coef_fixed(t_s, v_s, b_family, k) / _coef_fixed(t_l, v_l, b_family, k)))

    grid = np.arange(k_range[0], k_range[1] + 1e-9, k_step)
    scan = [(float(k), mismatch(k)) for k in grid]
    k0 = grid[int(np.argmin([m for _, m in scan]))]
    lo, hi = max(k_range[0], k0 - k_step), min(k_range[1], k0 + k_step)
    res = minimize_scalar(mismatch, bounds=(lo, hi), method="bounded", options={"xatol": 1e-6})
    k_star = float(res.x)
    a_table = {}
    for x, series in sorted(variances.items()):
        t, v = series.select(*long_range).full()
        if t.size >= 10:
            a_table[x] = _coef_fixed(t, v, b_family, k_star)
    if len(a_table) < 10:
        raise InsufficientData(f"only {len(a_table)} X values with usable series; need 10")
    xs = np.array(list(a_table), dtype=float)
    a_fit = fit_family(xs, np.array(list(a_table.values())), a_family or b_family)
    return SeparableFit(k_star, a_table, a_fit, b_family, float(res.fun), scan)


@dataclass
class Histogram:
    lo: float
    hi: float
    bin_width: float
    centers: np.ndarray
    counts: np.ndarray
    underflow: int = 0
    overflow: int = 0

    @property
    def bins(self):
        return list(zip(self.centers.tolist(), self.counts.tolist()))

    def mass(self, a, b):
        """Count in bins whose centers fall inside [a, b]."""
        keep = (self.centers >= a) & (self.centers <= b)
        return int(self.counts[keep].sum())


def histogram(values, bin_width: float, range: tuple[float, float]) -> Histogram:
    """Half-open bins [lo + i w, lo + (i + 1) w); out-of-range values go to under/overflow."""
    lo, hi = range
    if bin_width <= 0 or not lo < hi:
        raise ValueError("need bin_width > 0 and lo < hi")
    v = np.asarray(values, dtype=float)
    nbins = int(math.ceil((hi - lo) / bin_width - 1e-9))
    idx = np.floor((v - lo) / bin_width).astype(int)
    inside = (v >= lo) & (v < hi) & (idx < nbins)
    counts = np.bincount(idx[inside], minlength=nbins)[:nbins]
    centers = lo + (np.arange(nbins) + 0.5) * bin_width
    return Histogram(lo, hi, bin_width, centers, counts, int(np.sum(v < lo)), int(np.sum(~inside & (v >= lo))))
