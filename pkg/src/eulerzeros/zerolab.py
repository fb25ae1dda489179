"""Zero tables, the counting function, and approximate-zero matching.

Approximate zeros are the solutions of F_X*(t) = (2m + 1) pi.  The branch m
is fixed by the true zero being matched (m = N(gamma_n) - 2, i.e. H_X* takes
the value N - 1/2), so a solution is never picked off a neighbouring step of
the staircase.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MonotonicityError, NoRootInWindow, OutOfRange, ParseError
from .specfun import T_MIN
from .zetax import DEFAULT_PRODUCT, PrimePowerTable, Product, XMode, phase, product_length, \
    von_mangoldt_table

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
RESIDUAL_TOL = 1e-9
MATCH_FIELDS = ["n", "gamma", "gamma_tilde", "delta", "x_eff", "branch_k", "flag"]


@dataclass(frozen=True)
class ZeroTable:
    """Ascending zeta-zero ordinates; entry i is zero number first_index + i."""

    ordinates: np.ndarray
    source: str = ""
    first_index: int = 1

    def __post_init__(self):
        g = np.asarray(self.ordinates, dtype=float)
        object.__setattr__(self, "ordinates", g)
        if g.size == 0:
            raise ValueError("zero table is empty")
        bad = np.nonzero(np.diff(g) <= 0)[0]
        if bad.size:
            i = int(bad[0]) + 1
            raise MonotonicityError(f"ordinate #{i + self.first_index} ({g[i]}) does not exceed its predecessor", i)
        if self.first_index == 1 and g[0] <= 14:
            raise ValueError(f"first zeta zero must exceed 14, got {g[0]}")

    @property
    def count(self):
        return len(self.ordinates)

    @property
    def last_index(self):
        return self.first_index + self.count - 1

    def __len__(self):
        return self.count

    def gamma(self, n):
        """Ordinate(s) of zero number n (1-based, absolute)."""
        i = np.asarray(n) - self.first_index
        if np.any(i < 0) or np.any(i >= self.count):
            raise OutOfRange(f"zero index {n} outside table [{self.first_index}, {self.last_index}]")
        return self.ordinates[i]

    def head(self, count):
        return ZeroTable(self.ordinates[:count], self.source, self.first_index)


def load_zero_table(path) -> ZeroTable:
    """Read one ordinate per line, optionally preceded by its index.

    Lines starting with '#' and blank lines are skipped.  With an index
    column the first index sets ``first_index``.
    """
    path = Path(path)
    values, indices = [], []
    ncols = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if ncols is None:
                ncols = len(parts)
                if ncols not in (1, 2):
                    raise ParseError(f"expected 1 or 2 fields, got {ncols}", lineno)
            elif len(parts) != ncols:
                raise ParseError(f"expected {ncols} fields, got {len(parts)}", lineno)
            try:
                values.append(float(parts[-1]))
                if ncols == 2:
                    indices.append(int(parts[0]))
            except ValueError:
                raise ParseError(f"cannot parse {text!r}", lineno) from None
            if not math.isfinite(values[-1]):
                raise ParseError(f"non-finite ordinate {text!r}", lineno)
    if not values:
        raise ParseError(f"no ordinates in {path}")
    first = 1
    if indices:
        first = indices[0]
        step = np.diff(indices)
        if np.any(step != 1):
            i = int(np.nonzero(step != 1)[0][0]) + 1
            raise MonotonicityError(f"index column jumps at entry {i}", i)
    return ZeroTable(np.array(values), source=str(path), first_index=first)


def count_zeros(table: ZeroTable, t) -> int:
    """N(t): number of zeros with 0 < gamma <= t."""
    if t >= table.ordinates[-1]:
        raise OutOfRange(f"t={t} is at or beyond the last tabulated ordinate {table.ordinates[-1]}")
    if table.first_index > 1 and t < table.ordinates[0]:
        raise OutOfRange(f"t={t} precedes the first tabulated ordinate")
    return int(np.searchsorted(table.ordinates, t, side="right")) + table.first_index - 1


@dataclass(frozen=True)
class ZeroSearchConfig:
    window_scale: float = 3.0
    root_tol: float = 1e-10
    t_min: float = T_MIN
    chi_method: str = "auto"
    product: Product = DEFAULT_PRODUCT
    grid_points: int = 25
    max_doublings: int = 3

    def __post_init__(self):
        if not self.window_scale > 0:
            raise ValueError("window_scale must be positive")
        if not 0 < self.root_tol < 1e-6:
            raise ValueError("root_tol must lie in (0, 1e-6)")
        if self.grid_points < 3:
            raise ValueError("grid_points must be >= 3")


@dataclass(frozen=True)
class MatchedZero:
    n: int
    gamma: float
    gamma_tilde: float
    delta: float
    x_eff: float
    branch_k: int
    flag: str = ""

    @property
    def anomalous(self):
        return "anomaly" in self.flag.split("|")

    @property
    def multiple(self):
        return "multiple" in self.flag.split("|")

    def row(self):
        return [self.n, repr(self.gamma), repr(self.gamma_tilde), repr(self.delta),
                repr(self.x_eff), self.branch_k, self.flag]


@dataclass
class MatchRun:
    """Result of a batch: matched records plus (n, reason) for every failure."""

    matches: list[MatchedZero] = field(default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)

    def __iter__(self):
        return iter(self.matches)

    def __len__(self):
        return len(self.matches)

    def clean(self):
        """Records not flagged as anomalies."""
        return [m for m in self.matches if not m.anomalous]


def prime_table_for(table: ZeroTable, mode: XMode, last_index: int, product: Product = DEFAULT_PRODUCT,
                    extra: float = 0.0) -> PrimePowerTable:
    """A prime-power table long enough for every ordinate up to zero #last_index."""
    t_hi = float(table.gamma(last_index)) + extra + 2.0
    x = mode.x if mode.kind == "fixed" else math.floor(t_hi / TWO_PI)
    return von_mangoldt_table(max(2, product_length(max(x, 2), product)))


def _branch(n):
    # H = F/2pi + 1 equals N(gamma_n) - 1/2 at the approximate zero
    return n - 2


def _half_gaps(table, idx):
    g = table.ordinates
    i = idx - table.first_index
    left = np.where(i > 0, g[i] - g[np.maximum(i - 1, 0)], np.inf)
    right = np.where(i < table.count - 1, g[np.minimum(i + 1, table.count - 1)] - g[i], np.inf)
    return 0.5 * np.minimum(left, right)


def _refine(fn, a, b, fa, fb, cfg):
    """Vectorized Illinois iteration on brackets [a, b] with fa * fb <= 0."""
    a, b, fa, fb = a.copy(), b.copy(), fa.copy(), fb.copy()
    side = np.zeros(a.shape, dtype=int)
    active = np.ones(a.shape, dtype=bool)
    for _ in range(200):
        active &= (np.abs(b - a) > cfg.root_tol) | (np.minimum(np.abs(fa), np.abs(fb)) > 0.1 * RESIDUAL_TOL)
        active &= (fa != 0) & (fb != 0)
        if not active.any():
            break
        ia = np.nonzero(active)[0]
        denom = fb[ia] - fa[ia]
        c = np.where(denom != 0, (a[ia] * fb[ia] - b[ia] * fa[ia]) / np.where(denom != 0, denom, 1), 0.5 * (a[ia] + b[ia]))
        stuck = (c <= np.minimum(a[ia], b[ia])) | (c >= np.maximum(a[ia], b[ia]))
        c = np.where(stuck, 0.5 * (a[ia] + b[ia]), c)
        if np.all(stuck & (np.abs(b[ia] - a[ia]) <= 4 * np.spacing(np.abs(a[ia])))):
            break
        fc = fn(c, ia)
        same = np.sign(fc) == np.sign(fb[ia])
        # c replaces b when it sits on b's side, else a
        jb = ia[same]
        a_keep = jb
        b[jb], fb[jb] = c[same], fc[same]
        fa[a_keep] = np.where(side[a_keep] == 1, fa[a_keep] * 0.5, fa[a_keep])
        side[jb] = 1
        ja = ia[~same]
        a[ja], fa[ja] = b[ja], fb[ja]
        b[ja], fb[ja] = c[~same], fc[~same]
        side[ja] = -1
    return a, b, fa, fb


def _search(table: ZeroTable, idx: np.ndarray, mode: XMode, cfg: ZeroSearchConfig,
            primes: PrimePowerTable | None = None):
    idx = np.asarray(idx, dtype=int)
    g = np.asarray(table.gamma(idx), dtype=float)
    if np.any(g < cfg.t_min):
        raise OutOfRange(f"zero ordinate below t_min={cfg.t_min}")
    if np.any(idx >= table.last_index):
        raise OutOfRange("table must extend past the matched zero")
    if primes is None:
        primes = prime_table_for(table, mode, int(idx.max()), cfg.product)
    x = np.asarray(mode.x_at(g), dtype=float) * np.ones_like(g)
    m = _branch(idx)
    target = (2 * m + 1) * math.pi
    base_w = cfg.window_scale / np.log(g / TWO_PI)

    def fn(t, rows):
        return phase(t, x[rows], primes, cfg.chi_method, t_min=cfg.t_min, product=cfg.product) - target[rows]

    k = cfg.grid_points
    a = np.full(g.shape, np.nan)
    b = np.full(g.shape, np.nan)
    fa = np.full(g.shape, np.nan)
    fb = np.full(g.shape, np.nan)
    nroots = np.zeros(g.shape, dtype=int)
    pending = np.arange(g.size)
    w = base_w.copy()
    for _ in range(cfg.max_doublings + 1):
        if pending.size == 0:
            break
        lo = np.maximum(g[pending] - w[pending], cfg.t_min)
        hi = g[pending] + w[pending]
        grid = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, k)[None, :]
        rows = np.repeat(pending, k)
        vals = fn(grid.ravel(), rows).reshape(grid.shape)
        flips = np.sign(vals[:, :-1]) * np.sign(vals[:, 1:]) <= 0
        found = flips.any(axis=1)
        # interpolated root position of each bracket; pick nearest to gamma
        v0, v1 = vals[:, :-1], vals[:, 1:]
        g0, g1 = grid[:, :-1], grid[:, 1:]
        with np.errstate(invalid="ignore", divide="ignore"):
            est = np.where(v1 != v0, g0 - v0 * (g1 - g0) / (v1 - v0), g0)
        dist = np.where(flips, np.abs(est - g[pending][:, None]), np.inf)
        j = np.argmin(dist, axis=1)
        r = np.arange(pending.size)
        sel = pending[found]
        a[sel], b[sel] = g0[r, j][found], g1[r, j][found]
        fa[sel], fb[sel] = v0[r, j][found], v1[r, j][found]
        nroots[sel] = flips.sum(axis=1)[found]
        pending = pending[~found]
        w[pending] *= 2.0
    ok = ~np.isnan(a)
    if ok.any():
        ii = np.nonzero(ok)[0]
        ra, rb, rfa, rfb = _refine(lambda t, rows: fn(t, ii[rows]), a[ii], b[ii], fa[ii], fb[ii], cfg)
        root = np.where(np.abs(rfa) <= np.abs(rfb), ra, rb)
        res = np.minimum(np.abs(rfa), np.abs(rfb))
    else:
        ii = np.array([], dtype=int)
        root = res = np.array([])
    return g, x, m, ok, ii, root, res, nroots


def _records(table, idx, mode, cfg, primes):
    g, x, m, ok, ii, root, res, nroots = _search(table, idx, mode, cfg, primes)
    half = _half_gaps(table, np.asarray(idx, dtype=int))
    out = {}
    for pos, i in enumerate(ii):
        delta = float(g[i] - root[pos])
        flags = []
        if abs(delta) >= half[i]:
            flags.append("anomaly")
        if nroots[i] > 1:
            flags.append("multiple")
        if res[pos] > RESIDUAL_TOL:
            flags.append("residual")
        out[int(idx[i])] = MatchedZero(int(idx[i]), float(g[i]), float(root[pos]), delta,
                                       float(x[i]), int(m[i]), "|".join(flags))
    missing = [int(idx[i]) for i in np.nonzero(~ok)[0]]
    return out, missing


def find_approx_zero(n: int, table: ZeroTable, mode: XMode, cfg: ZeroSearchConfig = ZeroSearchConfig(),
                     primes: PrimePowerTable | None = None) -> MatchedZero:
    """Approximate zero of zeta_X* belonging to true zero number n."""
    if n < table.first_index:
        raise OutOfRange(f"zero index {n} precedes the table")
    found, missing = _records(table, np.array([n]), mode, cfg, primes)
    if missing:
        raise NoRootInWindow(f"no solution of F_X* = {2 * _branch(n) + 1}pi near zero #{n}")
    return found[n]


def match_run(indices, table: ZeroTable, mode: XMode, cfg: ZeroSearchConfig = ZeroSearchConfig(),
              primes: PrimePowerTable | None = None, batch: int = 256) -> MatchRun:
    """Match every zero index in ``indices``; failures are reported, never filled in."""
    idx = np.asarray(list(indices), dtype=int)
    run = MatchRun()
    if idx.size == 0:
        return run
    if primes is None:
        primes = prime_table_for(table, mode, int(idx.max()), cfg.product)
    found = {}
    for start in range(0, idx.size, batch):
        part = idx[start : start + batch]
        got, missing = _records(table, part, mode, cfg, primes)
        found.update(got)
        run.failures.extend((n, "no root in window") for n in missing)
    run.matches = [found[n] for n in sorted(found)]
    run.failures.sort()
    if run.failures:
        log.warning("%d of %d zeros had no approximate zero in the search window", len(run.failures), idx.size)
    return run


def write_matches(path, matches):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(MATCH_FIELDS)
        for m in matches:
            w.writerow(m.row())


def read_matches(path) -> list[MatchedZero]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [MatchedZero(int(r["n"]), float(r["gamma"]), float(r["gamma_tilde"]), float(r["delta"]),
                        float(r["x_eff"]), int(r["branch_k"]), r["flag"]) for r in rows]
