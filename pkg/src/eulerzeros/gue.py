"""3x3 GUE consecutive eigenvalue spacings: sampling, closed-form joint
density, its normalizing constant and a numerical check of the marginalization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

CHUNK = 100_000
TRUNCATE = 14.0  # exp(-TRUNCATE^2 / 3) ~ 1e-29 beyond this edge


@dataclass(frozen=True)
class SpacingSample:
    alpha: float
    beta: float


@dataclass
class Spacings:
    """alpha = l1 - l2, beta = l2 - l3 for eigenvalues l1 >= l2 >= l3."""

    alpha: np.ndarray
    beta: np.ndarray

    def __len__(self):
        return self.alpha.size

    def __iter__(self):
        for a, b in zip(self.alpha.tolist(), self.beta.tolist()):
            yield SpacingSample(a, b)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("alpha,beta\n")
            for a, b in zip(self.alpha.tolist(), self.beta.tolist()):
                fh.write(f"{a!r},{b!r}\n")


def _gue_block(rng, count):
    h = np.zeros((count, 3, 3), dtype=complex)
    d = rng.standard_normal((count, 3))
    h[:, [0, 1, 2], [0, 1, 2]] = d
    off = (rng.standard_normal((count, 3)) + 1j * rng.standard_normal((count, 3))) * math.sqrt(0.5)
    for k, (i, j) in enumerate(((0, 1), (0, 2), (1, 2))):
        h[:, i, j] = off[:, k]
        h[:, j, i] = np.conj(off[:, k])
    lam = np.linalg.eigvalsh(h)  # ascending
    return lam[:, 2] - lam[:, 1], lam[:, 1] - lam[:, 0]


def sample_gue3(count: int, seed: int) -> Spacings:
    """Spacings of `count` GUE matrices with weight exp(-tr H^2 / 2).

    Each block of CHUNK matrices gets its own child of SeedSequence(seed), so
    the stream only depends on (count, seed).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    blocks = -(-count // CHUNK)
    children = np.random.SeedSequence(seed).spawn(blocks)
    alpha, beta = [], []
    for b, child in enumerate(children):
        size = min(CHUNK, count - b * CHUNK)
        a, bb = _gue_block(np.random.default_rng(child), size)
        alpha.append(a)
        beta.append(bb)
    return Spacings(np.concatenate(alpha), np.concatenate(beta))


def spacing_kernel(alpha, beta):
    """Unnormalized a^2 b^2 (a+b)^2 exp(-(a^2 + ab + b^2)/3)."""
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    return a * a * b * b * (a + b) ** 2 * np.exp(-(a * a + a * b + b * b) / 3.0)


def normalizing_constant(quad_points: int = 128) -> float:
    """1 / integral of spacing_kernel over the positive quadrant.

    Gauss-Legendre on [0, TRUNCATE]^2, split into unit panels per axis.
    """
    if quad_points < 64:
        raise ValueError("quad_points must be >= 64")
    panels = int(TRUNCATE)
    per = max(4, -(-quad_points // panels))
    nodes, weights = np.polynomial.legendre.leggauss(per)
    edges = np.linspace(0.0, TRUNCATE, panels + 1)
    half = 0.5 * np.diff(edges)
    x = (edges[:-1, None] + half[:, None] * (nodes[None, :] + 1.0)).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    total = w @ spacing_kernel(x[:, None], x[None, :]) @ w
    return float(1.0 / total)


def spacing_density(alpha, beta, c: float | None = None):
    """Normalized joint density of (alpha, beta)."""
    if c is None:
        c = normalizing_constant()
    return c * spacing_kernel(alpha, beta)


def eigen_density(l1, l2, l3):
    """Unnormalized ordered-eigenvalue density exp(-sum l^2 / 2) * Vandermonde^2."""
    vand = (l1 - l2) * (l1 - l3) * (l2 - l3)
    return np.exp(-0.5 * (l1 * l1 + l2 * l2 + l3 * l3)) * vand * vand


@dataclass
class DerivationReport:
    alphas: np.ndarray
    betas: np.ndarray
    ratios: np.ndarray

    @property
    def constant(self):
        return float(np.mean(self.ratios))

    @property
    def spread(self):
        return float(self.ratios.max() / self.ratios.min() - 1.0)


def verify_derivation(points: int = 100, seed: int = 0) -> DerivationReport:
    """Integrate the eigenvalue density along (a+b+x, b+x, x) over x and
    compare with the closed-form kernel at random (a, b)."""
    rng = np.random.default_rng(seed)
    ab = rng.uniform(0.05, 4.0, size=(points, 2))
    ratios = np.empty(points)
    for i, (a, b) in enumerate(ab):
        val, _ = integrate.quad(lambda x: eigen_density(a + b + x, b + x, x), -np.inf, np.inf,
                                epsabs=0.0, epsrel=1e-13, limit=200)
        ratios[i] = val / spacing_kernel(a, b)
    return DerivationReport(ab[:, 0], ab[:, 1], ratios)


@dataclass(frozen=True)
class DensityCheck:
    c_numeric: float
    ks_stat: float
    sup_density_gap: float
    samples: int
    grid: int = 40
    extent: float = 4.0

    def report(self):
        return "\n".join(f"{k}={v!r}" for k, v in (
            ("c_numeric", self.c_numeric), ("ks_stat", self.ks_stat),
            ("sup_density_gap", self.sup_density_gap), ("samples", self.samples),
            ("grid", self.grid), ("extent", self.extent)))


def _cell_means(edges, c):
    """Exact-enough cell averages of the density via 4x4 Gauss points."""
    nodes, weights = np.polynomial.legendre.leggauss(4)
    lo, hi = edges[:-1], edges[1:]
    pts = 0.5 * (lo[:, None] + hi[:, None]) + 0.5 * (hi - lo)[:, None] * nodes[None, :]
    w = 0.5 * weights
    f = spacing_density(pts[:, None, :, None], pts[None, :, None, :], c)
    return np.einsum("ijkl,k,l->ij", f, w, w)


def alpha_marginal_cdf(x, c: float | None = None):
    """P(alpha <= x) from the closed form, integrating beta analytically by quadrature."""
    if c is None:
        c = normalizing_constant()
    nodes, weights = np.polynomial.legendre.leggauss(80)
    bb = 0.5 * TRUNCATE * (nodes + 1.0)
    wb = 0.5 * TRUNCATE * weights
    out = []
    for xi in np.atleast_1d(x):
        aa = 0.5 * xi * (nodes + 1.0)
        wa = 0.5 * xi * weights
        out.append(c * wa @ spacing_kernel(aa[:, None], bb[None, :]) @ wb)
    return np.array(out)


def density_check(samples: Spacings, grid: int = 40, extent: float = 4.0, c: float | None = None) -> DensityCheck:
    """Compare the empirical joint density with the closed form on a grid over
    (0, extent]^2 (sup norm of the difference of cell averages), plus a KS
    distance for the alpha marginal."""
    if c is None:
        c = normalizing_constant()
    n = len(samples)
    edges = np.linspace(0.0, extent, grid + 1)
    counts, _, _ = np.histogram2d(samples.alpha, samples.beta, bins=[edges, edges])
    area = (extent / grid) ** 2
    gap = float(np.max(np.abs(counts / (n * area) - _cell_means(edges, c))))
    xs = np.sort(samples.alpha)
    probe = np.quantile(xs, np.linspace(0.0, 1.0, 401)[1:-1])
    ecdf = np.searchsorted(xs, probe, side="right") / n
    ks = float(np.clip(np.max(np.abs(ecdf - alpha_marginal_cdf(probe, c))), 0.0, 1.0))
    return DensityCheck(float(c), ks, gap, n, grid, extent)
