"""Tail index from the return-to-origin probability of shuffled sums.

For a sum X_n of n independent draws from a symmetric stable law of index
alpha, the density at the origin falls as n^(-1/alpha) (alpha = 2 is the
Gaussian). The returns are shuffled to destroy temporal correlation, cut
into non-overlapping blocks of n, and the density of the block sums at zero
is estimated with a small centered bin.

A truncated symmetric Levy sampler is included as a test oracle.
"""

from __future__ import annotations

import functools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _quad
from scipy.special import gamma as gamma_fn

from .dcca import loglog_fit
from .errors import FitError, NumericError, RangeError
from .ingest import ReturnSeries

DEFAULT_REALIZATIONS = 5000
K_POINTS = 2**16
X_POINTS = 2**13


@dataclass(frozen=True)
class LevyParams:
    alpha: float
    gamma: float = 1.0
    d: float = 10.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise RangeError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not self.gamma > 0:
            raise RangeError(f"gamma must be positive, got {self.gamma}")
        if not self.d > 0:
            raise RangeError(f"truncation d must be positive, got {self.d}")

    @property
    def c(self) -> float:
        """Normalization constant of the truncated density."""
        return _density_table(self.alpha, self.gamma, self.d)[2]


@dataclass(frozen=True)
class ReturnToOriginCurve:
    n_values: np.ndarray
    p_zero: np.ndarray
    stderr: np.ndarray
    realizations: int
    bin_width: float
    seed: int

    def __post_init__(self):
        if self.realizations < 1:
            raise RangeError("need at least one realization")


@dataclass(frozen=True)
class AlphaEstimate:
    alpha: float
    slope: float
    intercept: float
    fit_range: tuple
    stderr: float
    alpha_stderr: float

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "slope": self.slope,
            "intercept": self.intercept,
            "fit_range": list(self.fit_range),
            "stderr": self.stderr,
            "alpha_stderr": self.alpha_stderr,
        }


def levy_density_at_origin(alpha: float, gamma: float = 1.0) -> float:
    """Closed form of the untruncated symmetric Levy density at x = 0."""
    return gamma_fn(1 / alpha) / (alpha * math.pi * gamma ** (1 / alpha))


def return_to_origin_asymptote(n, alpha: float, gamma: float = 1.0):
    """P(X_n = 0) for a sum of n untruncated symmetric Levy variables."""
    return gamma_fn(1 / alpha) / (alpha * math.pi * (n * gamma) ** (1 / alpha))


@functools.lru_cache(maxsize=16)
def _density_table(alpha: float, gamma: float, d: float):
    # cutoff where the characteristic function drops below 1e-12
    k_max = (math.log(1e12) / gamma) ** (1 / alpha)
    k = np.linspace(0.0, k_max, K_POINTS)
    weights = np.full(K_POINTS, k[1] - k[0])
    weights[0] = weights[-1] = weights[0] / 2  # trapezoid rule
    kernel = weights * np.exp(-gamma * k**alpha) / math.pi
    peak = float(kernel.sum())  # L(0) by the same quadrature
    exact = levy_density_at_origin(alpha, gamma)
    if abs(peak - exact) > 1e-6 * exact:
        raise NumericError(
            f"Levy quadrature did not converge (L(0)={peak:.10g}, expected {exact:.10g})"
        )

    x = np.linspace(-d, d, X_POINTS)
    half = x[X_POINTS // 2 :]  # density is even; X_POINTS is even so the grid skips 0
    dens_half = np.empty(half.size)
    chunk = 256
    for start in range(0, half.size, chunk):
        xs = half[start : start + chunk]
        dens_half[start : start + chunk] = np.cos(np.outer(xs, k)) @ kernel
    dens = np.concatenate([dens_half[::-1], dens_half])

    if not np.isfinite(dens).all():
        raise NumericError("Levy quadrature produced non-finite values")
    if dens.min() < -1e-6 * dens.max():
        raise NumericError("Levy quadrature produced a negative density; refine the grid")
    dens = np.clip(dens, 0.0, None)
    mass = _quad.trapezoid(dens, x)
    c = 1.0 / mass
    cdf = _quad.cumulative_trapezoid(dens * c, x, initial=0.0)
    cdf /= cdf[-1]
    x.setflags(write=False)
    cdf.setflags(write=False)
    return x, dens * c, c, cdf


def truncated_levy_density(params: LevyParams):
    """Grid ``x`` on [-d, d] and the normalized truncated density on it."""
    x, dens, _, _ = _density_table(params.alpha, params.gamma, params.d)
    return x, dens


def sample_truncated_levy(params: LevyParams, count: int, seed=None) -> np.ndarray:
    """Draw ``count`` samples by inverse-CDF interpolation on the density grid."""
    x, _, _, cdf = _density_table(params.alpha, params.gamma, params.d)
    rng = np.random.default_rng(seed)
    u = rng.random(count)
    return np.interp(u, cdf, x)


def _count_hits(values, n_values, half_width, seeds):
    """Per-realization counts of block sums inside the zero bin."""
    hits = np.zeros((len(seeds), len(n_values)), dtype=np.int64)
    for r, ss in enumerate(seeds):
        perm = np.random.default_rng(ss).permutation(values)
        for j, n in enumerate(n_values):
            blocks = perm.size // n
            sums = perm[: blocks * n].reshape(blocks, n).sum(axis=1)
            hits[r, j] = np.count_nonzero(np.abs(sums) < half_width)
    return hits


def default_bin_width(values) -> float:
    """Zero-bin width: a tenth of the single-return standard deviation."""
    return 0.1 * float(np.std(values))


def return_to_origin(
    returns,
    n_values=None,
    realizations: int = DEFAULT_REALIZATIONS,
    bin_width: float | None = None,
    seed: int = 0,
    workers: int = 1,
) -> ReturnToOriginCurve:
    """Estimate the density at zero of shuffled n-block sums, for each n.

    Every realization uses its own stream spawned from ``seed``; per-block
    hit counts are integers, so the result is identical for any number of
    ``workers``.
    """
    values = returns.values if isinstance(returns, ReturnSeries) else np.asarray(returns, float)
    N = values.size
    if n_values is None:
        n_values = 2 ** np.arange(int(np.log2(max(N // 100, 1))) + 1)
    n_values = np.asarray(n_values, dtype=int)
    if realizations < 1:
        raise RangeError(f"realizations must be >= 1, got {realizations}")
    if n_values.size == 0 or n_values.min() < 1:
        raise RangeError("summand counts must be >= 1")
    if n_values.max() > N:
        raise RangeError(f"n = {n_values.max()} exceeds series length {N}")
    if bin_width is None:
        bin_width = default_bin_width(values)
        if bin_width == 0:
            bin_width = 1.0
    if not bin_width > 0:
        raise RangeError(f"bin width must be positive, got {bin_width}")

    seeds = np.random.SeedSequence(seed).spawn(realizations)
    half = bin_width / 2
    if workers > 1 and realizations > 1:
        parts = np.array_split(np.arange(realizations), workers)
        with ProcessPoolExecutor(workers) as pool:
            futures = [
                pool.submit(_count_hits, values, n_values, half, [seeds[i] for i in p])
                for p in parts if p.size
            ]
            hits = np.vstack([f.result() for f in futures])
    else:
        hits = _count_hits(values, n_values, half, seeds)

    blocks = (N // n_values).astype(float)
    frac = hits / blocks  # realizations x len(n_values)
    p_zero = frac.mean(axis=0) / bin_width
    if realizations > 1:
        stderr = frac.std(axis=0, ddof=1) / math.sqrt(realizations) / bin_width
    else:
        stderr = np.full(n_values.size, np.nan)
    return ReturnToOriginCurve(n_values, p_zero, stderr, realizations, float(bin_width), int(seed))


def estimate_alpha(curve: ReturnToOriginCurve, fit_range=None) -> AlphaEstimate:
    """Fit ln p_zero against ln n; the slope is -1/alpha."""
    n = curve.n_values
    lo, hi = (n.min(), n.max()) if fit_range is None else fit_range
    inside = (n >= lo) & (n <= hi) & (curve.p_zero > 0)
    if inside.sum() < 3:
        raise FitError(f"need >= 3 positive points in [{lo}, {hi}], have {int(inside.sum())}")
    res = loglog_fit(n[inside], curve.p_zero[inside])
    if not res.slope < 0:
        raise FitError(f"return-to-origin curve is not decreasing (slope {res.slope:.4g})")
    alpha = -1.0 / res.slope
    return AlphaEstimate(
        alpha=float(alpha),
        slope=float(res.slope),
        intercept=float(res.intercept),
        fit_range=(int(lo), int(hi)),
        stderr=float(res.stderr),
        alpha_stderr=float(res.stderr / res.slope**2),
    )
