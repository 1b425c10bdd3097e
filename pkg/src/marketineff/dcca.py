"""Detrended fluctuation and detrended cross-correlation analysis.

The profiles (running sums of standardized returns) are cut into every
overlapping window of n+1 points, a least-squares line is removed from each
window, and the covariance of the residuals is averaged over windows.
Window sums come from prefix sums kept in extended precision, which makes
each box size O(N) instead of O(N n).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import FitError, RangeError, ShapeError
from .ingest import ReducedSeries


@dataclass(frozen=True)
class IntegratedSeries:
    values: np.ndarray
    instrument_id: str = ""


@dataclass(frozen=True)
class DccaCurve:
    box_sizes: np.ndarray
    f2: np.ndarray
    pair: tuple = ("", "")

    def __post_init__(self):
        if self.box_sizes.size > 1 and np.any(np.diff(self.box_sizes) <= 0):
            raise RangeError("box sizes must be strictly increasing")


@dataclass(frozen=True)
class ScalingFit:
    lambda_: float
    intercept: float
    fit_range: tuple
    r_squared: float
    n_points: int
    excluded_points: int

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_,
            "intercept": self.intercept,
            "fit_range": list(self.fit_range),
            "r_squared": self.r_squared,
            "n_points": self.n_points,
            "excluded_points": self.excluded_points,
        }


def integrate(a) -> IntegratedSeries:
    values = a.values if isinstance(a, ReducedSeries) else np.asarray(a, dtype=float)
    return IntegratedSeries(np.cumsum(values), getattr(a, "instrument_id", "") or "")


def default_box_sizes(N: int, n_min: int = 4, ratio: float = 2 ** 0.25) -> np.ndarray:
    """Geometric grid of box sizes from ``n_min`` to N/4."""
    n_max = N // 4
    if n_max < n_min:
        raise RangeError(f"series of length {N} too short for box sizes >= {n_min}")
    count = int(np.floor(np.log(n_max / n_min) / np.log(ratio))) + 1
    grid = np.unique(np.round(n_min * ratio ** np.arange(count)).astype(int))
    return grid[grid <= n_max]


def _window_sums(prefix: np.ndarray, width: int) -> np.ndarray:
    return prefix[width:] - prefix[:-width]


def _prefix(x: np.ndarray) -> np.ndarray:
    out = np.zeros(x.size + 1, dtype=np.longdouble)
    np.cumsum(x, dtype=np.longdouble, out=out[1:])
    return out


class _Profiles:
    """Prefix sums needed for the residual covariance of every window."""

    def __init__(self, sa: np.ndarray, sb: np.ndarray):
        idx = np.arange(sa.size, dtype=np.longdouble)
        self.same = sa is sb
        self.N = sa.size
        self.pa = _prefix(sa)
        self.pia = _prefix(idx * sa)
        if self.same:
            self.pb, self.pib = self.pa, self.pia
        else:
            self.pb = _prefix(sb)
            self.pib = _prefix(idx * sb)
        self.pab = _prefix(np.asarray(sa, np.longdouble) * np.asarray(sb, np.longdouble))

    def f2(self, n: int) -> float:
        m = n + 1  # points per window
        sum_a = _window_sums(self.pa, m)
        sum_b = _window_sums(self.pb, m)
        sum_ab = _window_sums(self.pab, m)
        start = np.arange(self.N - n, dtype=np.longdouble)
        center = start + n / 2.0
        # sum of (i - center) * S(i) over each window
        xa = _window_sums(self.pia, m) - center * sum_a
        xb = _window_sums(self.pib, m) - center * sum_b
        sxx = np.longdouble(m) * (m * m - 1) / 12.0
        resid = sum_ab - sum_a * sum_b / m - xa * xb / sxx
        per_window = np.asarray(resid, dtype=float) / (n - 1)
        if self.same:
            per_window = np.maximum(per_window, 0.0)
        return float(np.mean(per_window))


def detrended_covariance(profile_a, profile_b, box_sizes, workers: int = 1) -> np.ndarray:
    """F^2(n) computed straight from two integrated profiles.

    Exposed separately so profiles that did not come from a standardized
    series (a pure linear trend, say) can be analysed.
    """
    sa = np.asarray(getattr(profile_a, "values", profile_a), dtype=float)
    sb = np.asarray(getattr(profile_b, "values", profile_b), dtype=float)
    if profile_b is profile_a:
        sb = sa
    if sa.shape != sb.shape or sa.ndim != 1:
        raise ShapeError(f"profile lengths differ: {sa.shape} vs {sb.shape}")
    sizes = np.asarray(box_sizes, dtype=int)
    if sizes.size == 0:
        raise RangeError("no box sizes given")
    if sizes.min() < 2:
        raise RangeError("box sizes must be >= 2")
    if sizes.max() + 1 > sa.size:
        raise RangeError(f"box size {sizes.max()} too large for series of length {sa.size}")
    prof = _Profiles(sa, sb)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return np.array(list(pool.map(prof.f2, sizes.tolist())))
    return np.array([prof.f2(n) for n in sizes.tolist()])


def dcca_f2(a, b, box_sizes=None, workers: int = 1) -> DccaCurve:
    """Detrended cross-correlation curve of two standardized series.

    Passing the same object for ``a`` and ``b`` gives ordinary DFA, for which
    every F^2 is non-negative.
    """
    va = a.values if isinstance(a, ReducedSeries) else np.asarray(a, dtype=float)
    vb = b.values if isinstance(b, ReducedSeries) else np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise ShapeError(f"series lengths differ: {va.shape} vs {vb.shape}")
    if box_sizes is None:
        box_sizes = default_box_sizes(va.size)
    sizes = np.asarray(box_sizes, dtype=int)
    pa = np.cumsum(va)
    pb = pa if (b is a or np.array_equal(va, vb)) else np.cumsum(vb)
    f2 = detrended_covariance(pa, pb, sizes, workers=workers)
    pair = (getattr(a, "instrument_id", "") or "", getattr(b, "instrument_id", "") or "")
    return DccaCurve(sizes, f2, pair)


def loglog_fit(x, y):
    """Least-squares line through (ln x, ln y); returns scipy's linregress result."""
    return stats.linregress(np.log(x), np.log(y))


def fit_power_law(curve: DccaCurve, fit_range=None) -> ScalingFit:
    """Fit F^2(n) ~ n^(2 lambda) on the positive points inside ``fit_range``."""
    n = curve.box_sizes
    lo, hi = (n.min(), n.max()) if fit_range is None else fit_range
    if not lo < hi:
        raise RangeError(f"fit range needs n_min < n_max, got {(lo, hi)}")
    inside = (n >= lo) & (n <= hi)
    positive = inside & (curve.f2 > 0)
    excluded = int(inside.sum() - positive.sum())
    if positive.sum() < 3:
        raise FitError(
            f"no power law: only {int(positive.sum())} positive F2 points in [{lo}, {hi}]"
        )
    res = loglog_fit(n[positive], curve.f2[positive])
    r2 = float(min(max(res.rvalue**2, 0.0), 1.0))
    return ScalingFit(
        lambda_=float(res.slope / 2),
        intercept=float(res.intercept),
        fit_range=(int(lo), int(hi)),
        r_squared=r2,
        n_points=int(positive.sum()),
        excluded_points=excluded,
    )
