"""Lagged auto- and cross-correlation of standardized returns."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import RangeError, ShapeError
from .ingest import ReducedSeries, reduce


@dataclass(frozen=True)
class CorrelationFunction:
    lags: np.ndarray
    values: np.ndarray
    pair: tuple = ("", "")
    absolute: bool = False

    @property
    def n_max(self) -> int:
        return int(self.lags[-1])


def _as_array(x) -> np.ndarray:
    if isinstance(x, ReducedSeries):
        return x.values
    return np.asarray(x, dtype=float)


def _series_id(x) -> str:
    return getattr(x, "instrument_id", "") or ""


def cross_correlation(a, b, n_max: int, absolute: bool = False) -> CorrelationFunction:
    """Correlation between ``a`` at day i and ``b`` at day i+n, for n = 0..n_max.

    Each lag averages over the N-n overlapping products. With ``absolute``
    the magnitudes of both inputs are taken and re-standardized first, so
    the result is again a correlation with value 1 at lag 0 for a = b.
    """
    x, y = _as_array(a), _as_array(b)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"series lengths differ: {x.shape} vs {y.shape}")
    N = x.size
    if n_max < 0 or n_max >= N:
        raise RangeError(f"n_max must lie in [0, {N - 1}], got {n_max}")
    if absolute:
        x = reduce(np.abs(x)).values
        y = reduce(np.abs(y)).values
    values = np.empty(n_max + 1)
    for n in range(n_max + 1):
        values[n] = np.dot(x[: N - n], y[n:]) / (N - n)
    return CorrelationFunction(np.arange(n_max + 1), values, (_series_id(a), _series_id(b)), absolute)


def noise_band(N: int, confidence: float = 0.95) -> float:
    """Half-width of the two-sided Gaussian band for a correlation of N samples."""
    if N < 2:
        raise RangeError(f"noise band needs N >= 2, got {N}")
    if not 0 < confidence < 1:
        raise RangeError(f"confidence must lie in (0, 1), got {confidence}")
    z = norm.ppf(0.5 + confidence / 2)
    return float(z / np.sqrt(N))
