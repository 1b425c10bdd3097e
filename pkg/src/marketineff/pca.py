"""Rolling principal-component feature over a panel of daily changes.

Inputs are one-day differences of the panel values (not log-returns). Over
each trailing window the standardized changes give a correlation-like matrix
whose top eigenvector (loading) is used to project the window's last
standardized change vector onto a single number per day.

Eigenvectors are oriented so the loading on the target series is
non-positive; when that loading is numerically zero the largest-magnitude
loading is made negative instead.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSeriesError, InsufficientDataError, NumericError, RangeError
from .ingest import AlignedPanel

logger = logging.getLogger(__name__)

WINDOW_LENGTHS = (5, 10)
SMOOTH_DAYS = 3


@dataclass(frozen=True)
class CovarianceMatrix:
    entries: np.ndarray
    window: tuple = (None, None)
    series_ids: tuple = ()


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # column k pairs with eigenvalues[k]

    @property
    def top_loading(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


@dataclass(frozen=True)
class FeatureSeries:
    dates: np.ndarray
    values: np.ndarray
    raw_values: np.ndarray
    largest_eigenvalue: np.ndarray
    window_length: int
    smoothed: bool

    def __len__(self):
        return self.dates.size


def price_differences(panel: AlignedPanel):
    """Dates (of the later price) and one-day differences, shape (T-1, K)."""
    if len(panel) < 2:
        raise InsufficientDataError("panel needs at least two dates for differences")
    return panel.dates[1:], np.diff(panel.values, axis=0)


def _standardize(window: np.ndarray, series_ids=()):
    mean = window.mean(axis=0)
    dev = window - mean
    sigma = np.sqrt(np.mean(dev * dev, axis=0))
    scale = np.max(np.abs(window), axis=0)
    bad = (sigma == 0) | (sigma <= 1e-13 * scale)
    if bad.any():
        names = [series_ids[i] if i < len(series_ids) else str(i) for i in np.flatnonzero(bad)]
        raise DegenerateSeriesError(f"zero variance in window for {names}", names)
    return dev / sigma


def covariance_matrix(changes, series_ids=(), window=(None, None)) -> CovarianceMatrix:
    """Window average of products of standardized deviations.

    ``changes`` is the (window_length, K) block of daily changes.
    """
    changes = np.asarray(changes, dtype=float)
    if changes.ndim != 2 or changes.shape[0] < 2:
        raise InsufficientDataError("covariance window needs >= 2 observations per series")
    z = _standardize(changes, series_ids)
    m = z.T @ z / z.shape[0]
    m = (m + m.T) / 2
    return CovarianceMatrix(m, window, tuple(series_ids))


def _orient(vecs: np.ndarray, target_index: int | None) -> np.ndarray:
    out = vecs.copy()
    for k in range(out.shape[1]):
        v = out[:, k]
        if target_index is not None and abs(v[target_index]) > 1e-12:
            flip = v[target_index] > 0
        else:
            flip = v[np.argmax(np.abs(v))] > 0
        if flip:
            out[:, k] = -v
    return out


def principal_components(m, target_index: int | None = 0) -> EigenDecomposition:
    """Full eigen-decomposition, eigenvalues descending, deterministic signs."""
    entries = m.entries if isinstance(m, CovarianceMatrix) else np.asarray(m, dtype=float)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise RangeError("matrix must be square")
    if not np.allclose(entries, entries.T, atol=1e-12, rtol=0):
        raise RangeError("matrix must be symmetric")
    try:
        vals, vecs = np.linalg.eigh(entries)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigen-solver failed: {exc}") from exc
    order = np.argsort(vals, kind="stable")[::-1]
    return EigenDecomposition(vals[order], _orient(vecs[:, order], target_index))


def trailing_mean(values, days: int = SMOOTH_DAYS) -> np.ndarray:
    """Mean of the current and previous ``days - 1`` values; drops the first ``days - 1``."""
    values = np.asarray(values, dtype=float)
    if values.size < days:
        return values[:0].copy()
    return np.lib.stride_tricks.sliding_window_view(values, days).mean(axis=1)


def rolling_feature(
    panel: AlignedPanel,
    window_length: int = 10,
    smooth: bool = True,
    target: str | None = None,
) -> FeatureSeries:
    """First-principal-component projection for every date with a full window.

    The value dated t uses only the changes on dates <= t. Windows where some
    series is constant are skipped (and logged). With ``smooth`` the trailing
    three-day mean is applied to the surviving values.
    """
    if window_length < 2:
        raise RangeError("window length must be >= 2")
    target_index = panel.index(target) if target is not None else 0
    dates, dx = price_differences(panel)
    if dx.shape[0] < window_length:
        raise InsufficientDataError(
            f"need at least {window_length} daily changes, panel gives {dx.shape[0]}"
        )
    out_dates, raw, eig = [], [], []
    for end in range(window_length - 1, dx.shape[0]):
        block = dx[end - window_length + 1 : end + 1]
        try:
            z = _standardize(block, panel.names)
        except DegenerateSeriesError as exc:
            logger.info("skipping %s: %s", dates[end], exc)
            continue
        m = z.T @ z / window_length
        dec = principal_components((m + m.T) / 2, target_index)
        out_dates.append(dates[end])
        raw.append(float(z[-1] @ dec.top_loading))
        eig.append(float(dec.eigenvalues[0]))

    out_dates = np.array(out_dates, dtype="datetime64[D]")
    raw = np.array(raw)
    eig = np.array(eig)
    if smooth:
        values = trailing_mean(raw)
        drop = SMOOTH_DAYS - 1
        out_dates, raw, eig = out_dates[drop:], raw[drop:], eig[drop:]
    else:
        values = raw.copy()
    return FeatureSeries(out_dates, values, raw, eig, window_length, smooth)


def loadings_at(panel: AlignedPanel, date, window_length: int = 10, target: str | None = None) -> dict:
    """Top loadings and full spectrum for the window ending on ``date``."""
    target_index = panel.index(target) if target is not None else 0
    dates, dx = price_differences(panel)
    end = int(np.searchsorted(dates, np.datetime64(date, "D")))
    if end >= dates.size or dates[end] != np.datetime64(date, "D"):
        raise RangeError(f"{date} is not a panel date with a daily change")
    if end + 1 < window_length:
        raise InsufficientDataError(f"not enough history before {date} for a {window_length}-day window")
    block = dx[end - window_length + 1 : end + 1]
    cov = covariance_matrix(block, panel.names, (str(dates[end - window_length + 1]), str(dates[end])))
    dec = principal_components(cov, target_index)
    return {
        "date": str(dates[end]),
        "window_length": window_length,
        "window": list(cov.window),
        "series": list(panel.names),
        "loadings": [float(v) for v in dec.top_loading],
        "eigenvalues": [float(v) for v in dec.eigenvalues],
    }
