"""Synthetic series and panels with known answers, used by tests and demos."""

from __future__ import annotations

import numpy as np

from .ingest import AlignedPanel, PriceSeries
from .levy import LevyParams, sample_truncated_levy
from .pca import SMOOTH_DAYS, _standardize, principal_components

START_DATE = "2015-12-28"


def business_days(n: int, start: str = START_DATE) -> np.ndarray:
    """``n`` consecutive weekdays starting at (or after) ``start``."""
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    return np.busday_offset(first, np.arange(n), roll="forward").astype("datetime64[D]")


def prices_from_log_returns(returns, instrument_id: str, start_price: float = 100.0,
                            start: str = START_DATE) -> PriceSeries:
    r = np.asarray(returns, dtype=float)
    closes = start_price * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    return PriceSeries(instrument_id, business_days(r.size + 1, start), closes)


def gaussian_returns(n: int, seed=0, scale: float = 0.01) -> np.ndarray:
    return scale * np.random.default_rng(seed).standard_normal(n)


def ar1(n: int, rho: float, seed=0, scale: float = 0.01) -> np.ndarray:
    """Stationary AR(1) series with coefficient ``rho``."""
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal(n) * np.sqrt(1 - rho**2)
    x = np.empty(n)
    x[0] = rng.standard_normal()
    for i in range(1, n):
        x[i] = rho * x[i - 1] + eps[i]
    return scale * x


def levy_returns(n: int, alpha: float = 1.5, gamma: float = 1.0, d: float = 20.0,
                 seed=0, scale: float = 0.01) -> np.ndarray:
    return scale * sample_truncated_levy(LevyParams(alpha, gamma, d), n, seed=seed)


def fractional_noise(n: int, hurst: float, seed=0) -> np.ndarray:
    """Fractional Gaussian noise by circulant embedding (Davies-Harte)."""
    k = np.arange(n + 1)
    acov = 0.5 * ((k + 1.0) ** (2 * hurst) - 2 * k ** (2.0 * hurst) + np.abs(k - 1.0) ** (2 * hurst))
    row = np.concatenate([acov, acov[-2:0:-1]])
    eig = np.fft.fft(row).real
    eig = np.clip(eig, 0.0, None)
    m = row.size
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    x = np.fft.fft(np.sqrt(eig / m) * w)
    return x.real[:n]


def common_trend_pair(n: int, seed=0, hurst: float = 0.85, share: float = 0.8):
    """Two return series sharing a long-memory component."""
    rng = np.random.default_rng(seed)
    common = fractional_noise(n, hurst, seed=rng.integers(2**32))
    own = rng.standard_normal((2, n))
    mix = np.sqrt(share) * common + np.sqrt(1 - share) * own
    return 0.01 * mix[0], 0.01 * mix[1]


FACTOR_WEIGHTS = (1.2, -0.6, 0.4, 0.3, -0.2)  # on the last 5 smoothed PC values, newest first


def factor_panel(n_dates: int = 760, seed=0, learnable: bool = True, n_series: int = 6,
                 noise_ratio: float = 0.25, points_per_unit: float = 1000.0,
                 start: str = START_DATE) -> AlignedPanel:
    """Panel of ``n_series`` instruments driven by one latent daily factor.

    Column 0 ("TARGET") is the traded instrument, in index points around
    80000. Every column's daily change loads on the factor, plus a small
    idiosyncratic part. With ``learnable`` the next factor value is
    ``tanh`` of a fixed linear combination of the last five smoothed
    first-principal-component values of the panel (5-day window, computed
    exactly as the pipeline does) plus Gaussian noise with standard
    deviation ``noise_ratio`` times that of the signal. Otherwise the factor
    is i.i.d. Gaussian and the panel is a pure random walk.
    """
    rng = np.random.default_rng(seed)
    loadings = np.concatenate([[1.0], rng.uniform(0.6, 1.0, n_series - 1)])
    scales = np.concatenate([[points_per_unit], rng.uniform(5.0, 50.0, n_series - 1)])
    levels0 = np.concatenate([[80000.0], rng.uniform(500.0, 5000.0, n_series - 1)])
    idio = 0.1
    weights = np.asarray(FACTOR_WEIGHTS)
    window = 5
    # the noise of tanh(.) is set relative to the signal's typical spread
    signal_sd = 0.62
    noise_sd = noise_ratio * signal_sd

    changes = np.zeros((n_dates - 1, n_series))
    raw_pc = []
    for t in range(n_dates - 1):
        if learnable and len(raw_pc) >= SMOOTH_DAYS + weights.size - 1:
            recent = np.asarray(raw_pc[-(SMOOTH_DAYS + weights.size - 1):])
            smooth = np.convolve(recent, np.ones(SMOOTH_DAYS) / SMOOTH_DAYS, mode="valid")[::-1]
            factor = np.tanh(weights @ smooth) + noise_sd * rng.standard_normal()
        elif learnable:
            factor = signal_sd * rng.standard_normal()
        else:
            factor = np.sqrt(signal_sd**2 + noise_sd**2) * rng.standard_normal()
        changes[t] = scales * (loadings * factor + idio * signal_sd * rng.standard_normal(n_series))
        if t + 1 >= window:
            block = changes[t + 1 - window : t + 1]
            z = _standardize(block)
            m = z.T @ z / window
            dec = principal_components((m + m.T) / 2, target_index=0)
            raw_pc.append(float(z[-1] @ dec.top_loading))

    values = levels0 + np.vstack([np.zeros(n_series), np.cumsum(changes, axis=0)])
    names = ["TARGET"] + [f"S{i}" for i in range(1, n_series)]
    return AlignedPanel(business_days(n_dates, start), names, values)
