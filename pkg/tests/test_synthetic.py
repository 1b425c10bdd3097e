import numpy as np
import pytest

from marketineff import synthetic
from marketineff.ingest import log_returns
from marketineff.pca import rolling_feature


def test_business_days_skip_weekends():
    d = synthetic.business_days(10, "2016-01-01")
    assert np.all(np.is_busday(d))
    assert str(d[0]) == "2016-01-01" and str(d[1]) == "2016-01-04"


def test_prices_round_trip_returns():
    r = synthetic.gaussian_returns(100, seed=1)
    p = synthetic.prices_from_log_returns(r, "X")
    np.testing.assert_allclose(log_returns(p).values, r, rtol=0, atol=1e-14)


def test_ar1_lag_one():
    x = synthetic.ar1(50_000, 0.7, seed=2)
    assert np.corrcoef(x[:-1], x[1:])[0, 1] == pytest.approx(0.7, abs=0.02)


def test_fractional_noise_autocorrelation():
    H = 0.8
    x = synthetic.fractional_noise(2**16, H, seed=3)
    expected = 0.5 * (2 ** (2 * H) - 2)
    assert np.corrcoef(x[:-1], x[1:])[0, 1] == pytest.approx(expected, abs=0.02)
    assert x.var() == pytest.approx(1.0, abs=0.1)


def test_factor_panel_is_seeded_and_positive():
    a = synthetic.factor_panel(150, seed=1)
    b = synthetic.factor_panel(150, seed=1)
    assert np.array_equal(a.values, b.values)
    assert a.names[0] == "TARGET" and np.all(a.values > 0)


def test_learnable_factor_follows_the_feature():
    panel = synthetic.factor_panel(400, seed=4, learnable=True)
    raw = rolling_feature(panel, 5, smooth=False).raw_values
    # recompute the signal from the smoothed raw feature and compare with the
    # next target change
    sm = np.convolve(raw, np.ones(3) / 3, mode="valid")
    lags = np.lib.stride_tricks.sliding_window_view(sm, 5)[:, ::-1]
    signal = np.tanh(lags @ np.asarray(synthetic.FACTOR_WEIGHTS))
    dx = np.diff(panel.values[:, 0])
    # feature index i is dated at change index i + 4; its smoothed value at i + 2
    nxt = dx[4 + 2 + 4 + 1 : 4 + 2 + 4 + 1 + signal.size]
    r = np.corrcoef(signal[: nxt.size], nxt)[0, 1]
    assert r > 0.9


def test_random_panel_has_no_feature_signal():
    panel = synthetic.factor_panel(400, seed=4, learnable=False)
    f = rolling_feature(panel, 5)
    dx = np.diff(panel.values[:, 0])[-f.values.size:]
    r = np.corrcoef(f.values[:-1], dx[1:])[0, 1]
    assert abs(r) < 3 / np.sqrt(f.values.size)
