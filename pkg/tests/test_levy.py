import math

import numpy as np
import pytest
from scipy import integrate

from marketineff.errors import FitError, NumericError, RangeError
from marketineff.ingest import ReturnSeries
from marketineff.levy import (
    LevyParams,
    ReturnToOriginCurve,
    default_bin_width,
    estimate_alpha,
    levy_density_at_origin,
    return_to_origin,
    return_to_origin_asymptote,
    sample_truncated_levy,
    truncated_levy_density,
)


def exact_curve(alpha, n=(1, 2, 4, 8, 16, 32)):
    n = np.array(n)
    p = n ** (-1.0 / alpha)
    return ReturnToOriginCurve(n, p, np.zeros(n.size), 1, 1.0, 0)


# --- estimator ----------------------------------------------------------------


def test_uniform_density_at_origin():
    u = np.random.default_rng(0).uniform(-1, 1, 20000)
    curve = return_to_origin(u, [1], realizations=50, bin_width=0.01, seed=1)
    # one block per value, so every realization sees the same multiset and
    # the only noise is the binomial count itself
    p = np.mean(np.abs(u) < 0.005) / 0.01
    assert curve.p_zero[0] == pytest.approx(p, rel=1e-12)
    se = math.sqrt(0.005 * (1 - 0.005) / u.size) / 0.01
    assert abs(curve.p_zero[0] - 0.5) < 3 * se


def test_all_zero_series():
    curve = return_to_origin(np.zeros(64), [1, 2, 4, 8], realizations=3, bin_width=0.25)
    np.testing.assert_array_equal(curve.p_zero, np.full(4, 4.0))


def test_zero_series_default_bin_falls_back_to_one():
    curve = return_to_origin(np.zeros(16), [1, 2], realizations=2)
    assert curve.bin_width == 1.0


def test_default_bin_width():
    x = np.array([-2.0, 2.0])
    assert default_bin_width(x) == pytest.approx(0.2)


def test_shuffle_preserves_the_multiset():
    # with a single block of all N values, the block sum is the full sum in
    # every realization; a symmetric multiset sums to exactly zero
    x = np.random.default_rng(5).standard_normal(500)
    x = np.concatenate([x, -x])
    curve = return_to_origin(x, [1000], realizations=20, bin_width=2e-9)
    assert curve.p_zero[0] == pytest.approx(1 / 2e-9)


def test_two_seeds_agree_within_three_standard_errors():
    x = np.random.default_rng(9).standard_normal(20000)
    a = return_to_origin(x, [1, 4, 16], realizations=200, seed=1)
    b = return_to_origin(x, [1, 4, 16], realizations=200, seed=2)
    se = np.hypot(a.stderr, b.stderr)
    assert np.all(np.abs(a.p_zero - b.p_zero) < 3 * se + 1e-12)


def test_worker_count_does_not_change_result():
    x = np.random.default_rng(4).standard_normal(5000)
    a = return_to_origin(x, [1, 2, 8], realizations=40, seed=3, workers=1)
    b = return_to_origin(x, [1, 2, 8], realizations=40, seed=3, workers=3)
    np.testing.assert_array_equal(a.p_zero, b.p_zero)
    np.testing.assert_array_equal(a.stderr, b.stderr)


def test_accepts_return_series():
    rs = ReturnSeries(np.random.default_rng(1).standard_normal(400))
    curve = return_to_origin(rs, [1, 2, 4], realizations=5)
    assert curve.p_zero.shape == (3,) and np.all(curve.p_zero >= 0)


def test_default_n_values_are_powers_of_two():
    curve = return_to_origin(np.random.default_rng(1).standard_normal(3200), realizations=2)
    np.testing.assert_array_equal(curve.n_values, [1, 2, 4, 8, 16, 32])


def test_gaussian_small_scale_slope():
    x = np.random.default_rng(11).standard_normal(40000)
    curve = return_to_origin(x, 2 ** np.arange(7), realizations=300, seed=0)
    est = estimate_alpha(curve)
    assert est.slope == pytest.approx(-0.5, abs=0.03)


def test_precondition_errors():
    x = np.ones(10)
    with pytest.raises(RangeError):
        return_to_origin(x, [11])
    with pytest.raises(RangeError):
        return_to_origin(x, [1], realizations=0)
    with pytest.raises(RangeError):
        return_to_origin(x, [1], bin_width=0.0)
    with pytest.raises(RangeError):
        return_to_origin(x, [0, 1])


# --- alpha fit ----------------------------------------------------------------


def test_exact_gaussian_curve_gives_two():
    est = estimate_alpha(exact_curve(2.0))
    assert est.alpha == pytest.approx(2.0, abs=1e-12)
    assert est.alpha == pytest.approx(-1.0 / est.slope, abs=1e-12)


def test_exact_curve_reported_index():
    assert estimate_alpha(exact_curve(0.54)).alpha == pytest.approx(0.54, abs=1e-12)


def test_smaller_alpha_means_steeper_slope():
    slopes = [estimate_alpha(exact_curve(a)).slope for a in (0.54, 1.0, 1.5, 2.0)]
    assert slopes == sorted(slopes)


def test_fit_needs_three_points():
    with pytest.raises(FitError):
        estimate_alpha(exact_curve(1.0, n=(1, 2)))
    with pytest.raises(FitError):
        estimate_alpha(exact_curve(1.0), fit_range=(8, 16))


def test_fit_rejects_increasing_curve():
    n = np.array([1, 2, 4])
    curve = ReturnToOriginCurve(n, n.astype(float), np.zeros(3), 1, 1.0, 0)
    with pytest.raises(FitError):
        estimate_alpha(curve)


def test_alpha_stderr_propagation():
    n = np.array([1, 2, 4, 8, 16])
    p = n ** -0.5 * np.array([1.0, 1.02, 0.97, 1.01, 0.99])
    est = estimate_alpha(ReturnToOriginCurve(n, p, np.zeros(5), 1, 1.0, 0))
    assert est.stderr > 0
    assert est.alpha_stderr == pytest.approx(est.stderr / est.slope**2)


# --- sampler ----------------------------------------------------------------------


def test_params_validation():
    for bad in ((0.0, 1, 1), (2.1, 1, 1), (1.0, 0.0, 1), (1.0, 1.0, -1)):
        with pytest.raises(RangeError):
            LevyParams(*bad)


def test_density_is_normalized():
    x, dens = truncated_levy_density(LevyParams(1.5, 1.0, 20.0))
    assert integrate.trapezoid(dens, x) == pytest.approx(1.0, abs=1e-6)
    assert np.all(dens >= 0)
    np.testing.assert_allclose(dens, dens[::-1], rtol=0, atol=1e-15)


def test_cauchy_density_matches_closed_form():
    # alpha = 1 is the Cauchy law with scale gamma
    p = LevyParams(1.0, 1.0, 10.0)
    x, dens = truncated_levy_density(p)
    cauchy = 1 / (math.pi * (1 + x**2))
    np.testing.assert_allclose(dens / p.c, cauchy, rtol=0, atol=1e-6)


def test_gaussian_limit_variance():
    p = LevyParams(2.0, 1.0, 20.0)
    s = sample_truncated_levy(p, 200_000, seed=0)
    se = 2.0 * math.sqrt(2.0 / s.size)
    assert abs(s.var() - 2.0) < 3 * se


@pytest.mark.parametrize("alpha,gamma,d", [(1.5, 1.0, 20.0), (1.0, 1.0, 10.0), (2.0, 1.0, 20.0)])
def test_samples_symmetric_and_truncated(alpha, gamma, d):
    s = sample_truncated_levy(LevyParams(alpha, gamma, d), 100_000, seed=1)
    assert np.all(np.abs(s) <= d)
    assert abs(s.mean()) < 3 * s.std() / math.sqrt(s.size)


def test_sampler_is_seeded():
    p = LevyParams(1.5, 1.0, 20.0)
    np.testing.assert_array_equal(sample_truncated_levy(p, 10, seed=4), sample_truncated_levy(p, 10, seed=4))


def test_small_alpha_quadrature_reports_non_convergence():
    with pytest.raises(NumericError):
        LevyParams(0.1, 1.0, 10.0).c


def test_asymptote_closed_form():
    assert levy_density_at_origin(2.0) == pytest.approx(1 / (2 * math.sqrt(math.pi)))
    assert return_to_origin_asymptote(4, 2.0) == pytest.approx(levy_density_at_origin(2.0) / 2)
