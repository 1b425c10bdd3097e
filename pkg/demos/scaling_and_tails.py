"""Scaling and tail diagnostics on series whose answers are known.

White noise has a fluctuation exponent of 1/2 and a Gaussian tail index of
2. A common long-memory component lifts the exponent of a pair; a
truncated Levy sample recovers its index at small aggregation scales.

    python3 demos/scaling_and_tails.py
"""

import numpy as np

from marketineff import synthetic
from marketineff.correlation import cross_correlation, noise_band
from marketineff.dcca import dcca_f2, fit_power_law
from marketineff.ingest import reduce
from marketineff.levy import LevyParams, estimate_alpha, return_to_origin, sample_truncated_levy

N = 50_000

noise = np.random.default_rng(1).standard_normal(N)
fit = fit_power_law(dcca_f2(noise, noise))
print(f"white noise      lambda = {fit.lambda_:.3f}  (r2 {fit.r_squared:.4f})")

a, b = synthetic.common_trend_pair(N, seed=2)
fit = fit_power_law(dcca_f2(a, b))
print(f"common trend     lambda = {fit.lambda_:.3f}")

ar = reduce(synthetic.ar1(N, 0.5, seed=3))  # correlations expect reduced input
corr = cross_correlation(ar, ar, n_max=3)
print("AR(1) rho 0.5    lags 0..3:", np.round(corr.values, 3), f"band +/-{noise_band(N):.3f}")

est = estimate_alpha(return_to_origin(noise, 2 ** np.arange(8), realizations=300, seed=0))
print(f"Gaussian         alpha = {est.alpha:.3f} +/- {est.alpha_stderr:.3f}")

levy = sample_truncated_levy(LevyParams(1.5, 1.0, 20.0), N, seed=4)
est = estimate_alpha(return_to_origin(levy, [1, 2, 4, 8], realizations=300, seed=0))
print(f"truncated Levy   alpha = {est.alpha:.3f} +/- {est.alpha_stderr:.3f}  (true 1.5)")
