"""Market-inefficiency analysis toolkit.

Correlation and detrended cross-correlation of returns, fat-tail index
estimation, rolling principal-component features, small feed-forward
networks trained walk-forward, and a rule-based backtest with loss
regularization.
"""

from .correlation import CorrelationFunction, cross_correlation, noise_band
from .dcca import DccaCurve, ScalingFit, dcca_f2, default_box_sizes, fit_power_law
from .errors import (
    ContractViolation,
    DataError,
    DegenerateSeriesError,
    FitError,
    MarketIneffError,
    NumericError,
    RangeError,
    ShapeError,
)
from .ingest import AlignedPanel, PriceSeries, align, load_csv, load_manifest, log_returns, reduce
from .levy import LevyParams, estimate_alpha, return_to_origin, sample_truncated_levy
from .pca import loadings_at, principal_components, rolling_feature
from .strategy import (
    ForecastConfig,
    StrategyConfig,
    backtest,
    buy_and_hold,
    performance,
    regularization_grid,
)

__version__ = "0.1.0"

__all__ = [
    "AlignedPanel", "ContractViolation", "CorrelationFunction", "DataError", "DccaCurve",
    "DegenerateSeriesError", "FitError", "ForecastConfig", "LevyParams", "MarketIneffError",
    "NumericError", "PriceSeries", "RangeError", "ScalingFit", "ShapeError", "StrategyConfig",
    "align", "backtest", "buy_and_hold", "cross_correlation", "dcca_f2", "default_box_sizes",
    "estimate_alpha", "fit_power_law", "load_csv", "load_manifest", "loadings_at", "log_returns",
    "noise_band", "performance", "principal_components", "reduce", "regularization_grid",
    "return_to_origin", "rolling_feature", "sample_truncated_levy",
]
