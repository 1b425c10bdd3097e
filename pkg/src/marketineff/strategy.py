"""Daily trading rule, loss regularization, walk-forward backtest and statistics.

Positions are +1 (long), 0 (flat) or -1 (short) on the full notional of the
target instrument, entered at the close of the decision day and closed at
the next close. No leverage, margin, slippage or costs unless a cost is
configured explicitly.

Loss regularization: after ``n_l`` consecutive losing days all positions are
zeroed; while suspended the would-be P&L of the rule is tracked, and trading
resumes after ``n_g`` consecutive would-be gain days (``n_g = 0`` means the
day after the suspension starts). Days with exactly zero P&L break both
streaks. ``n_l = 0`` disables the regularizer.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import ffnn
from .errors import ContractViolation, InsufficientDataError, ShapeError
from .ingest import AlignedPanel, PriceSeries
from .pca import FeatureSeries, rolling_feature

logger = logging.getLogger(__name__)

LONG, FLAT, SHORT = 1, 0, -1
POSITION_NAMES = {LONG: "long", FLAT: "flat", SHORT: "short"}
GRID_N_L = (1, 2)
GRID_N_G = (0, 1, 2, 3)
TRADING_DAYS_PER_MONTH = 21


@dataclass(frozen=True)
class StrategyConfig:
    threshold_points: float = 500.0
    long_only: bool = True
    n_l: int = 0
    n_g: int = 0
    agreement_required: bool = True
    cost: float = 0.0  # fraction of notional per unit change of position

    def __post_init__(self):
        if self.threshold_points < 0:
            raise ValueError("threshold must be >= 0")
        if self.n_l < 0 or self.n_g < 0:
            raise ValueError("n_l and n_g must be >= 0")


@dataclass(frozen=True)
class ForecastConfig:
    """Walk-forward network settings shared by both feature variants."""

    input_days: int = 5
    batch_size: int = ffnn.BATCH_SIZE
    hidden: int = 30
    activation: str = "tanh"
    epochs: int = 200
    learning_rate: float = 1e-3
    target_scale: float = 1000.0  # points per network output unit
    warm_start: bool = True


@dataclass(frozen=True)
class EquityCurve:
    dates: np.ndarray  # T + 1 dates: each decision date plus the final exit date
    capital: np.ndarray  # T + 1 values, capital[0] == 1
    daily_return: np.ndarray  # T strategy returns


@dataclass(frozen=True)
class PerformanceStats:
    mean_daily_return: float
    volatility: float
    skewness: float
    kurtosis: float
    monthly_return: float
    total_return: float
    kurtosis_convention: str = "raw"

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and math.isnan(v) else v)
                for k, v in asdict(self).items()}


@dataclass
class BacktestResult:
    dates: np.ndarray
    forecast_5: np.ndarray
    forecast_10: np.ndarray
    signal: np.ndarray  # decided positions before regularization
    active: np.ndarray  # regularizer state per day
    gain_streak: np.ndarray  # shadow gain count on suspended days
    position: np.ndarray  # positions actually held
    market_return: np.ndarray
    curve: EquityCurve
    config: StrategyConfig
    features: dict = field(default_factory=dict)

    @property
    def stats(self) -> PerformanceStats:
        return performance(self.curve)

    def regularizer_labels(self) -> list:
        return ["active" if a else f"suspended({g})" for a, g in zip(self.active, self.gain_streak)]

    def ledger_rows(self) -> list:
        labels = self.regularizer_labels()
        rows = []
        for t in range(self.dates.size):
            rows.append({
                "date": str(self.dates[t]),
                "forecast_5": float(self.forecast_5[t]),
                "forecast_10": float(self.forecast_10[t]),
                "position": POSITION_NAMES[int(self.position[t])],
                "market_return": float(self.market_return[t]),
                "strategy_return": float(self.curve.daily_return[t]),
                "capital": float(self.curve.capital[t + 1]),
                "regularizer_state": labels[t],
            })
        return rows

    def write_ledger(self, path) -> None:
        rows = self.ledger_rows()
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(LEDGER_COLUMNS), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


LEDGER_COLUMNS = ("date", "forecast_5", "forecast_10", "position", "market_return",
                  "strategy_return", "capital", "regularizer_state")


def decide(forecast_5: float, forecast_10: float, cfg: StrategyConfig = StrategyConfig()) -> int:
    """Long if both forecasts exceed +threshold, short if both are below -threshold."""
    thr = cfg.threshold_points
    if cfg.agreement_required:
        up = forecast_5 > thr and forecast_10 > thr
        down = forecast_5 < -thr and forecast_10 < -thr
    else:
        mean = (forecast_5 + forecast_10) / 2
        up, down = mean > thr, mean < -thr
    if up:
        return LONG
    if down and not cfg.long_only:
        return SHORT
    return FLAT


def apply_regularizer(pnl, cfg: StrategyConfig):
    """Replay the regularizer over the rule's unregularized daily P&L.

    Returns ``(active, gain_streak)``: whether trading is on for each day and,
    on suspended days, the shadow gain streak entering that day. The P&L on
    suspended days is exactly what the rule would have earned, so the state
    sequence depends only on the unregularized P&L.
    """
    pnl = np.asarray(pnl, dtype=float)
    active = np.ones(pnl.size, dtype=bool)
    streaks = np.zeros(pnl.size, dtype=int)
    if cfg.n_l == 0:
        return active, streaks
    is_active, losses, gains = True, 0, 0
    for t, x in enumerate(pnl):
        active[t] = is_active
        streaks[t] = 0 if is_active else gains
        if is_active:
            losses = losses + 1 if x < 0 else 0
            if losses >= cfg.n_l:
                is_active, gains = False, 0
        else:
            gains = gains + 1 if x > 0 else 0
            if gains >= cfg.n_g:
                is_active, losses = True, 0
    return active, streaks


def equity_curve(dates, position, market_return, cost: float = 0.0) -> EquityCurve:
    position = np.asarray(position, dtype=float)
    market_return = np.asarray(market_return, dtype=float)
    daily = position * market_return + 0.0  # no negative zeros on flat days
    if cost:
        turnover = np.abs(np.diff(np.concatenate([[0.0], position])))
        daily = daily - cost * turnover
    capital = np.empty(daily.size + 1)
    capital[0] = 1.0
    for t in range(daily.size):
        capital[t + 1] = capital[t] * (1.0 + daily[t])
    return EquityCurve(np.asarray(dates), capital, daily)


def run_strategy(dates, forecast_5, forecast_10, market_return, cfg: StrategyConfig,
                 exit_date=None) -> BacktestResult:
    """Decide, regularize and account for a fixed set of forecasts."""
    dates = np.asarray(dates, dtype="datetime64[D]")
    f5 = np.asarray(forecast_5, dtype=float)
    f10 = np.asarray(forecast_10, dtype=float)
    mret = np.asarray(market_return, dtype=float)
    if not (dates.size == f5.size == f10.size == mret.size):
        raise ShapeError("dates, forecasts and market returns must align one-to-one")
    signal = np.array([decide(a, b, cfg) for a, b in zip(f5, f10)], dtype=int)
    active, streaks = apply_regularizer(signal * mret, cfg)
    position = np.where(active, signal, FLAT)
    curve_dates = dates if exit_date is None else np.append(dates, np.datetime64(exit_date, "D"))
    curve = equity_curve(curve_dates, position, mret, cfg.cost)
    return BacktestResult(dates, f5, f10, signal, active, streaks, position, mret, curve, cfg)


def performance(curve, kurtosis: str = "raw", days_per_month: int = TRADING_DAYS_PER_MONTH) -> PerformanceStats:
    """Moments of the daily returns (population convention) plus compounded returns.

    ``kurtosis`` is ``"raw"`` (fourth standardized moment) or ``"excess"``
    (raw minus 3). Skewness and kurtosis are NaN when the volatility is zero.
    """
    if isinstance(curve, EquityCurve):
        r, capital = curve.daily_return, curve.capital
    else:
        r = np.asarray(curve, dtype=float)
        capital = np.concatenate([[1.0], np.cumprod(1.0 + r)])
    if r.size < 2:
        raise InsufficientDataError("performance statistics need at least 2 days")
    if kurtosis not in ("raw", "excess"):
        raise ValueError("kurtosis convention must be 'raw' or 'excess'")
    mean = float(np.mean(r))
    dev = r - mean
    sigma = float(np.sqrt(np.mean(dev**2)))
    if sigma > 1e-15 * max(1.0, abs(mean)):
        skew = float(np.mean(dev**3) / sigma**3)
        kurt = float(np.mean(dev**4) / sigma**4)
        if kurtosis == "excess":
            kurt -= 3.0
    else:
        sigma, skew, kurt = 0.0, math.nan, math.nan
    total = float(capital[-1] / capital[0] - 1.0)
    monthly = float((1.0 + total) ** (days_per_month / r.size) - 1.0)
    return PerformanceStats(mean, sigma, skew, kurt, monthly, total, kurtosis)


# --- walk-forward forecasting ------------------------------------------------


def _next_date_changes(target: PriceSeries):
    """Map each target date to (next date, next close - close)."""
    return target.dates[:-1], target.dates[1:], np.diff(target.closes)


def walk_forward_forecasts(feature: FeatureSeries, target: PriceSeries, decision_dates,
                           cfg: ForecastConfig = ForecastConfig(), seed=0) -> np.ndarray:
    """Next-day change forecasts (in points) for each decision date.

    For decision date t the network is trained on the ``batch_size`` most
    recent (5 feature values -> next-day target change) pairs whose target
    change is already known at t, then fed the 5 feature values ending at t.
    Inputs are standardized with the training batch's own mean and deviation;
    targets are divided by ``target_scale``.
    """
    decision_dates = np.asarray(decision_dates, dtype="datetime64[D]")
    pos_in_target = np.searchsorted(target.dates, feature.dates)
    clipped = np.minimum(pos_in_target, target.dates.size - 1)
    if np.any(target.dates[clipped] != feature.dates):
        raise ShapeError("feature dates must be a subset of the target's dates")
    # next-day change for each feature date (NaN on the last date)
    change = np.full(feature.dates.size, np.nan)
    change_date = np.full(feature.dates.size, np.datetime64("NaT"), dtype="datetime64[D]")
    ok = pos_in_target + 1 < target.dates.size
    change[ok] = target.closes[pos_in_target[ok] + 1] - target.closes[pos_in_target[ok]]
    change_date[ok] = target.dates[pos_in_target[ok] + 1]

    k, b = cfg.input_days, cfg.batch_size
    hidden = ffnn.Activation(cfg.activation)
    seq = np.random.SeedSequence(seed)
    net = ffnn.Network.init((k, cfg.hidden, 1), hidden=hidden, seed=seq.spawn(1)[0])
    state = ffnn.AdamState.for_network(net, lr=cfg.learning_rate)
    forecasts = np.zeros(decision_dates.size)
    values = feature.values
    for i, t in enumerate(decision_dates):
        j = int(np.searchsorted(feature.dates, t, side="right")) - 1
        if j < 0 or feature.dates[j] != t:
            logger.info("no feature value on %s; forecast set to 0", t)
            continue
        first = j - b
        if first - k + 1 < 0:
            raise InsufficientDataError(f"not enough feature history before {t} for a training batch")
        rows = np.arange(first, j)
        inputs = np.stack([values[r - k + 1 : r + 1] for r in rows])
        targets = change[rows]
        if feature.dates[j] > t or np.any(change_date[rows] > t):
            raise ContractViolation(f"training data for {t} extends past the decision date")
        mu = inputs.mean()
        sd = inputs.std()
        sd = sd if sd > 0 else 1.0
        batch = ffnn.TrainingBatch((inputs - mu) / sd, targets / cfg.target_scale)
        if not cfg.warm_start:
            net = ffnn.Network.init((k, cfg.hidden, 1), hidden=hidden,
                                    seed=np.random.SeedSequence([seed, i]))
            state = ffnn.AdamState.for_network(net, lr=cfg.learning_rate)
        net, state, _ = ffnn.train(net, state, batch, cfg.epochs, in_place=True)
        x_now = (values[j - k + 1 : j + 1] - mu) / sd
        forecasts[i] = ffnn.forward(net, x_now) * cfg.target_scale
    return forecasts


def decision_window(panel: AlignedPanel, n_days: int):
    """The last ``n_days`` panel dates that still have a next close."""
    if len(panel) < n_days + 1:
        raise InsufficientDataError(f"panel has {len(panel)} dates, need more than {n_days}")
    return panel.dates[-n_days - 1 : -1], panel.dates[-1]


def backtest(panel: AlignedPanel, target: str | None = None, n_days: int = 700,
             cfg: StrategyConfig = StrategyConfig(), forecast_cfg: ForecastConfig = ForecastConfig(),
             seed=0, windows=(5, 10), smooth: bool = True, features=None, forecasts=None,
             workers: int = 1) -> BacktestResult:
    """Walk-forward backtest of the two-network rule over the last ``n_days``.

    ``features`` may supply precomputed feature series keyed by window
    length, and ``forecasts`` a (forecast_5, forecast_10) pair that replaces
    the networks entirely (for test doubles). With ``workers > 1`` the two
    networks train in separate processes; results do not depend on it.
    """
    target = target or panel.names[0]
    tgt = panel.column(target)
    dates, exit_date = decision_window(panel, n_days)
    idx = np.searchsorted(tgt.dates, dates)
    mret = tgt.closes[idx + 1] / tgt.closes[idx] - 1.0

    feats = dict(features or {})
    if forecasts is None:
        seeds = [int(ss.generate_state(1)[0]) for ss in np.random.SeedSequence(seed).spawn(len(windows))]
        for w in windows:
            if w not in feats:
                feats[w] = rolling_feature(panel, w, smooth=smooth, target=target)
            if feats[w].dates.size and feats[w].dates[-1] > panel.dates[-1]:
                raise ContractViolation("feature series is dated beyond the panel")
        jobs = [(feats[w], tgt, dates, forecast_cfg, s) for w, s in zip(windows, seeds)]
        if workers > 1:
            with ProcessPoolExecutor(min(workers, len(jobs))) as pool:
                out = list(pool.map(walk_forward_forecasts, *zip(*jobs)))
        else:
            out = [walk_forward_forecasts(*job) for job in jobs]
        f5, f10 = out
    else:
        f5, f10 = (np.asarray(f, dtype=float) for f in forecasts)
    result = run_strategy(dates, f5, f10, mret, cfg, exit_date)
    result.features = feats
    return result


def buy_and_hold(result: BacktestResult) -> EquityCurve:
    return equity_curve(result.curve.dates, np.ones(result.dates.size), result.market_return)


def regularization_grid(result: BacktestResult, n_ls=GRID_N_L, n_gs=GRID_N_G,
                        kurtosis: str = "raw") -> list:
    """Re-run the rule with every (n_l, n_g) pair; one row of statistics each."""
    rows = []
    exit_date = result.curve.dates[-1]
    for n_l in n_ls:
        for n_g in n_gs:
            cfg = replace(result.config, n_l=n_l, n_g=n_g)
            r = run_strategy(result.dates, result.forecast_5, result.forecast_10,
                             result.market_return, cfg, exit_date)
            stats = performance(r.curve, kurtosis=kurtosis)
            rows.append({"n_l": n_l, "n_g": n_g, **stats.to_dict()})
    return rows
