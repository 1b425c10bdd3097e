"""Walk-forward backtest on a panel with a planted, learnable factor.

The target's next change is a noisy function of the last five smoothed
principal-component values, so the long-only strategy should beat buy and
hold. On a pure random walk it should not, on average.

    python3 demos/learnable_backtest.py
"""

from marketineff import synthetic
from marketineff.strategy import (
    ForecastConfig,
    backtest,
    buy_and_hold,
    performance,
    regularization_grid,
)

cfg = ForecastConfig(epochs=25, learning_rate=5e-3)

for learnable in (True, False):
    panel = synthetic.factor_panel(760, seed=11, learnable=learnable)
    res = backtest(panel, n_days=700, forecast_cfg=cfg, seed=0)
    s, bh = res.stats, performance(buy_and_hold(res))
    kind = "learnable" if learnable else "random walk"
    print(f"{kind:12s} strategy total {s.total_return:+9.3f}  monthly {s.monthly_return:+.4f}  "
          f"buy and hold total {bh.total_return:+.3f}")

print("\nregularization grid on the random walk panel")
print(f"{'n_l':>3} {'n_g':>3} {'monthly':>9} {'total':>9}")
for row in regularization_grid(res):
    print(f"{row['n_l']:>3} {row['n_g']:>3} {row['monthly_return']:+9.4f} {row['total_return']:+9.3f}")
