"""Regenerate the synthetic CSV fixtures bundled in ``marketineff/data``.

Run from the repository root: ``python3 tools/make_fixtures.py``.
"""

from pathlib import Path

import numpy as np

from marketineff import synthetic
from marketineff.ingest import PriceSeries, write_csv

DATA = Path(__file__).resolve().parents[1] / "src" / "marketineff" / "data"
N = 10000


def manifest(name, series, target):
    lines = ["[panel]", f"target = {target}", "fill_policy = intersection", "", "[series]"]
    lines += [f"{s} = {s.lower()}.csv" for s in series]
    (DATA / f"{name}.ini").write_text("\n".join(lines) + "\n", encoding="utf-8")


def save(series_id, returns, start_price=100.0):
    write_csv(synthetic.prices_from_log_returns(returns, series_id, start_price),
              DATA / f"{series_id.lower()}.csv")


def main():
    DATA.mkdir(exist_ok=True)
    save("WN", synthetic.gaussian_returns(N, seed=101))
    save("WN2", synthetic.gaussian_returns(N, seed=102))
    save("AR1", synthetic.ar1(N, 0.5, seed=103))
    ta, tb = synthetic.common_trend_pair(N, seed=104)
    save("TA", ta)
    save("TB", tb)
    save("LEVY", synthetic.levy_returns(N, alpha=1.5, gamma=1.0, d=20.0, seed=105))
    wn = synthetic.prices_from_log_returns(np.zeros(N), "CONST")
    write_csv(PriceSeries("CONST", wn.dates, np.full(N + 1, 50.0)), DATA / "const.csv")

    manifest("noise", ["WN", "WN2"], "WN")
    manifest("ar1", ["AR1"], "AR1")
    manifest("trend", ["TA", "TB"], "TA")
    manifest("levy", ["LEVY"], "LEVY")
    manifest("const", ["CONST", "WN"], "CONST")

    for name, learnable, seed in (("learnable", True, 7), ("random", False, 8)):
        panel = synthetic.factor_panel(760, seed=seed, learnable=learnable)
        ids = []
        for col in panel.names:
            sid = f"{name.upper()}_{col}"
            write_csv(PriceSeries(sid, panel.dates, panel.values[:, panel.index(col)]),
                      DATA / f"{sid.lower()}.csv")
            ids.append(sid)
        manifest(name, ids, ids[0])


if __name__ == "__main__":
    main()
