"""Command-line front end: ``marketineff {corr,dcca,levy,pca,backtest,report}``.

Every command reads a panel manifest, writes plot-ready CSV/JSON (and a few
SVG plots) into ``--out`` and records a ``run.json`` with the configuration,
seed and library versions. Outputs carry no timestamps, so identical runs
give identical bytes.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric error,
5 contract violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, dcca, levy, pca, strategy
from .correlation import cross_correlation, noise_band
from .errors import (
    ContractViolation,
    DataError,
    FitError,
    NumericError,
    RangeError,
    ShapeError,
)
from .ingest import load_manifest, log_returns, reduce
from .plotting import line_plot

logger = logging.getLogger("marketineff")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_CONTRACT = 0, 2, 3, 4, 5

# flags that change where or how fast a run happens, never what it computes
_EXECUTION_ONLY = ("out", "workers", "verbose", "func")


class UsageError(Exception):
    pass


# --- output helpers ------------------------------------------------------------


def _num(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) for v in r])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if not np.isfinite(v) else v
    if isinstance(v, np.datetime64):
        return str(v)
    if isinstance(v, Path):
        return str(v)
    return v


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _versions() -> dict:
    import numba
    import scipy

    return {
        "marketineff": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "python": platform.python_version(),
    }


def _write_run_manifest(args, out: Path, outputs) -> None:
    config = {k: v for k, v in vars(args).items() if k not in _EXECUTION_ONLY}
    _write_json(out / "run.json", {
        "command": args.command,
        "seed": args.seed,
        "config": config,
        "versions": _versions(),
        "outputs": sorted(outputs),
    })


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in name)


# --- data access -----------------------------------------------------------------


def _panel(args):
    if args.manifest is None:
        raise UsageError("--manifest is required")
    if not Path(args.manifest).exists():
        raise UsageError(f"manifest not found: {args.manifest}")
    manifest = load_manifest(args.manifest)
    panel = manifest.load_panel(getattr(args, "date_from", None), getattr(args, "date_to", None))
    return manifest, panel


def _pairs(args, manifest, panel):
    if args.pair:
        pairs = [tuple(p) for p in args.pair]
    else:
        pairs = [(manifest.target, name) for name in panel.names]
    for a, b in pairs:
        for n in (a, b):
            if n not in panel.names:
                raise UsageError(f"unknown series {n!r}; manifest has {list(panel.names)}")
    return pairs


def _fit_range(args):
    if args.fit_min is None and args.fit_max is None:
        return None
    return (args.fit_min if args.fit_min is not None else 1,
            args.fit_max if args.fit_max is not None else sys.maxsize)


def _returns(panel, name):
    return log_returns(panel.column(name))


# --- commands --------------------------------------------------------------------


def cmd_corr(args, out: Path) -> list:
    manifest, panel = _panel(args)
    outputs = []
    plot = []
    for a, b in _pairs(args, manifest, panel):
        ra, rb = reduce(_returns(panel, a)), reduce(_returns(panel, b))
        cf = cross_correlation(ra, rb, args.n_max, absolute=args.absolute)
        band = noise_band(ra.values.size, args.confidence)
        name = f"corr_{_safe(a)}_{_safe(b)}{'_abs' if args.absolute else ''}.csv"
        _write_csv(out / name, ["lag", "correlation", "noise_band"],
                   [(int(n), v, band) for n, v in zip(cf.lags, cf.values)])
        outputs.append(name)
        plot.append((f"{a} / {b}", cf.lags[1:], cf.values[1:]))
    line_plot(out / "corr.svg", plot, title="lagged correlation", xlabel="lag (days)",
              ylabel="C(n)")
    return outputs + ["corr.svg"]


def cmd_dcca(args, out: Path) -> list:
    manifest, panel = _panel(args)
    outputs = []
    plot = []
    fit_range = _fit_range(args)
    for a, b in _pairs(args, manifest, panel):
        ra = reduce(_returns(panel, a))
        rb = ra if a == b else reduce(_returns(panel, b))
        boxes = None
        if args.n_min != 4 or args.n_max is not None or args.ratio != 2 ** 0.25:
            boxes = dcca.default_box_sizes(ra.values.size, args.n_min, args.ratio)
            if args.n_max is not None:
                boxes = boxes[boxes <= args.n_max]
        curve = dcca.dcca_f2(ra, rb, boxes, workers=args.workers)
        stem = f"dcca_{_safe(a)}_{_safe(b)}"
        _write_csv(out / f"{stem}.csv", ["n", "F2"], zip(curve.box_sizes.tolist(), curve.f2))
        summary = {"pair": [a, b]}
        try:
            summary.update(dcca.fit_power_law(curve, fit_range).to_dict())
            summary["status"] = "ok"
        except FitError as exc:
            summary.update({"lambda": None, "r_squared": None, "fit_range": fit_range,
                            "excluded_points": int(np.sum(curve.f2 <= 0)),
                            "status": f"no power law: {exc}"})
        _write_json(out / f"{stem}.json", summary)
        outputs += [f"{stem}.csv", f"{stem}.json"]
        plot.append((f"{a} / {b}", curve.box_sizes, curve.f2))
    line_plot(out / "dcca.svg", plot, title="detrended covariance", xlabel="n", ylabel="F2(n)",
              logx=True, logy=True)
    return outputs + ["dcca.svg"]


def cmd_levy(args, out: Path) -> list:
    manifest, panel = _panel(args)
    if args.realizations < 1:
        raise UsageError("--realizations must be >= 1")
    names = args.series or [manifest.target]
    outputs = []
    plot = []
    fit_range = _fit_range(args)
    for name in names:
        if name not in panel.names:
            raise UsageError(f"unknown series {name!r}")
        r = _returns(panel, name)
        curve = levy.return_to_origin(r, args.n_values, args.realizations, args.bin_width,
                                      seed=args.seed, workers=args.workers)
        est = levy.estimate_alpha(curve, fit_range)
        stem = f"levy_{_safe(name)}"
        _write_csv(out / f"{stem}.csv", ["n", "p_zero", "stderr"],
                   zip(curve.n_values.tolist(), curve.p_zero, curve.stderr))
        _write_json(out / f"{stem}.json", {
            "series": name,
            "alpha": est.alpha,
            "slope": est.slope,
            "stderr": est.alpha_stderr,
            "slope_stderr": est.stderr,
            "fit_range": est.fit_range,
            "bin_width": curve.bin_width,
            "realizations": curve.realizations,
            "seed": args.seed,
        })
        outputs += [f"{stem}.csv", f"{stem}.json"]
        plot.append((name, curve.n_values, curve.p_zero))
    line_plot(out / "levy.svg", plot, title="return to origin", xlabel="n", ylabel="P(0)",
              logx=True, logy=True)
    return outputs + ["levy.svg"]


def cmd_pca(args, out: Path) -> list:
    manifest, panel = _panel(args)
    outputs = []
    plot = []
    for w in args.windows:
        feat = pca.rolling_feature(panel, w, smooth=not args.no_smooth, target=manifest.target)
        name = f"pca_w{w}.csv"
        _write_csv(out / name, ["date", "pc_value", "largest_eigenvalue"],
                   zip(feat.dates.astype(str), feat.values, feat.largest_eigenvalue))
        outputs.append(name)
        plot.append((f"{w}-day window", np.arange(feat.values.size), feat.values))
    loadings = [pca.loadings_at(panel, d, w, manifest.target)
                for d in (args.loadings_date or [str(panel.dates[-1])]) for w in args.windows]
    _write_json(out / "pca_loadings.json", loadings)
    line_plot(out / "pca.svg", plot, title="first principal component", xlabel="day",
              ylabel="pc value")
    return outputs + ["pca_loadings.json", "pca.svg"]


def _strategy_config(args, n_l=None, n_g=None) -> strategy.StrategyConfig:
    return strategy.StrategyConfig(
        threshold_points=args.threshold,
        long_only=not args.allow_short,
        n_l=args.n_l if n_l is None else n_l,
        n_g=args.n_g if n_g is None else n_g,
    )


def _write_grid(out: Path, rows) -> list:
    _write_json(out / "grid.json", rows)
    header = list(rows[0])
    _write_csv(out / "grid.csv", header, ([r[k] for k in header] for r in rows))
    return ["grid.json", "grid.csv"]


def _grid_args(args):
    return tuple(args.grid_n_l), tuple(args.grid_n_g)


def cmd_backtest(args, out: Path) -> list:
    manifest, panel = _panel(args)
    if len(args.windows) != 2:
        raise UsageError("--windows needs exactly two window lengths")
    fcfg = strategy.ForecastConfig(
        epochs=args.epochs, learning_rate=args.learning_rate, hidden=args.hidden,
        activation=args.activation, target_scale=args.target_scale,
        warm_start=not args.cold_start,
    )
    cfg = _strategy_config(args)
    result = strategy.backtest(panel, manifest.target, args.days, cfg, fcfg, seed=args.seed,
                               windows=tuple(args.windows), smooth=not args.no_smooth,
                               workers=args.workers)
    bh = strategy.buy_and_hold(result)
    result.write_ledger(out / "ledger.csv")
    _write_csv(out / "equity.csv", ["date", "strategy", "buy_and_hold"],
               zip(result.curve.dates.astype(str), result.curve.capital, bh.capital))
    _write_json(out / "stats.json", {
        "strategy_config": asdict(cfg),
        "forecast_config": asdict(fcfg),
        "strategy": strategy.performance(result.curve, args.kurtosis).to_dict(),
        "buy_and_hold": strategy.performance(bh, args.kurtosis).to_dict(),
    })
    n_ls, n_gs = _grid_args(args)
    rows = strategy.regularization_grid(result, n_ls, n_gs, args.kurtosis)
    days = np.arange(result.curve.capital.size)
    line_plot(out / "equity.svg", [("strategy", days, result.curve.capital),
                                   ("buy and hold", days, bh.capital)],
              title="capital per unit invested", xlabel="day", ylabel="capital")
    grid_plot = []
    for n_l, n_g in ((a, b) for a in n_ls for b in n_gs):
        r = strategy.run_strategy(result.dates, result.forecast_5, result.forecast_10,
                                  result.market_return, _strategy_config(args, n_l, n_g),
                                  result.curve.dates[-1])
        grid_plot.append((f"n_l={n_l} n_g={n_g}", days, r.curve.capital))
    line_plot(out / "equity_regularized.svg", grid_plot, title="capital with loss regularization",
              xlabel="day", ylabel="capital")
    return ["ledger.csv", "equity.csv", "stats.json", "equity.svg", "equity_regularized.svg",
            *_write_grid(out, rows)]


def read_ledger(path):
    """Dates, forecasts and market returns from a ledger CSV written by ``backtest``."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"ledger not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(strategy.LEDGER_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise DataError(f"{path}: ledger lacks columns {sorted(missing)}")
        rows = list(reader)
    if len(rows) < 2:
        raise DataError(f"{path}: ledger needs at least two days")
    try:
        dates = np.array([r["date"] for r in rows], dtype="datetime64[D]")
        cols = {k: np.array([float(r[k]) for r in rows])
                for k in ("forecast_5", "forecast_10", "market_return")}
    except ValueError as exc:
        raise DataError(f"{path}: malformed ledger value: {exc}") from None
    return dates, cols["forecast_5"], cols["forecast_10"], cols["market_return"]


def cmd_report(args, out: Path) -> list:
    dates, f5, f10, mret = read_ledger(args.ledger)
    base = strategy.run_strategy(dates, f5, f10, mret, _strategy_config(args, 0, 0))
    n_ls, n_gs = _grid_args(args)
    return _write_grid(out, strategy.regularization_grid(base, n_ls, n_gs, args.kurtosis))


# --- argument parsing ----------------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _common(p, manifest=True):
    if manifest:
        p.add_argument("--manifest", help="panel manifest (INI)")
        p.add_argument("--from", dest="date_from", help="first date, YYYY-MM-DD")
        p.add_argument("--to", dest="date_to", help="last date, YYYY-MM-DD")
    p.add_argument("--seed", type=int, default=0, help="root random seed")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--workers", type=_positive_int, default=1,
                   help="parallel workers; results do not depend on it")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _strategy_flags(p):
    p.add_argument("--threshold", type=float, default=500.0, help="index points")
    p.add_argument("--allow-short", action="store_true", help="take short positions too")
    p.add_argument("--kurtosis", choices=("raw", "excess"), default="raw", help="kurtosis convention")
    p.add_argument("--grid-n-l", type=int, nargs="+", default=list(strategy.GRID_N_L),
                   help="loss-streak lengths for the grid")
    p.add_argument("--grid-n-g", type=int, nargs="+", default=list(strategy.GRID_N_G),
                   help="gain-streak lengths for the grid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marketineff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corr", help="lagged auto/cross-correlations")
    _common(p)
    p.add_argument("--pair", nargs=2, action="append", metavar=("A", "B"),
                   help="series pair (repeatable); default target with every series")
    p.add_argument("--n-max", type=int, default=100, help="largest lag")
    p.add_argument("--absolute", action="store_true", help="correlate absolute values")
    p.add_argument("--confidence", type=float, default=0.95, help="noise band level")
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("dcca", help="detrended cross-correlation and scaling exponent")
    _common(p)
    p.add_argument("--pair", nargs=2, action="append", metavar=("A", "B"),
                   help="series pair (repeatable); default target with every series")
    p.add_argument("--n-min", type=int, default=4, help="smallest box")
    p.add_argument("--n-max", type=int, default=None, help="largest box (default N/4)")
    p.add_argument("--ratio", type=float, default=2 ** 0.25, help="box size growth factor")
    p.add_argument("--fit-min", type=float, default=None, help="smallest scale in the fit")
    p.add_argument("--fit-max", type=float, default=None, help="largest scale in the fit")
    p.set_defaults(func=cmd_dcca)

    p = sub.add_parser("levy", help="return-to-origin probability and tail index")
    _common(p)
    p.add_argument("--series", action="append", help="series name (default target)")
    p.add_argument("--realizations", type=int, default=levy.DEFAULT_REALIZATIONS,
                   help="shuffles per summand count")
    p.add_argument("--n-values", type=int, nargs="+", default=None,
                   help="summand counts (default powers of two up to N/100)")
    p.add_argument("--bin-width", type=float, default=None,
                   help="zero-bin width (default a tenth of the return deviation)")
    p.add_argument("--fit-min", type=float, default=None, help="smallest scale in the fit")
    p.add_argument("--fit-max", type=float, default=None, help="largest scale in the fit")
    p.set_defaults(func=cmd_levy)

    p = sub.add_parser("pca", help="rolling first-principal-component feature")
    _common(p)
    p.add_argument("--windows", type=int, nargs="+", default=list(pca.WINDOW_LENGTHS),
                   help="covariance window lengths in days")
    p.add_argument("--no-smooth", action="store_true", help="skip the trailing mean")
    p.add_argument("--loadings-date", action="append", help="date for a loadings table (repeatable)")
    p.set_defaults(func=cmd_pca)

    defaults = strategy.ForecastConfig()
    p = sub.add_parser("backtest", help="walk-forward forecasts and trading backtest")
    _common(p)
    p.add_argument("--days", type=_positive_int, default=700, help="decision days to backtest")
    p.add_argument("--windows", type=int, nargs="+", default=list(pca.WINDOW_LENGTHS))
    p.add_argument("--no-smooth", action="store_true")
    p.add_argument("--n-l", type=int, default=0, help="losses that suspend trading (0 disables)")
    p.add_argument("--n-g", type=int, default=0, help="shadow gains that resume trading")
    p.add_argument("--epochs", type=_positive_int, default=defaults.epochs, help="ADAM epochs per day")
    p.add_argument("--learning-rate", type=float, default=defaults.learning_rate)
    p.add_argument("--hidden", type=_positive_int, default=defaults.hidden)
    p.add_argument("--activation", choices=("tanh", "logistic"), default=defaults.activation)
    p.add_argument("--target-scale", type=float, default=defaults.target_scale,
                   help="index points per network output unit")
    p.add_argument("--cold-start", action="store_true", help="reinitialize the networks every day")
    _strategy_flags(p)
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("report", help="rebuild the regularization grid from a ledger")
    _common(p, manifest=False)
    p.add_argument("--ledger", required=True, help="ledger.csv written by backtest")
    _strategy_flags(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        outputs = args.func(args, out)
        _write_run_manifest(args, out, outputs + ["run.json"])
    except (UsageError, RangeError) as exc:
        print(f"marketineff {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ShapeError, OSError) as exc:
        print(f"marketineff {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FitError) as exc:
        print(f"marketineff {args.command}: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ContractViolation as exc:
        print(f"marketineff {args.command}: contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except ValueError as exc:
        print(f"marketineff {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
