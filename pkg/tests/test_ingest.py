import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import write_rows
from marketineff.errors import (
    AlignmentError,
    DataError,
    DegenerateSeriesError,
    InsufficientDataError,
    IntegrityError,
    ParseError,
)
from marketineff.ingest import (
    FORWARD_FILL,
    INTERSECTION,
    CsvSchema,
    PriceSeries,
    ReturnSeries,
    align,
    load_csv,
    load_manifest,
    log_returns,
    reduce,
    write_csv,
)


def series(name, days, closes):
    return PriceSeries(name, np.array(days, dtype="datetime64[D]"), closes)


# --- load_csv -----------------------------------------------------------------


def test_load_two_rows(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("2016-01-04", 100.0), ("2016-01-05", 101.0)])
    s = load_csv(p)
    assert len(s) == 2
    assert s.instrument_id == "x"
    assert s.dates[0] == np.datetime64("2016-01-04")
    np.testing.assert_array_equal(s.closes, [100.0, 101.0])


def test_load_sorts_rows(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("2016-01-06", 3), ("2016-01-04", 1), ("2016-01-05", 2)])
    s = load_csv(p)
    np.testing.assert_array_equal(s.closes, [1, 2, 3])
    assert np.all(np.diff(s.dates).astype(int) > 0)


def test_zero_close_rejected(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("2016-01-04", 100.0), ("2016-01-05", 0)])
    with pytest.raises(IntegrityError):
        load_csv(p)


def test_negative_close_rejected(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("2016-01-04", -1.0)])
    with pytest.raises(IntegrityError):
        load_csv(p)


def test_duplicate_date_rejected(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("2016-01-04", 1.0), ("2016-01-04", 2.0)])
    with pytest.raises(IntegrityError):
        load_csv(p)


def test_bad_number_reports_row(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("2016-01-04", 1.0), ("2016-01-05", "abc")])
    with pytest.raises(ParseError) as err:
        load_csv(p)
    assert err.value.row == 2


def test_bad_date_reports_row(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("04/01/2016", 1.0)])
    with pytest.raises(ParseError) as err:
        load_csv(p)
    assert err.value.row == 1


def test_missing_column(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("2016-01-04", 1.0)], header=("day", "close"))
    with pytest.raises(ParseError):
        load_csv(p)


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        load_csv(tmp_path / "nope.csv")


def test_gap_rows_are_dropped(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("2016-01-04", 1.0), ("2016-01-05", ""), ("2016-01-06", 3.0)])
    s = load_csv(p)
    assert s.dates.tolist() == list(np.array(["2016-01-04", "2016-01-06"], dtype="datetime64[D]"))


def test_custom_schema(tmp_path):
    p = write_rows(tmp_path / "x.csv", [("04/01/2016", 7.5)], header=("Date", "Last"))
    s = load_csv(p, CsvSchema("Date", "Last", "%d/%m/%Y"), instrument_id="X")
    assert s.instrument_id == "X" and s.dates[0] == np.datetime64("2016-01-04")


def test_write_then_load_round_trip(tmp_path):
    s = series("A", ["2016-01-04", "2016-01-05"], [1.0 / 3.0, 1e5 + 0.1])
    write_csv(s, tmp_path / "a.csv")
    back = load_csv(tmp_path / "a.csv", instrument_id="A")
    np.testing.assert_array_equal(back.closes, s.closes)
    np.testing.assert_array_equal(back.dates, s.dates)


def test_price_series_is_immutable():
    s = series("A", ["2016-01-04"], [1.0])
    with pytest.raises(ValueError):
        s.closes[0] = 2.0


# --- manifest -----------------------------------------------------------------


def test_manifest_round_trip(tmp_path):
    write_rows(tmp_path / "a.csv", [("2016-01-04", 1.0), ("2016-01-05", 2.0), ("2016-01-06", 3.0)])
    write_rows(tmp_path / "b.csv", [("2016-01-04", 5.0), ("2016-01-06", 6.0)])
    (tmp_path / "m.ini").write_text("[panel]\ntarget = Bx\n\n[series]\nAa = a.csv\nBx = b.csv\n")
    m = load_manifest(tmp_path / "m.ini")
    assert m.target == "Bx"
    panel = m.load_panel()
    assert panel.names == ("Aa", "Bx")
    assert len(panel) == 2
    assert len(m.load_panel(start="2016-01-05")) == 1


def test_manifest_unknown_target(tmp_path):
    (tmp_path / "m.ini").write_text("[panel]\ntarget = Z\n[series]\nA = a.csv\n")
    with pytest.raises(DataError):
        load_manifest(tmp_path / "m.ini")


def test_bundled_manifests_load(data_dir):
    for ini in sorted(data_dir.glob("*.ini")):
        m = load_manifest(ini)
        assert m.target in m.series
        assert len(m.load_panel()) > 100


# --- align --------------------------------------------------------------------


def test_align_identical_dates():
    d = ["2016-01-04", "2016-01-05"]
    p = align([series("A", d, [1, 2]), series("B", d, [3, 4])])
    assert p.dates.tolist() == series("A", d, [1, 2]).dates.tolist()
    np.testing.assert_array_equal(p.values, [[1, 3], [2, 4]])


def test_align_intersection():
    a = series("A", ["2016-01-04", "2016-01-05", "2016-01-06"], [1, 2, 3])
    b = series("B", ["2016-01-04", "2016-01-06"], [10, 30])
    p = align([a, b], INTERSECTION)
    assert [str(d) for d in p.dates] == ["2016-01-04", "2016-01-06"]
    np.testing.assert_array_equal(p.values, [[1, 10], [3, 30]])


def test_align_forward_fill():
    a = series("A", ["2016-01-04", "2016-01-05", "2016-01-06"], [1, 2, 3])
    b = series("B", ["2016-01-04", "2016-01-06"], [10, 30])
    p = align([a, b], FORWARD_FILL)
    assert len(p) == 3
    assert p.values[1, 1] == p.values[0, 1] == 10


def test_forward_fill_starts_at_latest_first_date():
    a = series("A", ["2016-01-04", "2016-01-05", "2016-01-06"], [1, 2, 3])
    b = series("B", ["2016-01-05", "2016-01-06"], [20, 30])
    p = align([a, b], FORWARD_FILL)
    assert str(p.dates[0]) == "2016-01-05"


def test_align_empty_intersection():
    a = series("A", ["2016-01-04"], [1])
    b = series("B", ["2016-01-05"], [1])
    with pytest.raises(AlignmentError):
        align([a, b])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sets(st.integers(0, 60), min_size=1, max_size=30), min_size=1, max_size=4))
def test_intersection_dates_subset_of_inputs(day_sets):
    base = np.datetime64("2016-01-01")
    ss = [series(f"S{i}", sorted(base + np.array(sorted(d))), np.ones(len(d)))
          for i, d in enumerate(day_sets)]
    try:
        p = align(ss)
    except AlignmentError:
        assert not set.intersection(*day_sets)
        return
    for s in ss:
        assert np.isin(p.dates, s.dates).all()


# --- returns and reduction ------------------------------------------------------


def test_log_returns_exponential():
    s = series("A", ["2016-01-04", "2016-01-05", "2016-01-06"], [1.0, math.e, math.e**2])
    np.testing.assert_allclose(log_returns(s).values, [1.0, 1.0], rtol=0, atol=1e-15)


def test_log_returns_constant():
    s = series("A", ["2016-01-04", "2016-01-05", "2016-01-06"], [5.0, 5.0, 5.0])
    np.testing.assert_array_equal(log_returns(s).values, [0.0, 0.0])


def test_log_returns_ten_percent():
    r = log_returns(series("A", ["2016-01-04", "2016-01-05"], [100.0, 110.0]))
    assert r.values[0] == pytest.approx(0.0953102, abs=1e-7)
    assert str(r.dates[0]) == "2016-01-05"


def test_log_returns_needs_two_prices():
    with pytest.raises(InsufficientDataError):
        log_returns(series("A", ["2016-01-04"], [1.0]))


def test_reduce_symmetric_pair():
    r = reduce(ReturnSeries([-1.0, 1.0]))
    np.testing.assert_array_equal(r.values, [-1.0, 1.0])
    assert r.mean == 0.0 and r.sigma == 1.0


def test_reduce_constant_is_degenerate():
    with pytest.raises(DegenerateSeriesError):
        reduce(ReturnSeries([0.0, 0.0, 0.0]))


def test_reduce_moments():
    r = reduce(ReturnSeries([1.0, 2.0, 3.0]))
    assert abs(np.mean(r.values)) < 1e-12
    assert abs(np.std(r.values) - 1.0) < 1e-12
    assert r.sigma == pytest.approx(np.sqrt(2.0 / 3.0), rel=1e-15)


finite_returns = st.lists(st.floats(-0.2, 0.2, allow_nan=False), min_size=3, max_size=200)


@settings(max_examples=100, deadline=None)
@given(finite_returns)
def test_reduce_idempotent(values):
    try:
        once = reduce(np.array(values))
    except DegenerateSeriesError:
        return
    twice = reduce(once.values)
    np.testing.assert_allclose(twice.values, once.values, rtol=0, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-0.1, 0.1, allow_nan=False), min_size=3, max_size=200),
       st.floats(1e-3, 1e3))
def test_price_scale_cancels(rets, c):
    closes = 100 * np.exp(np.concatenate([[0], np.cumsum(rets)]))
    days = np.datetime64("2016-01-01") + np.arange(closes.size)
    s = PriceSeries("A", days, closes)
    try:
        a = reduce(log_returns(s))
    except DegenerateSeriesError:
        return
    # rounding of ln(c * x) is ~1e-15 absolute; below sigma ~ 1e-3 that no
    # longer fits in 1e-12 after division by sigma
    if a.sigma < 1e-3:
        return
    b = reduce(log_returns(s.scaled(c)))
    np.testing.assert_allclose(b.values, a.values, rtol=0, atol=1e-12)
