from __future__ import annotations

import logging
import math
from datetime import date

import pytest

from cryptoforecast import (
    DuplicateDateError,
    EmptySliceError,
    InconsistentCandleError,
    OhlcvRecord,
    ParseError,
    PriceSeries,
    parse_csv,
    slice_by_date,
    split_linear,
    to_csv,
)

from conftest import make_series

HEADER = "Date,Open,High,Low,Close,Volume,MarketCap"


def test_parse_single_row():
    csv = f"{HEADER}\n2019-01-01,100.0,110.0,90.0,105.0,1000,50000\n"
    series = parse_csv(csv.encode(), symbol="btc")
    assert len(series) == 1
    record = series.records[0]
    assert record.date == date(2019, 1, 1)
    assert record.close == 105.0
    assert record.volume == 1000.0
    assert record.market_cap == 50000.0


def test_duplicate_date_rejected():
    csv = (
        f"{HEADER}\n"
        "2019-01-01,100,110,90,105,1,1\n"
        "2019-01-01,101,111,91,106,1,1\n"
    )
    with pytest.raises(DuplicateDateError):
        parse_csv(csv.encode())


def test_inconsistent_candle_names_date():
    csv = f"{HEADER}\n2019-01-03,100,90,110,105,1,1\n"
    with pytest.raises(InconsistentCandleError, match="2019-01-03"):
        parse_csv(csv.encode())


@pytest.mark.parametrize(
    "cell",
    ['"1,234.5"', "$105", "1_000", "abc", "nan", "inf"],
)
def test_malformed_numbers_name_row(cell):
    csv = f"{HEADER}\n2019-01-01,100,110,90,{cell},1,1\n"
    with pytest.raises(ParseError, match="row 2"):
        parse_csv(csv.encode())


def test_unparseable_date_names_row():
    csv = f"{HEADER}\n2019-01-01,100,110,90,105,1,1\nJan 2 2019,100,110,90,105,1,1\n"
    with pytest.raises(ParseError, match="row 3"):
        parse_csv(csv.encode())


def test_dotted_dates_accepted():
    csv = f"{HEADER}\n27.12.2013,100,110,90,105,1,1\n"
    series = parse_csv(csv.encode())
    assert series.records[0].date == date(2013, 12, 27)


def test_descending_input_resorted():
    csv = (
        f"{HEADER}\n"
        "2019-01-03,100,110,90,105,1,1\n"
        "2019-01-01,100,110,90,103,1,1\n"
        "2019-01-02,100,110,90,104,1,1\n"
    )
    series = parse_csv(csv.encode())
    assert [r.date.day for r in series.records] == [1, 2, 3]
    assert list(series.closes()) == [103.0, 104.0, 105.0]


def test_missing_optional_columns():
    csv = "Date,Open,High,Low,Close\n2019-01-01,100,110,90,105\n"
    series = parse_csv(csv.encode(), symbol="cci30")
    assert series.records[0].volume is None
    assert series.available_attributes() == ("open", "high", "low", "close")
    with pytest.raises(ValueError, match="volume"):
        series.column("volume")


def test_empty_optional_cell_is_missing():
    csv = f"{HEADER}\n2019-01-01,100,110,90,105,,\n"
    series = parse_csv(csv.encode())
    assert series.records[0].volume is None
    assert series.records[0].market_cap is None


def test_missing_required_column():
    csv = "Date,Open,High,Low\n2019-01-01,100,110,90\n"
    with pytest.raises(ParseError, match="Close"):
        parse_csv(csv.encode())


def test_schema_remap():
    csv = 'Day,Open,High,Low,"Close Price",Volume,Market Cap\n2019-01-01,100,110,90,105,1,2\n'
    series = parse_csv(
        csv.encode(),
        schema={"date": "Day", "close": "Close Price", "market_cap": "Market Cap"},
    )
    assert series.records[0].close == 105.0
    assert series.records[0].market_cap == 2.0


def test_extra_columns_ignored():
    csv = "Date,Open,High,Low,Close,Volume,MarketCap,Notes\n2019-01-01,100,110,90,105,1,1,hello\n"
    assert len(parse_csv(csv.encode())) == 1


def test_gap_warning(caplog):
    csv = f"{HEADER}\n2019-01-01,100,110,90,105,1,1\n2019-01-05,100,110,90,105,1,1\n"
    with caplog.at_level(logging.WARNING):
        series = parse_csv(csv.encode(), symbol="gappy")
    assert series.date_gaps() == [(date(2019, 1, 1), date(2019, 1, 5))]
    assert any("gap" in message for message in caplog.messages)


def test_round_trip():
    series = make_series([100.25, 101.5, 99.875], symbol="rt")
    reparsed = parse_csv(to_csv(series).encode(), symbol="rt")
    assert reparsed.records == series.records
    index_series = make_series([100.0, 101.0], symbol="idx", with_volume=False)
    assert parse_csv(to_csv(index_series).encode(), symbol="idx").records == index_series.records


def test_record_invariants():
    with pytest.raises(ValueError, match="positive"):
        OhlcvRecord(date=date(2019, 1, 1), open=0.0, high=1.0, low=0.5, close=0.9)
    with pytest.raises(InconsistentCandleError):
        OhlcvRecord(date=date(2019, 1, 1), open=1.0, high=0.5, low=1.5, close=1.0)
    with pytest.raises(ValueError, match="nonnegative"):
        OhlcvRecord(date=date(2019, 1, 1), open=1.0, high=2.0, low=0.5, close=1.0, volume=-1.0)


def test_series_invariants():
    with pytest.raises(ValueError, match="empty"):
        PriceSeries(records=(), symbol="x")
    a = make_series([1, 2]).records
    with pytest.raises(ValueError, match="sorted"):
        PriceSeries(records=(a[1], a[0]), symbol="x")
    with pytest.raises(DuplicateDateError):
        PriceSeries(records=(a[0], a[0]), symbol="x")


def test_slice_by_date():
    series = make_series(range(100, 110), start=date(2019, 1, 1))
    part = slice_by_date(series, date(2019, 1, 3), date(2019, 1, 5))
    assert len(part) == 3
    assert part.first_date == date(2019, 1, 3)

    full = slice_by_date(series, series.first_date, series.last_date)
    assert full.records == series.records

    with pytest.raises(EmptySliceError):
        slice_by_date(series, date(2019, 2, 1), date(2019, 2, 2))
    with pytest.raises(ValueError, match="after"):
        slice_by_date(series, date(2019, 1, 5), date(2019, 1, 3))


def test_slice_idempotent():
    series = make_series(range(100, 120))
    once = slice_by_date(series, date(2019, 1, 4), date(2019, 1, 9))
    twice = slice_by_date(once, date(2019, 1, 4), date(2019, 1, 9))
    assert once.records == twice.records


def test_split_linear_basic():
    series = make_series(range(100, 110))
    head, tail = split_linear(series, 0.6)
    assert len(head) == 6 and len(tail) == 4
    assert head.records + tail.records == series.records

    with pytest.raises(ValueError):
        split_linear(make_series([100]), 0.5)
    with pytest.raises(ValueError):
        split_linear(series, 1.0)


def test_split_linear_partitions_everywhere():
    # Sizes sum to n, order kept, both parts nonempty, for every n and ratio.
    for n in range(2, 201):
        series = make_series(range(100, 100 + n))
        for tenths in range(1, 10):
            head, tail = split_linear(series, tenths / 10)
            assert len(head) >= 1 and len(tail) >= 1
            assert len(head) + len(tail) == n
            assert head.records + tail.records == series.records
            assert len(head) == min(max(math.floor(tenths / 10 * n), 1), n - 1)
