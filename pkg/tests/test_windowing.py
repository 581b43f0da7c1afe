from __future__ import annotations

from datetime import date, timedelta

import numpy as np
import pytest

from cryptoforecast import (
    InsufficientDataError,
    make_same_day_examples,
    window,
    with_prev_label_feature,
)

from conftest import make_series


def test_minimal_window():
    series = make_series([1, 2, 3])
    ex = window(series, {"close"}, window_size=1, step_size=1, horizon=1)
    assert len(ex) == 2
    assert ex.feature_names == ("close-0",)
    assert ex.features.tolist() == [[1.0], [2.0]]
    assert ex.labels.tolist() == [2.0, 3.0]
    assert ex.prev_actuals.tolist() == [1.0, 2.0]
    assert ex.label_dates == (date(2019, 1, 2), date(2019, 1, 3))


def test_window_width_two():
    series = make_series([10, 11, 12, 13, 14])
    ex = window(series, {"close"}, window_size=2, step_size=1, horizon=1)
    assert ex.feature_names == ("close-1", "close-0")
    assert ex.features.tolist() == [[10, 11], [11, 12], [12, 13]]
    assert ex.labels.tolist() == [12, 13, 14]
    assert ex.prev_actuals.tolist() == [11, 12, 13]


def test_window_step_two():
    series = make_series([10, 11, 12, 13, 14])
    ex = window(series, {"close"}, window_size=2, step_size=2, horizon=1)
    assert ex.features.tolist() == [[10, 11], [12, 13]]
    assert ex.labels.tolist() == [12, 14]


def test_window_too_short():
    series = make_series([1, 2, 3])
    with pytest.raises(InsufficientDataError, match="at least 5"):
        window(series, {"close"}, window_size=3, step_size=1, horizon=2)


def test_window_rejects_unknown_and_missing_attributes():
    series = make_series([1, 2, 3], with_volume=False)
    with pytest.raises(ValueError, match="unknown"):
        window(series, {"sentiment"}, 1, 1, 1)
    with pytest.raises(ValueError, match="volume"):
        window(series, {"volume"}, 1, 1, 1)
    with pytest.raises(ValueError, match="positive"):
        window(series, {"close"}, 0, 1, 1)


def test_window_count_formula():
    for n in (5, 9, 17, 30):
        series = make_series(range(100, 100 + n))
        for w in range(1, 5):
            for s in range(1, 5):
                for h in range(1, 5):
                    if n < w + h:
                        continue
                    ex = window(series, {"close"}, w, s, h)
                    assert len(ex) == (n - w - h) // s + 1


def test_window_values_come_from_input():
    series = make_series(np.linspace(50, 90, 20))
    ex = window(series, {"close", "open"}, window_size=3, step_size=2, horizon=2)
    pool = set(series.closes()) | set(series.column("open"))
    assert set(ex.features.ravel()) <= pool
    assert set(ex.labels) <= set(series.closes())


def test_window_shift_identity():
    closes = [3.0, 1.0, 4.0, 1.5, 9.0]
    series = make_series(closes)
    ex = window(series, {"close"}, 1, 1, 1)
    assert ex.labels.tolist() == closes[1:]
    assert ex.features[:, 0].tolist() == closes[:-1]


def test_window_multi_attribute_order():
    series = make_series([10, 11, 12, 13])
    ex = window(series, {"close", "high", "open"}, window_size=2, step_size=1, horizon=1)
    assert ex.feature_names == (
        "open-1", "open-0", "high-1", "high-0", "close-1", "close-0",
    )


def test_same_day_examples():
    series = make_series([10, 11, 12])
    ex = make_same_day_examples(series, {"open", "high", "low"})
    assert len(ex) == 3
    assert ex.feature_names == ("open", "high", "low")
    assert ex.features.shape == (3, 3)
    assert ex.labels.tolist() == [10, 11, 12]
    assert ex.prev_actuals.tolist() == [10, 10, 11]
    assert ex.first_prev_actual_is_self


def test_same_day_rejects_label_leakage():
    series = make_series([10, 11, 12])
    with pytest.raises(ValueError, match="leakage"):
        make_same_day_examples(series, {"open", "close"})


def test_same_day_january_row_count():
    series = make_series(np.linspace(3500, 4100, 31), start=date(2019, 1, 1))
    assert series.last_date == date(2019, 1, 31)
    ex = make_same_day_examples(series, {"open", "high", "low", "volume", "market_cap"})
    assert len(ex) == 31


def test_prev_label_feature_appended():
    series = make_series([10, 11, 12, 13])
    ex = with_prev_label_feature(make_same_day_examples(series, {"open"}), "close-1")
    assert ex.feature_names == ("open", "close-1")
    assert len(ex) == 3  # flagged first example dropped
    assert ex.features[:, 1].tolist() == [10, 11, 12]
    assert ex.labels.tolist() == [11, 12, 13]
    assert not ex.first_prev_actual_is_self
    with pytest.raises(ValueError, match="already present"):
        with_prev_label_feature(ex, "close-1")


def test_subset_keeps_alignment():
    series = make_series(range(100, 110))
    ex = window(series, {"close"}, 2, 1, 1)
    sub = ex.subset(np.array([0, 2, 4]))
    assert len(sub) == 3
    assert sub.labels.tolist() == [ex.labels[0], ex.labels[2], ex.labels[4]]
    assert sub.label_dates == (ex.label_dates[0], ex.label_dates[2], ex.label_dates[4])
