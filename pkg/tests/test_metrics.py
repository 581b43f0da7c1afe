from __future__ import annotations

import math
from datetime import date, timedelta

import numpy as np
import pytest

from cryptoforecast import (
    DivisionGuardError,
    absolute_error,
    correlation,
    performance_vector,
    relative_error,
    residual_summary,
    rmse,
    squared_error,
    trend_accuracy,
)
from cryptoforecast.metrics import METRIC_KEYS


def test_rmse():
    assert rmse([2, 4, 6], [2, 4, 6]) == 0.0
    assert rmse([1, 2, 3, 4], [2, 3, 4, 5]) == 1.0
    with pytest.raises(ValueError):
        rmse([1, 2], [1])
    with pytest.raises(ValueError):
        rmse([], [])


def test_trend_accuracy_fixtures():
    assert trend_accuracy([2, 1, 2], [3, 0, 3], [1, 2, 1]) == 1.0
    assert trend_accuracy([2, 1, 2], [0, 0, 0], [1, 2, 1]) == pytest.approx(1 / 3)
    actual = [5.0, 4.0, 4.5, 6.0]
    assert trend_accuracy(actual, actual, [4.8, 5.0, 4.0, 4.5]) == 1.0


def test_trend_accuracy_zero_is_not_falling():
    # prediction equal to the previous actual counts as an upward call
    assert trend_accuracy([2.0], [1.0], [1.0]) == 1.0
    assert trend_accuracy([0.5], [1.0], [1.0]) == 0.0


def test_error_stats_fixtures():
    mean, std = absolute_error([1, 2, 3, 4], [2, 3, 4, 5])
    assert (mean, std) == (1.0, 0.0)
    rel = relative_error([1, 2, 3, 4], [2, 3, 4, 5])
    assert rel.mean == pytest.approx((1 + 1 / 2 + 1 / 3 + 1 / 4) / 4, abs=1e-15)
    perfect = [3.0, 7.0, 9.0]
    for fn in (absolute_error, relative_error, squared_error):
        assert fn(perfect, perfect) == (0.0, 0.0)


def test_relative_error_zero_actual():
    with pytest.raises(DivisionGuardError, match="index 1"):
        relative_error([1.0, 0.0, 2.0], [1.0, 1.0, 2.0])


def test_correlation():
    assert correlation([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert correlation([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert correlation([1, 2, 3], [5, 5, 5]) is None
    with pytest.raises(ValueError):
        correlation([1], [1])


def test_correlation_shift_invariant():
    rng = np.random.default_rng(5)
    a = rng.normal(size=40)
    p = rng.normal(size=40)
    assert correlation(a + 100.0, p - 3.0) == pytest.approx(correlation(a, p), abs=1e-9)


def test_perfect_prediction_vector():
    actual = [3.0, 5.0, 4.0, 6.0]
    vec = performance_vector(actual, actual, [2.5, 3.0, 5.0, 4.0])
    assert vec.rmse == 0.0
    assert vec.trend_accuracy == 1.0
    assert vec.absolute_error == (0.0, 0.0)
    assert vec.relative_error == (0.0, 0.0)
    assert vec.squared_error == (0.0, 0.0)
    assert vec.correlation == pytest.approx(1.0)
    assert vec.squared_correlation == pytest.approx(1.0)


def test_vector_internal_identity():
    rng = np.random.default_rng(0)
    a = rng.uniform(1, 50, 30)
    p = a + rng.normal(0, 3, 30)
    vec = performance_vector(a, p, np.roll(a, 1))
    assert vec.rmse**2 == pytest.approx(vec.squared_error.mean, rel=1e-9)
    assert vec.squared_correlation == pytest.approx(vec.correlation**2, abs=1e-12)


def _oracle(a, p, prev):
    n = len(a)
    errors = [p[i] - a[i] for i in range(n)]
    abs_errors = [abs(e) for e in errors]
    sq_errors = [e * e for e in errors]
    rel_errors = [abs(e) / abs(x) for e, x in zip(errors, a)]

    def mean(v):
        return math.fsum(v) / len(v)

    def pstd(v):
        m = mean(v)
        return math.sqrt(math.fsum((x - m) ** 2 for x in v) / len(v))

    hits = 0
    for i in range(n):
        pred_dir = 1 if p[i] - prev[i] >= 0 else -1
        act_dir = 1 if a[i] - prev[i] >= 0 else -1
        hits += pred_dir == act_dir
    ma, mp = mean(a), mean(p)
    sx = math.sqrt(math.fsum((x - ma) ** 2 for x in a))
    sy = math.sqrt(math.fsum((y - mp) ** 2 for y in p))
    corr = None
    if sx > 0 and sy > 0:
        corr = math.fsum((x - ma) * (y - mp) for x, y in zip(a, p)) / (sx * sy)
    return {
        "rmse": math.sqrt(mean(sq_errors)),
        "trend_accuracy": hits / n,
        "absolute_error_mean": mean(abs_errors),
        "absolute_error_std": pstd(abs_errors),
        "relative_error_mean": mean(rel_errors),
        "relative_error_std": pstd(rel_errors),
        "squared_error_mean": mean(sq_errors),
        "squared_error_std": pstd(sq_errors),
        "correlation": corr,
        "squared_correlation": None if corr is None else corr * corr,
    }


def test_vector_matches_loop_oracle():
    rng = np.random.default_rng(42)
    a = rng.uniform(0.5, 200, 50)
    p = a * rng.uniform(0.8, 1.2, 50)
    prev = rng.uniform(0.5, 200, 50)
    got = performance_vector(a, p, prev).as_dict()
    expected = _oracle(list(a), list(p), list(prev))
    for key in METRIC_KEYS:
        assert got[key] == pytest.approx(expected[key], rel=1e-12, abs=1e-12), key


def test_vector_degrades_relative_on_zero_actual():
    vec = performance_vector([1.0, 0.0], [1.0, 1.0], [1.0, 1.0])
    assert vec.relative_error is None
    assert vec.as_dict()["relative_error_mean"] is None
    assert "Relative error: undefined" in vec.render_text()


def test_scale_equivariance():
    rng = np.random.default_rng(9)
    a = rng.uniform(1, 10, 25)
    p = a + rng.normal(0, 1, 25)
    prev = rng.uniform(1, 10, 25)
    base = performance_vector(a, p, prev)
    scaled = performance_vector(7.5 * a, 7.5 * p, 7.5 * prev)
    assert scaled.rmse == pytest.approx(7.5 * base.rmse, rel=1e-9)
    assert scaled.absolute_error.mean == pytest.approx(7.5 * base.absolute_error.mean, rel=1e-9)
    assert scaled.squared_error.mean == pytest.approx(7.5**2 * base.squared_error.mean, rel=1e-9)
    assert scaled.relative_error.mean == pytest.approx(base.relative_error.mean, rel=1e-9)
    assert scaled.trend_accuracy == base.trend_accuracy
    assert scaled.correlation == pytest.approx(base.correlation, rel=1e-9)


def test_render_text_layout():
    vec = performance_vector([1, 2, 3, 4], [2, 3, 4, 5], [1, 1, 2, 3])
    text = vec.render_text()
    assert text.splitlines()[0] == "Root mean squared error: 1.000 +/- 0.000"
    assert "Relative error: 52.08% +/- 27.32%" in text
    assert text.splitlines()[1].startswith("Prediction trend accuracy: ")


def test_as_dict_keys():
    vec = performance_vector([1, 2], [1, 2], [1, 1])
    assert tuple(vec.as_dict().keys()) == METRIC_KEYS


def test_residual_summary():
    days = (date(2019, 1, 1), date(2019, 1, 2))
    summary = residual_summary([105.0, 105.0], [104.0, 104.0], days)
    assert summary.residuals.tolist() == [1.0, 1.0]
    assert summary.mean == 1.0
    assert summary.per_date == days
    assert residual_summary([5.0, 6.0], [5.0, 6.0], days).mean == 0.0
    with pytest.raises(ValueError):
        residual_summary([1.0], [1.0, 2.0], days)
