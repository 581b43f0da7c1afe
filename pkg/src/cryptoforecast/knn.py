"""k-nearest-neighbor forecasting over (date, close) pairs.

A lazy learner: fitting stores the training points, forecasting finds the
k points with the smallest date distance (absolute difference of days
since 1970-01-01, ties broken toward the later date) and averages their
closes, uniformly or by inverse distance 1/(d+1). For query dates beyond
the training range the neighbor set saturates at the last k points, so
all far-future forecasts are one constant.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import NamedTuple, Sequence

import numpy as np

from .market_data import PriceSeries
from .metrics import PerformanceVector, ResidualSummary, performance_vector, residual_summary

EPOCH = date(1970, 1, 1)
WEIGHTINGS = ("uniform", "inverse_distance")

FORMAT_HEADER = "knn v1"


def date_ordinal(day: date) -> int:
    """Days since 1970-01-01 (UTC calendar)."""
    return (day - EPOCH).days


@dataclass(frozen=True, eq=False)
class KnnModel:
    date_ordinals: np.ndarray
    closes: np.ndarray
    k: int
    weighting: str

    def forecast(self, dates: Sequence[date]) -> np.ndarray:
        dates = tuple(dates)
        if not dates:
            raise ValueError("dates must be nonempty")
        out = np.empty(len(dates))
        for i, day in enumerate(dates):
            distances = np.abs(date_ordinal(day) - self.date_ordinals)
            # Primary key distance, secondary key negated ordinal: later dates first.
            selected = np.lexsort((-self.date_ordinals, distances))[: self.k]
            if self.weighting == "uniform":
                out[i] = self.closes[selected].mean()
            else:
                weights = 1.0 / (distances[selected] + 1.0)
                out[i] = float(np.dot(weights, self.closes[selected]) / weights.sum())
        return out

    def to_text(self) -> str:
        lines = [
            FORMAT_HEADER,
            f"k {self.k}",
            f"weighting {self.weighting}",
            "ordinals " + ",".join(str(int(o)) for o in self.date_ordinals),
            "closes " + ",".join(repr(c) for c in self.closes),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "KnnModel":
        lines = text.splitlines()
        if not lines or lines[0] != FORMAT_HEADER:
            raise ValueError(f"not a {FORMAT_HEADER!r} model file")
        return cls(
            date_ordinals=np.asarray([int(v) for v in lines[3].split(" ", 1)[1].split(",")]),
            closes=np.asarray([float(v) for v in lines[4].split(" ", 1)[1].split(",")]),
            k=int(lines[1].split(" ", 1)[1]),
            weighting=lines[2].split(" ", 1)[1],
        )


def fit_knn(series: PriceSeries, k: int, weighting: str = "uniform") -> KnnModel:
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if k > len(series):
        raise ValueError(f"k={k} exceeds the {len(series)} training points")
    if weighting not in WEIGHTINGS:
        raise ValueError(f"weighting must be one of {WEIGHTINGS}, got '{weighting}'")
    return KnnModel(
        date_ordinals=np.asarray([date_ordinal(r.date) for r in series.records]),
        closes=series.closes(),
        k=k,
        weighting=weighting,
    )


def forecast_knn(model: KnnModel, dates: Sequence[date]) -> np.ndarray:
    return model.forecast(dates)


class KnnRunResult(NamedTuple):
    forecasts: np.ndarray
    residuals: ResidualSummary
    metrics: PerformanceVector


def knn_run(
    series: PriceSeries,
    forecast_dates: Sequence[date],
    actuals,
    k: int,
    weighting: str = "uniform",
) -> KnnRunResult:
    """Forecast the given dates and evaluate against their actual closes.

    Trend accuracy uses the true close preceding each forecast date as the
    baseline; the first date's predecessor is the last training close.
    """
    forecast_dates = tuple(forecast_dates)
    actuals = np.asarray(actuals, dtype=float).ravel()
    if len(actuals) != len(forecast_dates):
        raise ValueError("actuals must align one-to-one with forecast_dates")
    model = fit_knn(series, k, weighting)
    forecasts = model.forecast(forecast_dates)
    prev_actuals = np.concatenate(([series.records[-1].close], actuals[:-1]))
    return KnnRunResult(
        forecasts=forecasts,
        residuals=residual_summary(actuals, forecasts, forecast_dates),
        metrics=performance_vector(actuals, forecasts, prev_actuals),
    )
