"""The seven forecasting metrics and residual summaries.

All "+/-" values are population standard deviations of the element-wise
error terms. Relative error is kept as a dimensionless fraction and only
rendered as a percentage. Correlation on a zero-variance vector is the
explicit undefined marker ``None``, never 0 and never an exception:
constant forecasts (far-future k-NN) are a legitimate case.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import NamedTuple

import numpy as np

from .errors import DivisionGuardError

METRIC_KEYS = (
    "rmse",
    "trend_accuracy",
    "absolute_error_mean",
    "absolute_error_std",
    "relative_error_mean",
    "relative_error_std",
    "squared_error_mean",
    "squared_error_std",
    "correlation",
    "squared_correlation",
)


class ErrorStats(NamedTuple):
    mean: float
    std: float


def _vectors(*arrays) -> tuple[np.ndarray, ...]:
    out = tuple(np.asarray(a, dtype=float).ravel() for a in arrays)
    lengths = {len(a) for a in out}
    if len(lengths) != 1:
        raise ValueError(f"vector lengths differ: {sorted(len(a) for a in out)}")
    if not out[0].size:
        raise ValueError("vectors must be nonempty")
    return out


def rmse(actuals, predictions) -> float:
    actuals, predictions = _vectors(actuals, predictions)
    return float(np.sqrt(np.mean((predictions - actuals) ** 2)))


def trend_accuracy(actuals, predictions, prev_actuals) -> float:
    """Fraction of points whose predicted direction vs the previous actual
    matches the realized direction; a zero move counts as "not falling"."""
    actuals, predictions, prev_actuals = _vectors(actuals, predictions, prev_actuals)
    predicted_up = predictions - prev_actuals >= 0
    actual_up = actuals - prev_actuals >= 0
    return float(np.mean(predicted_up == actual_up))


def absolute_error(actuals, predictions) -> ErrorStats:
    actuals, predictions = _vectors(actuals, predictions)
    e = np.abs(predictions - actuals)
    return ErrorStats(float(np.mean(e)), float(np.std(e)))


def relative_error(actuals, predictions) -> ErrorStats:
    actuals, predictions = _vectors(actuals, predictions)
    zero = np.flatnonzero(actuals == 0)
    if zero.size:
        raise DivisionGuardError(f"actual value is zero at index {zero[0]}")
    e = np.abs(predictions - actuals) / np.abs(actuals)
    return ErrorStats(float(np.mean(e)), float(np.std(e)))


def squared_error(actuals, predictions) -> ErrorStats:
    actuals, predictions = _vectors(actuals, predictions)
    e = (predictions - actuals) ** 2
    return ErrorStats(float(np.mean(e)), float(np.std(e)))


def correlation(actuals, predictions) -> float | None:
    """Pearson coefficient, or None when either vector has zero variance."""
    actuals, predictions = _vectors(actuals, predictions)
    if len(actuals) < 2:
        raise ValueError("correlation needs at least 2 points")
    xm = actuals - actuals.mean()
    ym = predictions - predictions.mean()
    sx = float(np.sqrt(np.sum(xm * xm)))
    sy = float(np.sqrt(np.sum(ym * ym)))
    if sx == 0.0 or sy == 0.0:
        return None
    r = float(np.sum(xm * ym)) / (sx * sy)
    return float(min(1.0, max(-1.0, r)))


@dataclass(frozen=True)
class PerformanceVector:
    """All seven metrics over one set of (actual, prediction) pairs.

    ``relative_error`` is None when some actual is exactly zero;
    correlation fields are None on zero variance.
    """

    rmse: float
    trend_accuracy: float
    absolute_error: ErrorStats
    relative_error: ErrorStats | None
    squared_error: ErrorStats
    correlation: float | None
    squared_correlation: float | None

    def as_dict(self) -> dict[str, float | None]:
        rel = self.relative_error
        return {
            "rmse": self.rmse,
            "trend_accuracy": self.trend_accuracy,
            "absolute_error_mean": self.absolute_error.mean,
            "absolute_error_std": self.absolute_error.std,
            "relative_error_mean": None if rel is None else rel.mean,
            "relative_error_std": None if rel is None else rel.std,
            "squared_error_mean": self.squared_error.mean,
            "squared_error_std": self.squared_error.std,
            "correlation": self.correlation,
            "squared_correlation": self.squared_correlation,
        }

    def render_text(self) -> str:
        rel = self.relative_error
        lines = [
            f"Root mean squared error: {self.rmse:.3f} +/- 0.000",
            f"Prediction trend accuracy: {self.trend_accuracy:.3f}",
            "Absolute error: {0:.3f} +/- {1:.3f}".format(*self.absolute_error),
            (
                "Relative error: undefined" if rel is None
                else f"Relative error: {rel.mean * 100:.2f}% +/- {rel.std * 100:.2f}%"
            ),
            "Squared error: {0:.3f} +/- {1:.3f}".format(*self.squared_error),
            f"Correlation: {_fmt(self.correlation)}",
            f"Squared correlation: {_fmt(self.squared_correlation)}",
        ]
        return "\n".join(lines)


def _fmt(value: float | None, decimals: int = 3) -> str:
    return "undefined" if value is None else f"{value:.{decimals}f}"


def performance_vector(actuals, predictions, prev_actuals) -> PerformanceVector:
    """Assemble all seven metrics; a zero actual degrades only relative error."""
    actuals, predictions, prev_actuals = _vectors(actuals, predictions, prev_actuals)
    e = predictions - actuals
    abs_e = np.abs(e)
    sq_e = e * e
    try:
        rel = relative_error(actuals, predictions)
    except DivisionGuardError:
        rel = None
    corr = correlation(actuals, predictions) if len(actuals) >= 2 else None
    return PerformanceVector(
        rmse=float(np.sqrt(np.mean(sq_e))),
        trend_accuracy=trend_accuracy(actuals, predictions, prev_actuals),
        absolute_error=ErrorStats(float(np.mean(abs_e)), float(np.std(abs_e))),
        relative_error=rel,
        squared_error=ErrorStats(float(np.mean(sq_e)), float(np.std(sq_e))),
        correlation=corr,
        squared_correlation=None if corr is None else corr * corr,
    )


@dataclass(frozen=True, eq=False)
class ResidualSummary:
    """Residuals (actual - forecast) with their plain arithmetic mean."""

    residuals: np.ndarray
    mean: float
    per_date: tuple[date, ...]


def residual_summary(actuals, forecasts, dates) -> ResidualSummary:
    actuals, forecasts = _vectors(actuals, forecasts)
    dates = tuple(dates)
    if len(dates) != len(actuals):
        raise ValueError("dates must align with actuals")
    residuals = actuals - forecasts
    return ResidualSummary(residuals=residuals, mean=float(np.mean(residuals)), per_date=dates)
