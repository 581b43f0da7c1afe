"""Walk-forward (sliding window) validation over windowed examples.

Fold k trains on ``train_width`` consecutive examples starting at k*step
and tests on the ``test_width`` examples beginning ``horizon`` positions
after the last training example (horizon 1 means adjacency). Folds are
generated while the test window fits.

Per-fold metrics aggregate two ways: macro is the arithmetic mean and
population std of each metric across folds, micro is one metric pass over
the pooled (prediction, actual) pairs concatenated in fold order. When
test windows overlap, pooled pairs intentionally repeat examples.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Callable, Protocol

import numpy as np

from .errors import InsufficientDataError
from .metrics import ErrorStats, PerformanceVector, _fmt, performance_vector
from .windowing import WindowedExampleSet

MACRO_KEYS = (
    "trend_accuracy",
    "rmse",
    "absolute_error",
    "relative_error",
    "squared_error",
    "correlation",
    "squared_correlation",
)


class RegressionModel(Protocol):
    def predict(self, features: np.ndarray) -> np.ndarray: ...


Trainer = Callable[[np.ndarray, np.ndarray, int], RegressionModel]


@dataclass(frozen=True, eq=False)
class FoldResult:
    """One fold's layout and outcomes; ranges are 0-based inclusive indices."""

    fold_index: int
    train_range: tuple[int, int]
    test_range: tuple[int, int]
    predictions: np.ndarray
    actuals: np.ndarray
    prev_actuals: np.ndarray
    test_dates: tuple[date, ...]
    metrics: PerformanceVector


@dataclass(frozen=True, eq=False)
class ValidationReport:
    folds: tuple[FoldResult, ...]
    macro: dict[str, ErrorStats | None]
    micro: PerformanceVector

    def pooled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(actuals, predictions, prev_actuals) concatenated in fold order."""
        return (
            np.concatenate([f.actuals for f in self.folds]),
            np.concatenate([f.predictions for f in self.folds]),
            np.concatenate([f.prev_actuals for f in self.folds]),
        )

    def render_text(self) -> str:
        macro, micro = self.macro, self.micro.as_dict()
        rel = self.micro.relative_error

        def pair(key: str) -> str:
            stats = macro[key]
            if stats is None:
                return "undefined"
            return f"{stats.mean:.3f} +/- {stats.std:.3f}"

        def pct_pair(key: str) -> str:
            stats = macro[key]
            if stats is None:
                return "undefined"
            return f"{stats.mean * 100:.2f}% +/- {stats.std * 100:.2f}%"

        lines = [
            f"Prediction trend accuracy: {pair('trend_accuracy')} "
            f"(micro average: {micro['trend_accuracy']:.3f})",
            f"Root mean squared error: {pair('rmse')} "
            f"(micro average: {micro['rmse']:.3f} +/- 0.000)",
            f"Absolute error: {pair('absolute_error')} "
            "(micro average: {0:.3f} +/- {1:.3f})".format(*self.micro.absolute_error),
            f"Relative error: {pct_pair('relative_error')} "
            + (
                "(micro average: undefined)" if rel is None
                else f"(micro average: {rel.mean * 100:.2f}% +/- {rel.std * 100:.2f}%)"
            ),
            f"Squared error: {pair('squared_error')} "
            "(micro average: {0:.3f} +/- {1:.3f})".format(*self.micro.squared_error),
            f"Correlation: {pair('correlation')} "
            f"(micro average: {_fmt(self.micro.correlation)})",
            f"Squared correlation: {pair('squared_correlation')} "
            f"(micro average: {_fmt(self.micro.squared_correlation)})",
        ]
        return "\n".join(lines)


def fold_layout(
    n: int, train_width: int, step: int, test_width: int, horizon: int
) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """All (train_range, test_range) pairs, 0-based inclusive."""
    for name, value in (
        ("train_width", train_width), ("step", step),
        ("test_width", test_width), ("horizon", horizon),
    ):
        if not isinstance(value, int) or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value}")
    minimum = train_width + (horizon - 1) + test_width
    if n < minimum:
        raise InsufficientDataError(
            f"sliding validation needs at least {minimum} examples "
            f"(train_width {train_width} + gap {horizon - 1} + test_width {test_width}), have {n}"
        )
    layout = []
    k = 0
    while True:
        train_first = k * step
        train_last = train_first + train_width - 1
        test_first = train_last + horizon
        test_last = test_first + test_width - 1
        if test_last > n - 1:
            break
        layout.append(((train_first, train_last), (test_first, test_last)))
        k += 1
    return layout


def _fold_scalar(vector: PerformanceVector, key: str) -> float | None:
    if key in ("absolute_error", "relative_error", "squared_error"):
        stats = getattr(vector, key)
        return None if stats is None else stats.mean
    return getattr(vector, key)


def _macro(folds: tuple[FoldResult, ...]) -> dict[str, ErrorStats | None]:
    out: dict[str, ErrorStats | None] = {}
    for key in MACRO_KEYS:
        values = [v for f in folds if (v := _fold_scalar(f.metrics, key)) is not None]
        if not values:
            out[key] = None
        else:
            arr = np.asarray(values, dtype=float)
            out[key] = ErrorStats(float(arr.mean()), float(arr.std()))
    return out


def sliding_validate(
    examples: WindowedExampleSet,
    trainer: Trainer,
    train_width: int = 4,
    step: int = 1,
    test_width: int = 4,
    horizon: int = 1,
    base_seed: int = 0,
) -> ValidationReport:
    """Retrain per fold (seed = base_seed + fold index) and aggregate metrics."""
    layout = fold_layout(len(examples), train_width, step, test_width, horizon)
    folds = []
    for k, ((tr0, tr1), (te0, te1)) in enumerate(layout):
        model = trainer(examples.features[tr0:tr1 + 1], examples.labels[tr0:tr1 + 1], base_seed + k)
        predictions = np.asarray(model.predict(examples.features[te0:te1 + 1]), dtype=float)
        actuals = examples.labels[te0:te1 + 1]
        prev = examples.prev_actuals[te0:te1 + 1]
        folds.append(
            FoldResult(
                fold_index=k,
                train_range=(tr0, tr1),
                test_range=(te0, te1),
                predictions=predictions,
                actuals=actuals,
                prev_actuals=prev,
                test_dates=examples.label_dates[te0:te1 + 1],
                metrics=performance_vector(actuals, predictions, prev),
            )
        )
    folds = tuple(folds)
    pooled_actuals = np.concatenate([f.actuals for f in folds])
    pooled_predictions = np.concatenate([f.predictions for f in folds])
    pooled_prev = np.concatenate([f.prev_actuals for f in folds])
    return ValidationReport(
        folds=folds,
        macro=_macro(folds),
        micro=performance_vector(pooled_actuals, pooled_predictions, pooled_prev),
    )
