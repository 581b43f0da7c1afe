"""Supervised example construction from a price series.

Two modes:

* ``window`` turns a value series into lagged examples: features are the
  attribute values inside a sliding window, the label sits ``horizon``
  steps past the window end. Feature columns are named ``attr-k`` where
  k is the offset back from the window end (``close-0`` is the newest
  in-window close).
* ``make_same_day_examples`` keeps one example per record with same-day
  attribute values as features. This mode contains same-day lookahead by
  construction (the label's own day is observed); it exists because the
  tree/ensemble paths regress close on the same day's other attributes.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import InsufficientDataError
from .market_data import ATTRIBUTES, PriceSeries


@dataclass(frozen=True, eq=False)
class WindowedExampleSet:
    """Feature matrix + labels + alignment metadata for supervised learning.

    ``prev_actuals[i]`` is the last in-window (or previous-day) value of the
    label attribute for example i; trend accuracy measures direction against
    it. When ``first_prev_actual_is_self`` is set, example 0 had no earlier
    record and its prev_actual is its own label.
    """

    features: np.ndarray
    feature_names: tuple[str, ...]
    labels: np.ndarray
    label_dates: tuple[date, ...]
    prev_actuals: np.ndarray
    first_prev_actual_is_self: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", np.asarray(self.features, dtype=float))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=float))
        object.__setattr__(self, "prev_actuals", np.asarray(self.prev_actuals, dtype=float))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "label_dates", tuple(self.label_dates))
        n = self.features.shape[0]
        if not (len(self.labels) == len(self.label_dates) == len(self.prev_actuals) == n):
            raise ValueError("features, labels, label_dates, prev_actuals must align")
        if self.features.shape[1] != len(self.feature_names):
            raise ValueError("feature_names must match the feature column count")
        for a, b in zip(self.label_dates, self.label_dates[1:]):
            if b <= a:
                raise ValueError("label_dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indices: np.ndarray) -> "WindowedExampleSet":
        idx = np.asarray(indices)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        keeps_first = len(idx) > 0 and idx[0] == 0
        return WindowedExampleSet(
            features=self.features[idx],
            feature_names=self.feature_names,
            labels=self.labels[idx],
            label_dates=tuple(self.label_dates[i] for i in idx),
            prev_actuals=self.prev_actuals[idx],
            first_prev_actual_is_self=self.first_prev_actual_is_self and keeps_first,
        )


def _ordered_attrs(attrs, series: PriceSeries) -> tuple[str, ...]:
    requested = set(attrs)
    if not requested:
        raise ValueError("attrs must be nonempty")
    unknown = requested - set(ATTRIBUTES)
    if unknown:
        raise ValueError(f"unknown attribute(s): {', '.join(sorted(unknown))}")
    missing = requested - set(series.available_attributes())
    if missing:
        raise ValueError(
            f"{series.symbol}: attribute(s) not present in the series: {', '.join(sorted(missing))}"
        )
    return tuple(a for a in ATTRIBUTES if a in requested)


def window(
    series: PriceSeries,
    attrs,
    window_size: int,
    step_size: int,
    horizon: int,
    label_attr: str = "close",
) -> WindowedExampleSet:
    """Lagged examples: window [t, t+w-1], label at t+w-1+horizon, step between starts."""
    for name, value in (("window_size", window_size), ("step_size", step_size), ("horizon", horizon)):
        if not isinstance(value, int) or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value}")
    ordered = _ordered_attrs(attrs, series)
    _ordered_attrs([label_attr], series)
    label_col = series.column(label_attr)

    n = len(series)
    minimum = window_size + horizon
    if n < minimum:
        raise InsufficientDataError(
            f"{series.symbol}: windowing needs at least {minimum} records "
            f"(window_size {window_size} + horizon {horizon}), have {n}"
        )

    starts = np.arange(0, n - window_size - horizon + 1, step_size)
    columns = []
    names = []
    for attr in ordered:
        col = series.column(attr)
        for j in range(window_size):  # oldest to newest inside the window
            columns.append(col[starts + j])
            names.append(f"{attr}-{window_size - 1 - j}")
    label_idx = starts + window_size - 1 + horizon
    dates = series.dates()
    return WindowedExampleSet(
        features=np.column_stack(columns),
        feature_names=tuple(names),
        labels=label_col[label_idx],
        label_dates=tuple(dates[i] for i in label_idx),
        prev_actuals=label_col[starts + window_size - 1],
    )


def make_same_day_examples(series: PriceSeries, attrs, label_attr: str = "close") -> WindowedExampleSet:
    """One example per record: same-day attrs as features, same-day label.

    The label attribute may not appear among the features (target leakage);
    the same-day lookahead of the remaining attributes is inherent to this
    mode and documented rather than hidden.
    """
    requested = set(attrs)
    if label_attr in requested:
        raise ValueError(f"label attribute '{label_attr}' may not be a feature (target leakage)")
    ordered = _ordered_attrs(requested, series)
    _ordered_attrs([label_attr], series)
    label_col = series.column(label_attr)

    features = np.column_stack([series.column(a) for a in ordered])
    prev = np.concatenate(([label_col[0]], label_col[:-1]))
    return WindowedExampleSet(
        features=features,
        feature_names=ordered,
        labels=label_col,
        label_dates=series.dates(),
        prev_actuals=prev,
        first_prev_actual_is_self=True,
    )


def with_prev_label_feature(examples: WindowedExampleSet, name: str) -> WindowedExampleSet:
    """Append prev_actuals as a lag-1 feature column, dropping a flagged first row.

    Used by the ensemble path, whose relative-regression member detrends
    against the previous close; the flagged first same-day example would
    leak its own label through the new column.
    """
    if name in examples.feature_names:
        raise ValueError(f"feature '{name}' already present")
    out = WindowedExampleSet(
        features=np.column_stack([examples.features, examples.prev_actuals]),
        feature_names=examples.feature_names + (name,),
        labels=examples.labels,
        label_dates=examples.label_dates,
        prev_actuals=examples.prev_actuals,
        first_prev_actual_is_self=examples.first_prev_actual_is_self,
    )
    if out.first_prev_actual_is_self:
        out = out.subset(np.arange(1, len(out)))
    return out
