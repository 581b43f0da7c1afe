"""Ordinary least squares, the relative-regression meta-learner, and the
averaging vote ensemble.

Relative regression detrends the target against a base feature before
training its inner model (difference or ratio) and inverts the transform
at prediction time; with a zero inner model and the difference transform
it degenerates to a persistence forecast. The vote is the unweighted
arithmetic mean of its members' predictions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DivisionGuardError, EnsembleMemberError, UnderdeterminedError
from .validation import Trainer
from .windowing import WindowedExampleSet

TRANSFORMS = ("difference", "ratio")

LINEAR_HEADER = "linear v1"
RELATIVE_HEADER = "relative v1"
VOTE_HEADER = "vote v1"


@dataclass(frozen=True, eq=False)
class LinearModel:
    coefficients: np.ndarray
    intercept: float

    @property
    def n_features(self) -> int:
        return len(self.coefficients)

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected a (n, {self.n_features}) feature matrix, got {X.shape}")
        return X @ self.coefficients + self.intercept

    def predict_row(self, feature_row) -> float:
        row = np.asarray(feature_row, dtype=float).ravel()
        return float(self.predict(row[None, :])[0])

    def to_text(self) -> str:
        return "\n".join(
            [
                LINEAR_HEADER,
                f"intercept {self.intercept!r}",
                "coefficients " + ",".join(repr(c) for c in self.coefficients),
            ]
        ) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "LinearModel":
        lines = text.splitlines()
        if not lines or lines[0] != LINEAR_HEADER:
            raise ValueError(f"not a {LINEAR_HEADER!r} model file")
        intercept = float(lines[1].split(" ", 1)[1])
        coefficients = np.asarray([float(v) for v in lines[2].split(" ", 1)[1].split(",")])
        return cls(coefficients=coefficients, intercept=intercept)


def fit_linear(features, targets) -> LinearModel:
    """Least-squares fit via an orthogonal decomposition (numpy lstsq, SVD);
    rank-deficient designs get the minimum-norm solution."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    n, d = X.shape
    if n != len(y):
        raise ValueError(f"feature rows ({n}) and targets ({len(y)}) differ")
    if n < d + 1:
        raise UnderdeterminedError(f"need at least {d + 1} rows for {d} features, have {n}")
    design = np.column_stack([np.ones(n), X])
    solution, *_ = np.linalg.lstsq(design, y, rcond=None)
    return LinearModel(coefficients=solution[1:], intercept=float(solution[0]))


@dataclass(frozen=True, eq=False)
class RelativeRegressionModel:
    """Inner model trained on the target relative to a base feature value."""

    base_feature: str
    base_index: int
    transform: str
    inner: object

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        base = X[:, self.base_index]
        inner_pred = np.asarray(self.inner.predict(X), dtype=float)
        if self.transform == "difference":
            return inner_pred + base
        return inner_pred * base

    def predict_row(self, feature_row) -> float:
        row = np.asarray(feature_row, dtype=float).ravel()
        return float(self.predict(row[None, :])[0])

    def to_text(self) -> str:
        from .model_io import model_to_text

        return "\n".join(
            [
                RELATIVE_HEADER,
                f"base_feature {self.base_feature}",
                f"base_index {self.base_index}",
                f"transform {self.transform}",
                "=== inner",
                model_to_text(self.inner).rstrip("\n"),
                "=== end inner",
            ]
        ) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RelativeRegressionModel":
        from .model_io import model_from_text

        lines = text.splitlines()
        if not lines or lines[0] != RELATIVE_HEADER:
            raise ValueError(f"not a {RELATIVE_HEADER!r} model file")
        base_feature = lines[1].split(" ", 1)[1]
        base_index = int(lines[2].split(" ", 1)[1])
        transform = lines[3].split(" ", 1)[1]
        if lines[4] != "=== inner" or lines[-1].rstrip() not in ("=== end inner",):
            raise ValueError("malformed relative-regression container")
        inner_text = "\n".join(lines[5:-1]) + "\n"
        return cls(
            base_feature=base_feature,
            base_index=base_index,
            transform=transform,
            inner=model_from_text(inner_text),
        )


def _fit_relative_core(
    features: np.ndarray,
    targets: np.ndarray,
    base_index: int,
    base_feature: str,
    transform: str,
    inner_trainer: Trainer,
    seed: int,
) -> RelativeRegressionModel:
    if transform not in TRANSFORMS:
        raise ValueError(f"transform must be one of {TRANSFORMS}, got '{transform}'")
    base = features[:, base_index]
    if transform == "ratio":
        zero = np.flatnonzero(base == 0)
        if zero.size:
            raise DivisionGuardError(f"base feature '{base_feature}' is zero at example {zero[0]}")
        relative_targets = targets / base
    else:
        relative_targets = targets - base
    inner = inner_trainer(features, relative_targets, seed)
    return RelativeRegressionModel(
        base_feature=base_feature, base_index=base_index, transform=transform, inner=inner
    )


def fit_relative(
    examples: WindowedExampleSet,
    base_feature: str,
    transform: str,
    inner_trainer: Trainer,
    seed: int = 0,
) -> RelativeRegressionModel:
    if base_feature not in examples.feature_names:
        raise ValueError(
            f"base feature '{base_feature}' not among example features {examples.feature_names}"
        )
    return _fit_relative_core(
        examples.features,
        examples.labels,
        examples.feature_names.index(base_feature),
        base_feature,
        transform,
        inner_trainer,
        seed,
    )


def relative_trainer(
    base_feature: str,
    feature_names: Sequence[str],
    transform: str,
    inner_trainer: Trainer,
) -> Trainer:
    """Bind the base column so the result fits the plain (X, y, seed) trainer shape."""
    names = tuple(feature_names)
    if base_feature not in names:
        raise ValueError(f"base feature '{base_feature}' not among features {names}")
    index = names.index(base_feature)

    def train(features: np.ndarray, targets: np.ndarray, seed: int) -> RelativeRegressionModel:
        return _fit_relative_core(
            np.asarray(features, dtype=float), np.asarray(targets, dtype=float),
            index, base_feature, transform, inner_trainer, seed,
        )

    return train


@dataclass(frozen=True, eq=False)
class VoteModel:
    """Unweighted arithmetic mean over member predictions."""

    members: tuple[object, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise ValueError("a vote needs at least one member")

    def predict(self, features: np.ndarray) -> np.ndarray:
        stacked = np.vstack([np.asarray(m.predict(features), dtype=float) for m in self.members])
        return stacked.mean(axis=0)

    def predict_row(self, feature_row) -> float:
        row = np.asarray(feature_row, dtype=float).ravel()
        return float(self.predict(row[None, :])[0])

    def to_text(self) -> str:
        from .model_io import model_kind, model_to_text

        lines = [VOTE_HEADER, f"members {len(self.members)}"]
        for i, member in enumerate(self.members):
            lines.append(f"=== member {i} {model_kind(member)}")
            lines.append(model_to_text(member).rstrip("\n"))
            lines.append(f"=== end member {i}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "VoteModel":
        from .model_io import model_from_text

        lines = text.splitlines()
        if not lines or lines[0] != VOTE_HEADER:
            raise ValueError(f"not a {VOTE_HEADER!r} model file")
        count = int(lines[1].split(" ", 1)[1])
        members = []
        i = 2
        for m in range(count):
            if not lines[i].startswith(f"=== member {m} "):
                raise ValueError(f"malformed vote container at line {i + 1}")
            i += 1
            block = []
            while lines[i] != f"=== end member {m}":
                block.append(lines[i])
                i += 1
            i += 1
            members.append(model_from_text("\n".join(block) + "\n"))
        return cls(members=tuple(members))


def fit_vote(trainers: Sequence[Trainer], features, targets, base_seed: int = 0) -> VoteModel:
    """Train each member on identical data with seed = base_seed + member index."""
    if not trainers:
        raise ValueError("fit_vote needs at least one trainer")
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float).ravel()
    members = []
    for i, trainer in enumerate(trainers):
        try:
            members.append(trainer(X, y, base_seed + i))
        except Exception as exc:
            raise EnsembleMemberError(f"vote member {i} failed to train: {exc}") from exc
    return VoteModel(members=tuple(members))


def predict_vote(model: VoteModel, feature_row) -> float:
    return model.predict_row(feature_row)
