"""Multilayer perceptron regression trained by per-example SGD with momentum.

Inputs are min-max scaled to [-1, 1] per feature, the label to [0, 1].
Every unit uses the logistic sigmoid, including the output, so raw
predictions live in (0, 1) and are mapped back through the inverse label
scaling; outputs are therefore bounded by the training label range, a
documented limitation for out-of-range extrapolation on trending prices.

Training visits examples in a freshly shuffled order each cycle and
applies, per example, delta_w = -lr * grad + momentum * delta_w_prev.
All randomness (weight init, shuffles) comes from one seeded generator,
so (seed, data, hyperparams) fully determine the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FORMAT_HEADER = "mlp v1"


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # Split form never exponentiates a positive argument (no overflow).
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class MlpHyperparams:
    cycles: int = 500
    learning_rate: float = 0.03
    momentum: float = 0.9
    seed: int = 0
    hidden_sizes: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class MlpModel:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    input_min: np.ndarray
    input_max: np.ndarray
    label_min: float
    label_max: float
    hyperparams: MlpHyperparams
    cycle_rmse: tuple[float, ...] = ()

    @property
    def degenerate_label(self) -> bool:
        return self.label_max == self.label_min

    def scale_inputs(self, X: np.ndarray) -> np.ndarray:
        span = self.input_max - self.input_min
        scaled = np.zeros_like(X)
        ok = span > 0
        scaled[:, ok] = -1.0 + 2.0 * (X[:, ok] - self.input_min[ok]) / span[ok]
        return scaled

    def predict(self, features: np.ndarray) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.layer_sizes[0]:
            raise ValueError(f"expected a (n, {self.layer_sizes[0]}) feature matrix, got {X.shape}")
        if self.degenerate_label:
            return np.full(X.shape[0], self.label_min)
        out = _forward_batch(self.weights, self.biases, self.scale_inputs(X))
        return self.label_min + out * (self.label_max - self.label_min)

    def predict_row(self, feature_row) -> float:
        row = np.asarray(feature_row, dtype=float).ravel()
        if len(row) != self.layer_sizes[0]:
            raise ValueError(f"expected {self.layer_sizes[0]} features, got {len(row)}")
        return float(self.predict(row[None, :])[0])

    def to_text(self) -> str:
        hp = self.hyperparams
        lines = [
            FORMAT_HEADER,
            "layer_sizes " + ",".join(str(s) for s in self.layer_sizes),
            f"cycles {hp.cycles}",
            f"learning_rate {hp.learning_rate!r}",
            f"momentum {hp.momentum!r}",
            f"seed {hp.seed}",
            "input_min " + ",".join(repr(v) for v in self.input_min),
            "input_max " + ",".join(repr(v) for v in self.input_max),
            f"label_min {self.label_min!r}",
            f"label_max {self.label_max!r}",
        ]
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            lines.append(f"layer {k}")
            for row in W:
                lines.append("w " + ",".join(repr(v) for v in row))
            lines.append("b " + ",".join(repr(v) for v in b))
        lines.append("end")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "MlpModel":
        lines = text.splitlines()
        if not lines or lines[0] != FORMAT_HEADER:
            raise ValueError(f"not a {FORMAT_HEADER!r} model file")
        header: dict[str, str] = {}
        i = 1
        while i < len(lines) and not lines[i].startswith("layer "):
            key, _, value = lines[i].partition(" ")
            header[key] = value
            i += 1
        layer_sizes = tuple(int(s) for s in header["layer_sizes"].split(","))
        weights, biases = [], []
        while i < len(lines) and lines[i] != "end":
            if not lines[i].startswith("layer "):
                raise ValueError(f"unexpected line in model file: {lines[i]!r}")
            i += 1
            rows = []
            while lines[i].startswith("w "):
                rows.append([float(v) for v in lines[i][2:].split(",")])
                i += 1
            if not lines[i].startswith("b "):
                raise ValueError("layer block missing bias line")
            biases.append(np.asarray([float(v) for v in lines[i][2:].split(",")]))
            weights.append(np.asarray(rows))
            i += 1
        return cls(
            layer_sizes=layer_sizes,
            weights=tuple(weights),
            biases=tuple(biases),
            input_min=np.asarray([float(v) for v in header["input_min"].split(",")]),
            input_max=np.asarray([float(v) for v in header["input_max"].split(",")]),
            label_min=float(header["label_min"]),
            label_max=float(header["label_max"]),
            hyperparams=MlpHyperparams(
                cycles=int(header["cycles"]),
                learning_rate=float(header["learning_rate"]),
                momentum=float(header["momentum"]),
                seed=int(header["seed"]),
                hidden_sizes=layer_sizes[1:-1],
            ),
        )


def _forward_batch(weights, biases, X: np.ndarray) -> np.ndarray:
    a = X
    for W, b in zip(weights, biases):
        a = _sigmoid(a @ W + b)
    return a[:, 0]


def _backprop(weights, biases, x: np.ndarray, target: float):
    """Loss 0.5*(out - target)^2 and its gradients at the current weights."""
    activations = [x]
    for W, b in zip(weights, biases):
        activations.append(_sigmoid(activations[-1] @ W + b))
    out = activations[-1][0]
    loss = 0.5 * (out - target) ** 2
    delta = (activations[-1] - target) * activations[-1] * (1.0 - activations[-1])
    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = np.outer(activations[layer], delta)
        grads_b[layer] = delta.copy()
        if layer > 0:
            a = activations[layer]
            delta = (weights[layer] @ delta) * a * (1.0 - a)
    return loss, grads_w, grads_b


def default_hidden_sizes(n_features: int) -> tuple[int, ...]:
    """One hidden layer of ceil(n_features / 2) + 1 units."""
    return (math.ceil(n_features / 2) + 1,)


def fit_mlp(
    features,
    targets,
    cycles: int = 500,
    learning_rate: float = 0.03,
    momentum: float = 0.9,
    hidden_sizes: tuple[int, ...] | None = None,
    seed: int = 0,
) -> MlpModel:
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError("features must be a 2-D matrix")
    if X.shape[0] != len(y):
        raise ValueError(f"feature rows ({X.shape[0]}) and targets ({len(y)}) differ")
    if len(y) < 2:
        raise ValueError(f"need at least 2 rows, have {len(y)}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite feature or target")
    if cycles < 0:
        raise ValueError(f"cycles must be >= 0, got {cycles}")
    if learning_rate <= 0:
        raise ValueError(f"learning_rate must be positive, got {learning_rate}")
    if not 0.0 <= momentum < 1.0:
        raise ValueError(f"momentum must be in [0, 1), got {momentum}")

    n, d = X.shape
    hidden = default_hidden_sizes(d) if hidden_sizes is None else tuple(hidden_sizes)
    if any(h < 1 for h in hidden):
        raise ValueError(f"hidden sizes must be positive, got {hidden}")
    layer_sizes = (d, *hidden, 1)

    input_min = X.min(axis=0)
    input_max = X.max(axis=0)
    label_min = float(y.min())
    label_max = float(y.max())
    span = input_max - input_min
    Xs = np.zeros_like(X)
    ok = span > 0
    Xs[:, ok] = -1.0 + 2.0 * (X[:, ok] - input_min[ok]) / span[ok]
    label_span = label_max - label_min
    ys = (y - label_min) / label_span if label_span > 0 else np.zeros(n)

    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for n_in, n_out in zip(layer_sizes, layer_sizes[1:]):
        weights.append(rng.uniform(-0.5, 0.5, size=(n_in, n_out)))
        biases.append(rng.uniform(-0.5, 0.5, size=n_out))
    vel_w = [np.zeros_like(W) for W in weights]
    vel_b = [np.zeros_like(b) for b in biases]

    curve = []
    for _ in range(cycles):
        for i in rng.permutation(n):
            _, grads_w, grads_b = _backprop(weights, biases, Xs[i], ys[i])
            for layer in range(len(weights)):
                vw, vb = vel_w[layer], vel_b[layer]
                vw *= momentum
                vw -= learning_rate * grads_w[layer]
                weights[layer] += vw
                vb *= momentum
                vb -= learning_rate * grads_b[layer]
                biases[layer] += vb
        scaled_out = _forward_batch(weights, biases, Xs)
        unscaled = label_min + scaled_out * label_span if label_span > 0 else np.full(n, label_min)
        curve.append(float(np.sqrt(np.mean((unscaled - y) ** 2))))

    return MlpModel(
        layer_sizes=layer_sizes,
        weights=tuple(weights),
        biases=tuple(biases),
        input_min=input_min,
        input_max=input_max,
        label_min=label_min,
        label_max=label_max,
        hyperparams=MlpHyperparams(
            cycles=cycles, learning_rate=learning_rate, momentum=momentum,
            seed=seed, hidden_sizes=hidden,
        ),
        cycle_rmse=tuple(curve),
    )


def gradient_check(
    model_shape: tuple[int, ...],
    features,
    targets,
    epsilon: float = 1e-5,
    seed: int = 0,
    weight_scale: float = 1.0,
) -> float:
    """Max relative discrepancy of analytic vs central finite-difference gradients.

    Builds a raw net (no scalers) from model_shape with seeded uniform
    weights, sums the squared-error loss over the given rows, and compares
    every weight/bias gradient. Components far below the gradient scale
    are measured against max(|a|, |n|, 1e-3 * max|analytic|) so 0/0 noise
    cannot dominate the maximum.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float).ravel()
    if X.ndim != 2 or X.shape[1] != model_shape[0] or model_shape[-1] != 1:
        raise ValueError("model_shape must be (n_features, ..., 1) matching the feature width")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for n_in, n_out in zip(model_shape, model_shape[1:]):
        weights.append(weight_scale * rng.uniform(-0.5, 0.5, size=(n_in, n_out)))
        biases.append(weight_scale * rng.uniform(-0.5, 0.5, size=n_out))

    grads_w = [np.zeros_like(W) for W in weights]
    grads_b = [np.zeros_like(b) for b in biases]
    for i in range(len(y)):
        _, gw, gb = _backprop(weights, biases, X[i], y[i])
        for layer in range(len(weights)):
            grads_w[layer] += gw[layer]
            grads_b[layer] += gb[layer]

    def total_loss() -> float:
        out = _forward_batch(weights, biases, X)
        return float(0.5 * np.sum((out - y) ** 2))

    analytic = np.concatenate(
        [g.ravel() for g in grads_w] + [g.ravel() for g in grads_b]
    )
    parameters = [*weights, *biases]
    numeric = np.empty_like(analytic)
    pos = 0
    for arr in parameters:
        flat = arr.ravel()
        for j in range(flat.size):
            original = flat[j]
            flat[j] = original + epsilon
            loss_plus = total_loss()
            flat[j] = original - epsilon
            loss_minus = total_loss()
            flat[j] = original
            numeric[pos] = (loss_plus - loss_minus) / (2.0 * epsilon)
            pos += 1

    scale_floor = 1e-3 * float(np.max(np.abs(analytic))) if analytic.size else 0.0
    denom = np.maximum.reduce(
        [np.abs(analytic), np.abs(numeric), np.full_like(analytic, max(scale_floor, 1e-12))]
    )
    return float(np.max(np.abs(analytic - numeric) / denom))
