"""Save/load dispatch for every persistable model type.

Each model serializes to a self-describing line-oriented text format whose
first line names the kind and format version; floats use shortest
round-trip representations so a loaded model predicts bit-identically.
"""

from __future__ import annotations

from pathlib import Path

from .boosted_trees import GbtModel
from .ensemble import LinearModel, RelativeRegressionModel, VoteModel
from .knn import KnnModel
from .neural_net import MlpModel

_CLASSES = {
    "gbt": GbtModel,
    "mlp": MlpModel,
    "linear": LinearModel,
    "relative": RelativeRegressionModel,
    "vote": VoteModel,
    "knn": KnnModel,
}


def model_kind(model) -> str:
    for kind, cls in _CLASSES.items():
        if isinstance(model, cls):
            return kind
    raise ValueError(f"unsupported model type {type(model).__name__}")


def model_to_text(model) -> str:
    model_kind(model)
    return model.to_text()


def model_from_text(text: str):
    first = text.splitlines()[0] if text.splitlines() else ""
    kind = first.split(" ", 1)[0]
    if kind not in _CLASSES:
        raise ValueError(f"unrecognized model header {first!r}")
    return _CLASSES[kind].from_text(text)


def save_model(model, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(model_to_text(model), encoding="utf-8")
    return path


def load_model(path: str | Path):
    return model_from_text(Path(path).read_text(encoding="utf-8"))
