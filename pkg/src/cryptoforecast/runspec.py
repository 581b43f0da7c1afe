"""Declarative run specifications: grammar, loading, defaults, and echoes.

Spec files are plain text with one nesting level:

    # comment (';' also works); blank lines ignored
    key = value            top-level keys come first
    [section]              then optional sections
    key = value

Top-level keys: symbol, data_path, model, label, attributes, seed,
output_dir. Sections: [model] (hyperparameters of the chosen model),
[split], [validation], [example_mode]. Unknown keys and sections are
rejected with the offending line number. After loading, every knob has an
explicit value; ``echo_text`` renders the fully-resolved spec back in the
same grammar. Relative paths resolve against the spec file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path

from .errors import SpecError
from .market_data import ATTRIBUTES

MODELS = ("gbt", "neural_net", "ensemble", "knn")

TOP_KEYS = ("symbol", "data_path", "model", "label", "attributes", "seed", "output_dir")

MODEL_KEYS = {
    "gbt": ("n_trees", "max_depth", "min_leaf", "shrinkage"),
    "neural_net": ("cycles", "learning_rate", "momentum", "hidden_sizes"),
    "ensemble": (
        "gbt_n_trees", "gbt_max_depth", "gbt_min_leaf", "gbt_shrinkage",
        "nn_cycles", "nn_learning_rate", "nn_momentum", "nn_hidden_sizes",
        "relative_base", "relative_transform",
    ),
    "knn": ("k", "weighting"),
}

SPLIT_KEYS = {
    "date_range": ("type", "train_start", "train_end", "test_start", "test_end"),
    "linear": ("type", "ratio", "start", "end"),
}
VALIDATION_KEYS = {
    "holdout": ("type",),
    "sliding": ("type", "train_width", "step", "test_width", "horizon"),
}
EXAMPLE_KEYS = {
    "same_day": ("type",),
    "lagged": ("type", "window_size", "step_size", "horizon"),
}

DEFAULT_ATTRIBUTES = {
    "gbt": ("open", "high", "low", "close", "volume", "market_cap"),
    "ensemble": ("open", "high", "low", "close", "volume", "market_cap"),
    "neural_net": ("close",),
    "knn": ("close",),
}


@dataclass(frozen=True)
class GbtParams:
    n_trees: int = 500
    max_depth: int | None = 5
    min_leaf: int = 10
    shrinkage: float = 0.1


@dataclass(frozen=True)
class MlpParams:
    cycles: int = 500
    learning_rate: float = 0.03
    momentum: float = 0.9
    hidden_sizes: tuple[int, ...] | None = None  # None renders as "auto"


@dataclass(frozen=True)
class EnsembleParams:
    gbt: GbtParams = field(default_factory=GbtParams)
    mlp: MlpParams = field(default_factory=lambda: MlpParams(learning_rate=0.3, momentum=0.2))
    relative_base: str = "close-1"
    relative_transform: str = "difference"


@dataclass(frozen=True)
class KnnParams:
    k: int = 5
    weighting: str = "uniform"


@dataclass(frozen=True)
class DateRangeSplit:
    train_start: date
    train_end: date
    test_start: date
    test_end: date


@dataclass(frozen=True)
class LinearSplit:
    ratio: float = 0.6
    start: date | None = None
    end: date | None = None


@dataclass(frozen=True)
class HoldoutValidation:
    pass


@dataclass(frozen=True)
class SlidingValidation:
    train_width: int = 4
    step: int = 1
    test_width: int = 4
    horizon: int = 1


@dataclass(frozen=True)
class SameDayMode:
    pass


@dataclass(frozen=True)
class LaggedMode:
    window_size: int = 1
    step_size: int = 1
    horizon: int = 1


@dataclass(frozen=True)
class RunSpec:
    symbol: str
    data_path: Path
    model: str
    model_params: GbtParams | MlpParams | EnsembleParams | KnnParams
    split: DateRangeSplit | LinearSplit
    validation: HoldoutValidation | SlidingValidation
    example_mode: SameDayMode | LaggedMode | None
    attributes: tuple[str, ...]
    label: str
    seed: int
    output_dir: Path

    def echo_text(self) -> str:
        lines = [
            f"symbol = {self.symbol}",
            f"data_path = {self.data_path}",
            f"model = {self.model}",
            f"label = {self.label}",
            f"attributes = {', '.join(self.attributes)}",
            f"seed = {self.seed}",
            f"output_dir = {self.output_dir}",
            "",
            "[model]",
        ]
        lines.extend(_render_params(self.model, self.model_params))
        lines.append("")
        lines.append("[split]")
        if isinstance(self.split, DateRangeSplit):
            lines.append("type = date_range")
            for key in ("train_start", "train_end", "test_start", "test_end"):
                lines.append(f"{key} = {getattr(self.split, key).isoformat()}")
        else:
            lines.append("type = linear")
            lines.append(f"ratio = {self.split.ratio}")
            if self.split.start is not None:
                lines.append(f"start = {self.split.start.isoformat()}")
            if self.split.end is not None:
                lines.append(f"end = {self.split.end.isoformat()}")
        lines.append("")
        lines.append("[validation]")
        if isinstance(self.validation, SlidingValidation):
            lines.append("type = sliding")
            for key in ("train_width", "step", "test_width", "horizon"):
                lines.append(f"{key} = {getattr(self.validation, key)}")
        else:
            lines.append("type = holdout")
        if self.example_mode is not None:
            lines.append("")
            lines.append("[example_mode]")
            if isinstance(self.example_mode, LaggedMode):
                lines.append("type = lagged")
                for key in ("window_size", "step_size", "horizon"):
                    lines.append(f"{key} = {getattr(self.example_mode, key)}")
            else:
                lines.append("type = same_day")
        return "\n".join(lines) + "\n"


def _render_params(model: str, params) -> list[str]:
    def hidden(sizes: tuple[int, ...] | None) -> str:
        return "auto" if sizes is None else ", ".join(str(s) for s in sizes)

    if model == "gbt":
        return [
            f"n_trees = {params.n_trees}",
            f"max_depth = {'none' if params.max_depth is None else params.max_depth}",
            f"min_leaf = {params.min_leaf}",
            f"shrinkage = {params.shrinkage}",
        ]
    if model == "neural_net":
        return [
            f"cycles = {params.cycles}",
            f"learning_rate = {params.learning_rate}",
            f"momentum = {params.momentum}",
            f"hidden_sizes = {hidden(params.hidden_sizes)}",
        ]
    if model == "ensemble":
        return [
            f"gbt_n_trees = {params.gbt.n_trees}",
            f"gbt_max_depth = {'none' if params.gbt.max_depth is None else params.gbt.max_depth}",
            f"gbt_min_leaf = {params.gbt.min_leaf}",
            f"gbt_shrinkage = {params.gbt.shrinkage}",
            f"nn_cycles = {params.mlp.cycles}",
            f"nn_learning_rate = {params.mlp.learning_rate}",
            f"nn_momentum = {params.mlp.momentum}",
            f"nn_hidden_sizes = {hidden(params.mlp.hidden_sizes)}",
            f"relative_base = {params.relative_base}",
            f"relative_transform = {params.relative_transform}",
        ]
    return [f"k = {params.k}", f"weighting = {params.weighting}"]


def _parse_spec_text(text: str, origin: str) -> tuple[dict, dict]:
    """Returns (top, sections) mapping key -> (value, line_number)."""
    top: dict[str, tuple[str, int]] = {}
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: dict[str, tuple[str, int]] | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in ("model", "split", "validation", "example_mode"):
                raise SpecError(f"{origin}: unknown section '[{name}]'", line=line_no)
            if name in sections:
                raise SpecError(f"{origin}: duplicate section '[{name}]'", line=line_no)
            sections[name] = {}
            current = sections[name]
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SpecError(f"{origin}: expected 'key = value'", line=line_no)
        key = key.strip()
        value = value.strip()
        target = top if current is None else current
        if key in target:
            raise SpecError(f"{origin}: duplicate key", key=key, line=line_no)
        target[key] = (value, line_no)
    return top, sections


def _parse_date_value(value: str, key: str, line: int) -> date:
    from .market_data import _parse_date
    from .errors import ParseError

    try:
        return _parse_date(value, line)
    except ParseError:
        raise SpecError(f"expected a date (YYYY-MM-DD or DD.MM.YYYY), got '{value}'", key=key, line=line) from None


def _typed(value: str, kind: str, key: str, line: int):
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError:
        raise SpecError(f"expected {kind} value, got '{value}'", key=key, line=line) from None
    return value


def _parse_hidden(value: str, key: str, line: int) -> tuple[int, ...] | None:
    if value == "auto":
        return None
    try:
        sizes = tuple(int(v.strip()) for v in value.split(",") if v.strip())
    except ValueError:
        raise SpecError(f"expected 'auto' or comma-separated integers, got '{value}'", key=key, line=line) from None
    if not sizes:
        raise SpecError("hidden_sizes must not be empty", key=key, line=line)
    return sizes


def _parse_max_depth(value: str, key: str, line: int) -> int | None:
    if value == "none":
        return None
    return _typed(value, "int", key, line)


def _check_keys(section: dict, allowed, origin: str, section_name: str) -> None:
    for key, (_, line_no) in section.items():
        if key not in allowed:
            raise SpecError(
                f"{origin}: unknown key in [{section_name}]", key=key, line=line_no
            )


def _model_params(model: str, section: dict, origin: str):
    _check_keys(section, MODEL_KEYS[model], origin, "model")

    def get(key, kind, default):
        if key not in section:
            return default
        value, line = section[key]
        if kind == "hidden":
            return _parse_hidden(value, key, line)
        if kind == "max_depth":
            return _parse_max_depth(value, key, line)
        return _typed(value, kind, key, line)

    if model == "gbt":
        return GbtParams(
            n_trees=get("n_trees", "int", 500),
            max_depth=get("max_depth", "max_depth", 5),
            min_leaf=get("min_leaf", "int", 10),
            shrinkage=get("shrinkage", "float", 0.1),
        )
    if model == "neural_net":
        return MlpParams(
            cycles=get("cycles", "int", 500),
            learning_rate=get("learning_rate", "float", 0.03),
            momentum=get("momentum", "float", 0.9),
            hidden_sizes=get("hidden_sizes", "hidden", None),
        )
    if model == "ensemble":
        transform = get("relative_transform", "str", "difference")
        if transform not in ("difference", "ratio"):
            _, line = section["relative_transform"]
            raise SpecError(
                f"relative_transform must be 'difference' or 'ratio', got '{transform}'",
                key="relative_transform", line=line,
            )
        return EnsembleParams(
            gbt=GbtParams(
                n_trees=get("gbt_n_trees", "int", 500),
                max_depth=get("gbt_max_depth", "max_depth", 5),
                min_leaf=get("gbt_min_leaf", "int", 10),
                shrinkage=get("gbt_shrinkage", "float", 0.1),
            ),
            mlp=MlpParams(
                cycles=get("nn_cycles", "int", 500),
                learning_rate=get("nn_learning_rate", "float", 0.3),
                momentum=get("nn_momentum", "float", 0.2),
                hidden_sizes=get("nn_hidden_sizes", "hidden", None),
            ),
            relative_base=get("relative_base", "str", "close-1"),
            relative_transform=transform,
        )
    weighting = get("weighting", "str", "uniform")
    if weighting not in ("uniform", "inverse_distance"):
        _, line = section["weighting"]
        raise SpecError(
            f"weighting must be 'uniform' or 'inverse_distance', got '{weighting}'",
            key="weighting", line=line,
        )
    return KnnParams(k=get("k", "int", 5), weighting=weighting)


def _split_block(section: dict | None, origin: str):
    if section is None:
        return LinearSplit()
    if "type" not in section:
        raise SpecError(f"{origin}: [split] needs a 'type' key", key="type")
    kind, line = section["type"]
    if kind not in SPLIT_KEYS:
        raise SpecError(f"split type must be one of {sorted(SPLIT_KEYS)}", key="type", line=line)
    _check_keys(section, SPLIT_KEYS[kind], origin, "split")
    if kind == "date_range":
        values = {}
        for key in ("train_start", "train_end", "test_start", "test_end"):
            if key not in section:
                raise SpecError(f"{origin}: [split] date_range needs '{key}'", key=key)
            value, key_line = section[key]
            values[key] = _parse_date_value(value, key, key_line)
        split = DateRangeSplit(**values)
        if split.train_start > split.train_end or split.test_start > split.test_end:
            raise SpecError(f"{origin}: split ranges must have start <= end", key="type", line=line)
        if split.train_end >= split.test_start:
            raise SpecError(
                f"{origin}: training range must end before the test range starts",
                key="type", line=line,
            )
        return split
    ratio = 0.6
    if "ratio" in section:
        value, key_line = section["ratio"]
        ratio = _typed(value, "float", "ratio", key_line)
        if not 0.0 < ratio < 1.0:
            raise SpecError(f"ratio must be in (0, 1), got {ratio}", key="ratio", line=key_line)
    start = end = None
    if "start" in section:
        start = _parse_date_value(section["start"][0], "start", section["start"][1])
    if "end" in section:
        end = _parse_date_value(section["end"][0], "end", section["end"][1])
    return LinearSplit(ratio=ratio, start=start, end=end)


def _validation_block(section: dict | None, origin: str):
    if section is None:
        return HoldoutValidation()
    if "type" not in section:
        raise SpecError(f"{origin}: [validation] needs a 'type' key", key="type")
    kind, line = section["type"]
    if kind not in VALIDATION_KEYS:
        raise SpecError(f"validation type must be one of {sorted(VALIDATION_KEYS)}", key="type", line=line)
    _check_keys(section, VALIDATION_KEYS[kind], origin, "validation")
    if kind == "holdout":
        return HoldoutValidation()
    kwargs = {}
    for key in ("train_width", "step", "test_width", "horizon"):
        if key in section:
            value, key_line = section[key]
            kwargs[key] = _typed(value, "int", key, key_line)
    return SlidingValidation(**kwargs)


def _example_block(section: dict | None, model: str, origin: str):
    if model == "knn":
        if section is not None:
            line = next(iter(section.values()))[1] if section else None
            raise SpecError(f"{origin}: [example_mode] does not apply to knn", line=line)
        return None
    if section is None:
        return LaggedMode() if model == "neural_net" else SameDayMode()
    if "type" not in section:
        raise SpecError(f"{origin}: [example_mode] needs a 'type' key", key="type")
    kind, line = section["type"]
    if kind not in EXAMPLE_KEYS:
        raise SpecError(f"example_mode type must be one of {sorted(EXAMPLE_KEYS)}", key="type", line=line)
    _check_keys(section, EXAMPLE_KEYS[kind], origin, "example_mode")
    if kind == "same_day":
        return SameDayMode()
    kwargs = {}
    for key in ("window_size", "step_size", "horizon"):
        if key in section:
            value, key_line = section[key]
            kwargs[key] = _typed(value, "int", key, key_line)
    return LaggedMode(**kwargs)


def load_spec(path: str | Path) -> RunSpec:
    path = Path(path)
    if not path.is_file():
        raise SpecError(f"spec file not found: {path}")
    origin = path.name
    top, sections = _parse_spec_text(path.read_text(encoding="utf-8"), origin)

    for key, (_, line_no) in top.items():
        if key not in TOP_KEYS:
            raise SpecError(f"{origin}: unknown key", key=key, line=line_no)
    for required in ("symbol", "data_path", "model"):
        if required not in top:
            raise SpecError(f"{origin}: missing required key", key=required)

    model = top["model"][0]
    if model not in MODELS:
        raise SpecError(
            f"model must be one of {', '.join(MODELS)}, got '{model}'",
            key="model", line=top["model"][1],
        )

    if "label" in top:
        label, label_line = top["label"]
        if label not in ATTRIBUTES:
            raise SpecError(f"label must be one of {', '.join(ATTRIBUTES)}", key="label", line=label_line)
    else:
        label = "close"

    if "attributes" in top:
        value, line_no = top["attributes"]
        attributes = tuple(a.strip() for a in value.split(",") if a.strip())
        unknown = set(attributes) - set(ATTRIBUTES)
        if unknown:
            raise SpecError(
                f"unknown attribute(s): {', '.join(sorted(unknown))}",
                key="attributes", line=line_no,
            )
        attributes = tuple(a for a in ATTRIBUTES if a in attributes)
    else:
        attributes = DEFAULT_ATTRIBUTES[model]

    seed = 0
    if "seed" in top:
        seed = _typed(top["seed"][0], "int", "seed", top["seed"][1])

    base = path.parent
    data_path = (base / top["data_path"][0]).resolve()
    symbol = top["symbol"][0]
    if "output_dir" in top:
        output_dir = (base / top["output_dir"][0]).resolve()
    else:
        output_dir = (base / "out" / f"{symbol}_{model}").resolve()

    return RunSpec(
        symbol=symbol,
        data_path=data_path,
        model=model,
        model_params=_model_params(model, sections.get("model", {}), origin),
        split=_split_block(sections.get("split"), origin),
        validation=_validation_block(sections.get("validation"), origin),
        example_mode=_example_block(sections.get("example_mode"), model, origin),
        attributes=attributes,
        label=label,
        seed=seed,
        output_dir=output_dir,
    )


def with_model_overrides(spec: RunSpec, overrides: dict[str, str]) -> RunSpec:
    """Apply grid-sweep overrides (model-section keys) to a resolved spec."""
    section = {key: (value, 0) for key, value in overrides.items()}
    params = _model_params(spec.model, {**_as_section(spec), **section}, "sweep")
    return replace(spec, model_params=params)


def _as_section(spec: RunSpec) -> dict[str, tuple[str, int]]:
    rendered = _render_params(spec.model, spec.model_params)
    out = {}
    for line in rendered:
        key, _, value = line.partition(" = ")
        out[key] = (value, 0)
    return out
