"""The four reproduction pipelines: ingest, split, fit, predict, report.

``execute`` runs a spec in memory; ``run`` additionally emits artifacts
into the spec's output directory: predictions.csv, metrics.txt,
metrics.json, spec_echo.spec, folds.csv (sliding validation) and
residuals.csv (knn). Examples are constructed over the combined
train+test range and partitioned by label date, so test features may use
history from the end of the training period and the first test example's
previous-actual is the real last training close.

predictions.csv carries date, actual, prediction, prev_actual; the
prev_actual column makes every emitted metric recomputable from the file
alone (see verify_report).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .boosted_trees import fit_gbt
from .ensemble import fit_linear, fit_vote, relative_trainer
from .errors import InsufficientDataError, SelfConsistencyError, SpecError
from .knn import knn_run
from .market_data import PriceSeries, parse_csv, slice_by_date, split_linear
from .metrics import PerformanceVector, ResidualSummary, performance_vector
from .neural_net import fit_mlp
from .runspec import (
    DateRangeSplit,
    EnsembleParams,
    GbtParams,
    KnnParams,
    LaggedMode,
    LinearSplit,
    MlpParams,
    RunSpec,
    SameDayMode,
    SlidingValidation,
    load_spec,
    with_model_overrides,
)
from .validation import ValidationReport, sliding_validate
from .windowing import WindowedExampleSet, make_same_day_examples, window, with_prev_label_feature

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictionRow:
    date: date
    actual: float
    prediction: float
    prev_actual: float


@dataclass(frozen=True, eq=False)
class RunReport:
    spec: RunSpec
    predictions: tuple[PredictionRow, ...]
    metrics: PerformanceVector
    validation: ValidationReport | None = None
    residuals: ResidualSummary | None = None
    artifacts: dict[str, Path] | None = None


def _split_series(spec: RunSpec, series: PriceSeries):
    """Returns (combined, train_series, test_series, in_train, in_test)."""
    if isinstance(spec.split, DateRangeSplit):
        s = spec.split
        combined = slice_by_date(series, s.train_start, s.test_end)
        train = slice_by_date(series, s.train_start, s.train_end)
        test = slice_by_date(series, s.test_start, s.test_end)
        return (
            combined, train, test,
            lambda d: s.train_start <= d <= s.train_end,
            lambda d: s.test_start <= d <= s.test_end,
        )
    s = spec.split
    work = series
    if s.start is not None or s.end is not None:
        work = slice_by_date(
            series,
            s.start if s.start is not None else series.first_date,
            s.end if s.end is not None else series.last_date,
        )
    train, test = split_linear(work, s.ratio)
    boundary = test.records[0].date
    return (
        work, train, test,
        lambda d: d < boundary,
        lambda d: d >= boundary,
    )


def _build_examples(spec: RunSpec, combined: PriceSeries) -> WindowedExampleSet:
    if isinstance(spec.example_mode, LaggedMode):
        mode = spec.example_mode
        return window(
            combined, spec.attributes, mode.window_size, mode.step_size,
            mode.horizon, spec.label,
        )
    feature_attrs = tuple(a for a in spec.attributes if a != spec.label)
    if not feature_attrs:
        raise ValueError(
            "same-day examples need at least one attribute besides the label; "
            f"got attributes {spec.attributes} with label '{spec.label}'"
        )
    examples = make_same_day_examples(combined, feature_attrs, spec.label)
    if spec.model == "ensemble":
        examples = with_prev_label_feature(examples, f"{spec.label}-1")
    return examples


def _trainer_for(spec: RunSpec, feature_names: tuple[str, ...]):
    params = spec.model_params
    if isinstance(params, GbtParams):
        def train(X, y, seed):
            return fit_gbt(
                X, y, n_trees=params.n_trees, shrinkage=params.shrinkage,
                max_depth=params.max_depth, min_leaf=params.min_leaf,
                seed=seed, feature_names=feature_names,
            )
        return train
    if isinstance(params, MlpParams):
        def train(X, y, seed):
            return fit_mlp(
                X, y, cycles=params.cycles, learning_rate=params.learning_rate,
                momentum=params.momentum, hidden_sizes=params.hidden_sizes, seed=seed,
            )
        return train
    assert isinstance(params, EnsembleParams)
    gbt_p, mlp_p = params.gbt, params.mlp

    def train_gbt(X, y, seed):
        return fit_gbt(
            X, y, n_trees=gbt_p.n_trees, shrinkage=gbt_p.shrinkage,
            max_depth=gbt_p.max_depth, min_leaf=gbt_p.min_leaf,
            seed=seed, feature_names=feature_names,
        )

    def train_mlp(X, y, seed):
        return fit_mlp(
            X, y, cycles=mlp_p.cycles, learning_rate=mlp_p.learning_rate,
            momentum=mlp_p.momentum, hidden_sizes=mlp_p.hidden_sizes, seed=seed,
        )

    train_relative = relative_trainer(
        params.relative_base, feature_names, params.relative_transform,
        lambda X, y, seed: fit_linear(X, y),
    )
    members = [train_gbt, train_mlp, train_relative]

    def train(X, y, seed):
        return fit_vote(members, X, y, base_seed=seed)

    return train


def execute(spec: RunSpec) -> RunReport:
    """Run the spec in memory; deterministic given (spec, seed, input file)."""
    series = parse_csv(spec.data_path, symbol=spec.symbol)
    combined, train_series, test_series, in_train, in_test = _split_series(spec, series)

    if spec.model == "knn":
        params = spec.model_params
        assert isinstance(params, KnnParams)
        forecast_dates = test_series.dates()
        actuals = test_series.closes()
        result = knn_run(train_series, forecast_dates, actuals, params.k, params.weighting)
        prev = np.concatenate(([train_series.records[-1].close], actuals[:-1]))
        rows = tuple(
            PredictionRow(d, float(a), float(p), float(pv))
            for d, a, p, pv in zip(forecast_dates, actuals, result.forecasts, prev)
        )
        return RunReport(
            spec=spec, predictions=rows, metrics=result.metrics, residuals=result.residuals
        )

    examples = _build_examples(spec, combined)
    train_mask = np.asarray([in_train(d) for d in examples.label_dates])
    test_mask = np.asarray([in_test(d) for d in examples.label_dates])
    train_ex = examples.subset(train_mask)
    test_ex = examples.subset(test_mask)
    if not len(train_ex):
        raise InsufficientDataError(f"{spec.symbol}: no training examples in the training range")
    if not len(test_ex):
        raise InsufficientDataError(f"{spec.symbol}: no test examples in the test range")

    trainer = _trainer_for(spec, examples.feature_names)
    validation = None
    if isinstance(spec.validation, SlidingValidation):
        v = spec.validation
        validation = sliding_validate(
            train_ex, trainer,
            train_width=v.train_width, step=v.step,
            test_width=v.test_width, horizon=v.horizon,
            base_seed=spec.seed,
        )
    model = trainer(train_ex.features, train_ex.labels, spec.seed)
    predictions = np.asarray(model.predict(test_ex.features), dtype=float)
    metrics = performance_vector(test_ex.labels, predictions, test_ex.prev_actuals)
    rows = tuple(
        PredictionRow(d, float(a), float(p), float(pv))
        for d, a, p, pv in zip(
            test_ex.label_dates, test_ex.labels, predictions, test_ex.prev_actuals
        )
    )
    return RunReport(
        spec=spec, predictions=rows, metrics=metrics, validation=validation
    )


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _metrics_json(report: RunReport) -> str:
    payload: dict = {
        "symbol": report.spec.symbol,
        "model": report.spec.model,
        "holdout": report.metrics.as_dict(),
    }
    if report.validation is not None:
        payload["validation"] = {
            "folds": len(report.validation.folds),
            "macro": {
                key: (None if stats is None else {"mean": stats.mean, "std": stats.std})
                for key, stats in report.validation.macro.items()
            },
            "micro": report.validation.micro.as_dict(),
        }
    if report.residuals is not None:
        payload["residual_mean"] = report.residuals.mean
    return json.dumps(payload, indent=2) + "\n"


def _metrics_text(report: RunReport) -> str:
    heading = "Forecasting performance" if report.spec.model == "knn" else "Performance (holdout)"
    blocks = [
        f"symbol: {report.spec.symbol}",
        f"model: {report.spec.model}",
        f"seed: {report.spec.seed}",
        "",
        heading,
        report.metrics.render_text(),
    ]
    if report.validation is not None:
        blocks.extend([
            "",
            f"Performance (sliding validation, {len(report.validation.folds)} folds)",
            report.validation.render_text(),
        ])
    if report.residuals is not None:
        blocks.extend(["", "Residual analysis", f"mean: {report.residuals.mean!r}"])
    return "\n".join(blocks) + "\n"


def emit(report: RunReport, output_dir: Path | None = None) -> RunReport:
    """Write artifacts; on any failure, partial outputs are removed."""
    out = Path(output_dir) if output_dir is not None else report.spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def put(name: str, text: str) -> Path:
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
        return path

    artifacts: dict[str, Path] = {}
    try:
        artifacts["spec_echo"] = put("spec_echo.spec", report.spec.echo_text())
        artifacts["predictions"] = put(
            "predictions.csv",
            _csv_text(
                ["date", "actual", "prediction", "prev_actual"],
                [
                    [r.date.isoformat(), repr(r.actual), repr(r.prediction), repr(r.prev_actual)]
                    for r in report.predictions
                ],
            ),
        )
        artifacts["metrics_txt"] = put("metrics.txt", _metrics_text(report))
        artifacts["metrics_json"] = put("metrics.json", _metrics_json(report))
        if report.validation is not None:
            rows = []
            for fold in report.validation.folds:
                for d, a, p, pv in zip(
                    fold.test_dates, fold.actuals, fold.predictions, fold.prev_actuals
                ):
                    rows.append([fold.fold_index, d.isoformat(), repr(float(a)), repr(float(p)), repr(float(pv))])
            artifacts["folds"] = put(
                "folds.csv",
                _csv_text(["fold", "date", "actual", "prediction", "prev_actual"], rows),
            )
        if report.residuals is not None:
            rows = [
                [r.date.isoformat(), repr(r.prediction), repr(r.actual), repr(r.actual - r.prediction)]
                for r in report.predictions
            ]
            artifacts["residuals"] = put(
                "residuals.csv", _csv_text(["date", "forecast", "actual", "residual"], rows)
            )
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
    return RunReport(
        spec=report.spec,
        predictions=report.predictions,
        metrics=report.metrics,
        validation=report.validation,
        residuals=report.residuals,
        artifacts=artifacts,
    )


def run(spec: RunSpec | str | Path) -> RunReport:
    """execute + emit; the standard entry point for one experiment."""
    if not isinstance(spec, RunSpec):
        spec = load_spec(spec)
    report = emit(execute(spec))
    verify_report(spec.output_dir)
    return report


def _close(a: float | None, b: float | None, tol: float = 1e-9) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _read_prediction_csv(path: Path):
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    return rows


def verify_report(output_dir: str | Path) -> dict:
    """Recompute metrics from the emitted CSVs and compare to metrics.json.

    Raises SelfConsistencyError on any disagreement beyond 1e-9 relative.
    Returns the parsed metrics.json payload.
    """
    out = Path(output_dir)
    payload = json.loads((out / "metrics.json").read_text(encoding="utf-8"))

    rows = _read_prediction_csv(out / "predictions.csv")
    actuals = np.asarray([float(r["actual"]) for r in rows])
    predictions = np.asarray([float(r["prediction"]) for r in rows])
    prev = np.asarray([float(r["prev_actual"]) for r in rows])
    recomputed = performance_vector(actuals, predictions, prev).as_dict()
    for key, value in payload["holdout"].items():
        if not _close(value, recomputed[key]):
            raise SelfConsistencyError(
                f"{out}: holdout {key} in metrics.json is {value}, "
                f"recomputed {recomputed[key]} from predictions.csv"
            )

    if "validation" in payload:
        fold_rows = _read_prediction_csv(out / "folds.csv")
        by_fold: dict[int, list] = {}
        for r in fold_rows:
            by_fold.setdefault(int(r["fold"]), []).append(r)
        pooled_a, pooled_p, pooled_v = [], [], []
        fold_vectors = []
        for fold in sorted(by_fold):
            rows = by_fold[fold]
            a = np.asarray([float(r["actual"]) for r in rows])
            p = np.asarray([float(r["prediction"]) for r in rows])
            v = np.asarray([float(r["prev_actual"]) for r in rows])
            pooled_a.append(a)
            pooled_p.append(p)
            pooled_v.append(v)
            fold_vectors.append(performance_vector(a, p, v))
        micro = performance_vector(
            np.concatenate(pooled_a), np.concatenate(pooled_p), np.concatenate(pooled_v)
        ).as_dict()
        for key, value in payload["validation"]["micro"].items():
            if not _close(value, micro[key]):
                raise SelfConsistencyError(
                    f"{out}: micro {key} in metrics.json is {value}, recomputed {micro[key]}"
                )
        from .validation import MACRO_KEYS, _fold_scalar

        for key in MACRO_KEYS:
            values = [v for vec in fold_vectors if (v := _fold_scalar(vec, key)) is not None]
            stored = payload["validation"]["macro"][key]
            if not values:
                if stored is not None:
                    raise SelfConsistencyError(f"{out}: macro {key} should be undefined")
                continue
            arr = np.asarray(values)
            if stored is None or not (
                _close(stored["mean"], float(arr.mean())) and _close(stored["std"], float(arr.std()))
            ):
                raise SelfConsistencyError(f"{out}: macro {key} disagrees with folds.csv")

    if "residual_mean" in payload:
        residual_rows = _read_prediction_csv(out / "residuals.csv")
        mean = float(np.mean([float(r["residual"]) for r in residual_rows]))
        if not _close(payload["residual_mean"], mean):
            raise SelfConsistencyError(
                f"{out}: residual_mean {payload['residual_mean']} disagrees with residuals.csv ({mean})"
            )
    return payload


@dataclass(frozen=True, eq=False)
class ComparisonResult:
    symbol: str
    models: tuple[str, ...]
    table: dict[str, dict[str, float | None]]
    references: dict[str, dict[str, str]]
    artifacts: dict[str, Path]

    def render_text(self) -> str:
        from .metrics import METRIC_KEYS

        columns = list(self.models)
        ref_columns = [m for m in self.models if m in self.references]
        header = ["metric"] + columns + [f"paper-reported:{m}" for m in ref_columns]
        rows = [header]
        for key in METRIC_KEYS:
            row = [key]
            for m in columns:
                value = self.table[m].get(key)
                row.append("undefined" if value is None else f"{value:.6g}")
            for m in ref_columns:
                row.append(self.references[m].get(key, ""))
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        return "\n".join(
            "  ".join(cell.ljust(width) for cell, width in zip(r, widths)).rstrip()
            for r in rows
        )


def load_paper_references(path: str | Path) -> dict[str, dict[str, str]]:
    """CSV with header model,metric,value; values are kept verbatim."""
    from .metrics import METRIC_KEYS

    refs: dict[str, dict[str, str]] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"model", "metric", "value"}:
            raise ValueError("paper reference file needs columns model,metric,value")
        for row in reader:
            if row["metric"] not in METRIC_KEYS:
                raise ValueError(f"unknown metric '{row['metric']}' in paper reference file")
            refs.setdefault(row["model"], {})[row["metric"]] = row["value"]
    return refs


def compare(
    specs,
    paper_references: str | Path | None = None,
    output_dir: str | Path | None = None,
) -> ComparisonResult:
    """Run >= 2 specs for one symbol and tabulate their metrics side by side.

    Emits comparison.csv and a long-format plot_data.csv
    (date, actual, model, prediction) sufficient to redraw the
    original-vs-predicted charts.
    """
    from .metrics import METRIC_KEYS

    loaded = [spec if isinstance(spec, RunSpec) else load_spec(spec) for spec in specs]
    if len(loaded) < 2:
        raise ValueError("compare needs at least 2 run specs")
    symbols = {spec.symbol for spec in loaded}
    if len(symbols) != 1:
        raise ValueError(f"compare covers one symbol at a time, got {sorted(symbols)}")
    symbol = loaded[0].symbol
    models = []
    for spec in loaded:
        name = spec.model
        while name in models:  # two specs of the same model family stay distinct
            name += "+"
        models.append(name)

    reports = [run(spec) for spec in loaded]
    table = {name: report.metrics.as_dict() for name, report in zip(models, reports)}
    references = {} if paper_references is None else load_paper_references(paper_references)

    out = Path(output_dir) if output_dir is not None else loaded[0].output_dir.parent / f"compare_{symbol}"
    out.mkdir(parents=True, exist_ok=True)

    header = ["metric"] + models + [f"paper-reported:{m}" for m in models if m in references]
    rows = []
    for key in METRIC_KEYS:
        row = [key]
        for m in models:
            value = table[m].get(key)
            row.append("" if value is None else repr(value))
        for m in models:
            if m in references:
                row.append(references[m].get(key, ""))
        rows.append(row)
    comparison_path = out / "comparison.csv"
    comparison_path.write_text(_csv_text(header, rows), encoding="utf-8")

    plot_rows = []
    for name, report in zip(models, reports):
        for r in report.predictions:
            plot_rows.append([r.date.isoformat(), repr(r.actual), name, repr(r.prediction)])
    plot_path = out / "plot_data.csv"
    plot_path.write_text(
        _csv_text(["date", "actual", "model", "prediction"], plot_rows), encoding="utf-8"
    )

    return ComparisonResult(
        symbol=symbol,
        models=tuple(models),
        table=table,
        references=references,
        artifacts={"comparison": comparison_path, "plot_data": plot_path},
    )


def load_grid(path: str | Path) -> dict[str, list[str]]:
    """Grid file: one 'key = v1, v2, ...' line per swept model parameter."""
    grid: dict[str, list[str]] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise SpecError("grid file: expected 'key = v1, v2, ...'", line=line_no)
        values = [v.strip() for v in value.split(",") if v.strip()]
        if not values:
            raise SpecError("grid file: empty value list", key=key.strip(), line=line_no)
        grid[key.strip()] = values
    if not grid:
        raise SpecError(f"grid file {path} defines no parameters")
    return grid


def sweep(spec: RunSpec | str | Path, grid: dict[str, list[str]]) -> list[tuple[dict[str, str], PerformanceVector]]:
    """Run the spec once per grid-point (in memory) and write sweep.csv."""
    from .metrics import METRIC_KEYS

    if not isinstance(spec, RunSpec):
        spec = load_spec(spec)
    keys = sorted(grid)
    results = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        overrides = dict(zip(keys, combo))
        report = execute(with_model_overrides(spec, overrides))
        results.append((overrides, report.metrics))
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for overrides, metrics in results:
        flat = metrics.as_dict()
        rows.append(
            [overrides[k] for k in keys]
            + ["" if flat[key] is None else repr(flat[key]) for key in METRIC_KEYS]
        )
    (spec.output_dir / "sweep.csv").write_text(
        _csv_text(keys + list(METRIC_KEYS), rows), encoding="utf-8"
    )
    return results
