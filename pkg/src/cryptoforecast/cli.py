"""Command-line interface.

Subcommands: ingest (validate + summarize a CSV), run (execute a spec),
compare (tabulate >= 2 specs side by side), dump-model (render a persisted
model), sweep (grid search over model hyperparameters).

Exit codes: 0 success, 1 spec/argument error, 2 data error,
3 internal invariant failure.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from .boosted_trees import GbtModel, dump_model
from .errors import CryptoForecastError, DataError, SpecError
from .market_data import parse_csv
from .model_io import load_model, model_kind
from .pipeline import compare, load_grid, run, sweep
from .runspec import load_spec


def _parse_schema(text: str) -> dict[str, str]:
    schema = {}
    for part in text.split(","):
        key, sep, value = part.partition("=")
        if not sep:
            raise ValueError(f"schema entries look like attr=Column, got '{part}'")
        schema[key.strip()] = value.strip()
    return schema


def _cmd_ingest(args) -> int:
    schema = _parse_schema(args.schema) if args.schema else None
    symbol = args.symbol or Path(args.csv).stem
    series = parse_csv(args.csv, schema=schema, symbol=symbol)
    gaps = series.date_gaps()
    print(f"symbol: {series.symbol}")
    print(f"records: {len(series)}")
    print(f"range: {series.first_date.isoformat()} .. {series.last_date.isoformat()}")
    print(f"attributes: {', '.join(series.available_attributes())}")
    print(f"calendar gaps: {len(gaps)}")
    for before, after in gaps[:5]:
        print(f"  gap: {before.isoformat()} -> {after.isoformat()}")
    if len(gaps) > 5:
        print(f"  ... and {len(gaps) - 5} more")
    return 0


def _cmd_run(args) -> int:
    report = run(args.spec)
    print(f"run complete: {report.spec.symbol} / {report.spec.model}")
    for name, path in sorted((report.artifacts or {}).items()):
        print(f"  {name}: {path}")
    print()
    print((report.artifacts["metrics_txt"]).read_text(encoding="utf-8").rstrip())
    return 0


def _cmd_compare(args) -> int:
    result = compare(args.specs, paper_references=args.paper_refs, output_dir=args.output)
    print(result.render_text())
    print()
    for name, path in sorted(result.artifacts.items()):
        print(f"{name}: {path}")
    return 0


def _cmd_dump_model(args) -> int:
    model = load_model(args.model_file)
    if args.tree is not None:
        if not isinstance(model, GbtModel):
            raise ValueError(f"--tree applies to gbt models, this is '{model_kind(model)}'")
        print(dump_model(model, args.tree))
        return 0
    kind = model_kind(model)
    print(f"kind: {kind}")
    if isinstance(model, GbtModel):
        hp = model.hyperparams
        print(f"trees: {len(model.trees)}")
        print(f"init_value: {model.init_value!r}")
        print(
            f"hyperparams: max_depth={hp.max_depth} min_leaf={hp.min_leaf} "
            f"shrinkage={hp.shrinkage} seed={hp.seed}"
        )
    else:
        print(model.to_text().rstrip())
    return 0


def _cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    results = sweep(spec, load_grid(args.grid))
    keys = sorted({k for overrides, _ in results for k in overrides})
    print(f"sweep complete: {len(results)} runs -> {spec.output_dir / 'sweep.csv'}")
    for overrides, metrics in results:
        combo = " ".join(f"{k}={overrides[k]}" for k in keys)
        print(f"  {combo}: rmse={metrics.rmse:.6g} trend={metrics.trend_accuracy:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cryptoforecast",
        description="OHLCV close-price prediction and forecasting pipelines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and summarize an OHLCV CSV")
    p.add_argument("csv")
    p.add_argument("--schema", help="column remapping, e.g. close=Close Price,market_cap=Market Cap")
    p.add_argument("--symbol", help="symbol name (defaults to the file stem)")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("run", help="execute a run spec and emit its reports")
    p.add_argument("spec")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="run >= 2 specs for one symbol and tabulate")
    p.add_argument("specs", nargs="+")
    p.add_argument("--paper-refs", help="CSV of externally reported values (model,metric,value)")
    p.add_argument("--output", help="directory for comparison.csv and plot_data.csv")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("dump-model", help="render a persisted model file")
    p.add_argument("model_file")
    p.add_argument("--tree", type=int, help="tree index to dump (gbt models)")
    p.set_defaults(func=_cmd_dump_model)

    p = sub.add_parser("sweep", help="grid search over model hyperparameters")
    p.add_argument("spec")
    p.add_argument("--grid", required=True, help="grid file: 'key = v1, v2, ...' lines")
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage; remap to 1
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return 1
    except CryptoForecastError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except Exception:
        traceback.print_exc()
        return 3


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
