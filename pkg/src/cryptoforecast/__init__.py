"""Close-price prediction and forecasting over daily OHLCV data.

Four model families (gradient boosted trees, an MLP trained with momentum
SGD, a vote ensemble with relative regression, and k-NN over date/close
pairs), plus windowing, walk-forward validation, a seven-metric
performance vector, and a spec-driven pipeline with a CLI.
"""

from .boosted_trees import GbtHyperparams, GbtModel, TreeNode, dump_model, fit_gbt, fit_tree, parse_dump
from .ensemble import (
    LinearModel,
    RelativeRegressionModel,
    VoteModel,
    fit_linear,
    fit_relative,
    fit_vote,
    predict_vote,
    relative_trainer,
)
from .errors import (
    CryptoForecastError,
    DataError,
    DivisionGuardError,
    DuplicateDateError,
    EmptySliceError,
    EnsembleMemberError,
    InconsistentCandleError,
    InsufficientDataError,
    ParseError,
    SelfConsistencyError,
    SpecError,
    UnderdeterminedError,
)
from .knn import KnnModel, KnnRunResult, date_ordinal, fit_knn, forecast_knn, knn_run
from .market_data import (
    ATTRIBUTES,
    OhlcvRecord,
    PriceSeries,
    parse_csv,
    slice_by_date,
    split_linear,
    to_csv,
)
from .metrics import (
    ErrorStats,
    PerformanceVector,
    ResidualSummary,
    absolute_error,
    correlation,
    performance_vector,
    relative_error,
    residual_summary,
    rmse,
    squared_error,
    trend_accuracy,
)
from .model_io import load_model, save_model
from .neural_net import MlpHyperparams, MlpModel, default_hidden_sizes, fit_mlp, gradient_check
from .pipeline import (
    ComparisonResult,
    PredictionRow,
    RunReport,
    compare,
    execute,
    emit,
    run,
    sweep,
    verify_report,
)
from .runspec import (
    DateRangeSplit,
    EnsembleParams,
    GbtParams,
    HoldoutValidation,
    KnnParams,
    LaggedMode,
    LinearSplit,
    MlpParams,
    RunSpec,
    SameDayMode,
    SlidingValidation,
    load_spec,
)
from .validation import FoldResult, ValidationReport, fold_layout, sliding_validate
from .windowing import WindowedExampleSet, make_same_day_examples, window, with_prev_label_feature

__version__ = "0.1.0"
