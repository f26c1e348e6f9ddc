"""Dataset format, run configuration, exports and the command line."""

from .cli import build_parser, cli_dispatch, main
from .config import WORKERS_ENV, EvaluationOptions, RunConfig, default_workers
from .dataset import (
    SCHEMA,
    SCHEMA_VERSION,
    ExcludedCase,
    aggregate_corpus,
    case_to_record,
    correct_share,
    export_feature_matrix,
    feature_matrix_rows,
    filter_degenerate,
    load_and_filter,
    read_dataset,
    record_to_case,
    write_dataset,
)

__all__ = [
    "EvaluationOptions",
    "ExcludedCase",
    "RunConfig",
    "SCHEMA",
    "SCHEMA_VERSION",
    "WORKERS_ENV",
    "aggregate_corpus",
    "build_parser",
    "case_to_record",
    "cli_dispatch",
    "correct_share",
    "default_workers",
    "export_feature_matrix",
    "feature_matrix_rows",
    "filter_degenerate",
    "load_and_filter",
    "main",
    "read_dataset",
    "record_to_case",
    "write_dataset",
]
