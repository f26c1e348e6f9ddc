"""Model selection, leave-one-out evaluation, ablation, coverage and significance tests."""

from .analysis import ABLATION_ROWS, AblationRow, Exclusion, ablate, ablation_table, coverage_analysis, loo_evaluate, run_ablations
from .engine import (
    DAP_KINDS,
    Design,
    LooJob,
    Technique,
    UnitResult,
    amp_grid,
    build_design,
    dap_grid,
    default_technique,
    featurize_corpus,
    loo_splits,
    run_loo,
)
from .report import ConditionalRow, CoverageReport, EvaluationReport, conditional_success_report
from .selection import SelectionReport, fold_assignment, nested_model_selection, select_on_design
from .stats import McNemarResult, ProportionResult, mcnemar_from_counts, mcnemar_test, proportion_test

__all__ = [
    "ABLATION_ROWS",
    "AblationRow",
    "ConditionalRow",
    "CoverageReport",
    "DAP_KINDS",
    "Design",
    "EvaluationReport",
    "Exclusion",
    "LooJob",
    "McNemarResult",
    "ProportionResult",
    "SelectionReport",
    "Technique",
    "UnitResult",
    "ablate",
    "ablation_table",
    "amp_grid",
    "build_design",
    "conditional_success_report",
    "coverage_analysis",
    "dap_grid",
    "default_technique",
    "featurize_corpus",
    "fold_assignment",
    "loo_evaluate",
    "loo_splits",
    "mcnemar_from_counts",
    "mcnemar_test",
    "nested_model_selection",
    "proportion_test",
    "run_ablations",
    "run_loo",
    "select_on_design",
]
