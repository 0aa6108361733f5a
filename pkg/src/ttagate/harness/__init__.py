from ..records import EvalRecord, RunSummary
from .classifiers import GenerativeClassifier, ProbabilisticClassifier
from .engine import (
    DEFAULT_SEEDS,
    ClassChange,
    MeanStd,
    TTAPolicy,
    aggregate_runs,
    augmentation_count_sweep,
    calibrate_from_run,
    calibration_records,
    changed_prediction_breakdown,
    predict_one,
    run_condition,
)
from .report import read_summaries_csv, render_markdown, summaries_to_csv, write_report
from .simulate import majority_accuracy, simulate_noisy_tta

__all__ = [
    "DEFAULT_SEEDS",
    "ClassChange",
    "EvalRecord",
    "GenerativeClassifier",
    "MeanStd",
    "ProbabilisticClassifier",
    "RunSummary",
    "TTAPolicy",
    "aggregate_runs",
    "augmentation_count_sweep",
    "calibrate_from_run",
    "calibration_records",
    "changed_prediction_breakdown",
    "majority_accuracy",
    "predict_one",
    "read_summaries_csv",
    "render_markdown",
    "run_condition",
    "simulate_noisy_tta",
    "summaries_to_csv",
    "write_report",
]
