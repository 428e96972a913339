from ._core import (
    DataError,
    EvalDataset,
    Model,
    NumericError,
    ScoreTable,
    artifact_hash,
    audit_consistency,
    diff_table_from_absolute,
    generate_synthetic,
    huber,
    mbr_select,
    meta_evaluate,
    run_cli,
    soft_pairwise_accuracy,
    synthetic_correct_tokens,
    tie_calibrated_accuracy,
)

__all__ = [
    "DataError",
    "EvalDataset",
    "Model",
    "NumericError",
    "ScoreTable",
    "artifact_hash",
    "audit_consistency",
    "diff_table_from_absolute",
    "generate_synthetic",
    "huber",
    "mbr_select",
    "meta_evaluate",
    "run_cli",
    "soft_pairwise_accuracy",
    "synthetic_correct_tokens",
    "tie_calibrated_accuracy",
]
