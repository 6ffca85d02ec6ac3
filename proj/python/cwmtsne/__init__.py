"""Exact t-SNE embeddings and cluster-weighted model selection."""

from ._core import (
    ConfigError,
    DataError,
    DegeneracyError,
    EmptyComponentError,
    Error,
    calibrate,
    compare_partitions,
    count_parameters,
    covariance_mstep,
    embed,
    fit,
    information_criteria,
    majority_accuracy,
    models,
    pair_counts,
    param_count,
    render_scatter_svg,
    run_pipeline,
    sweep,
    transform_labels,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DegeneracyError",
    "EmptyComponentError",
    "Error",
    "calibrate",
    "compare_partitions",
    "count_parameters",
    "covariance_mstep",
    "embed",
    "fit",
    "information_criteria",
    "majority_accuracy",
    "models",
    "pair_counts",
    "param_count",
    "render_scatter_svg",
    "run_pipeline",
    "sweep",
    "transform_labels",
]
