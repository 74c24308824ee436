"""Post-hoc group-robustness toolkit.

Class-specific scaling searched on a validation split, trade-off coverage
summaries, and cluster/attribute routed variants, all backed by the C++ core.
"""

from ._core import (
    AttributeScalingModel,
    ClusterScalingModel,
    CoverageReport,
    Dataset,
    FrontierPoint,
    LinearModel,
    MetricBundle,
    PredictionSet,
    RealizedCoverage,
    ScalingVector,
    SearchConfig,
    SearchResult,
    SelectKResult,
    SubsampleMode,
    SyntheticConfig,
    SyntheticData,
    Target,
    TradeoffPoint,
    TradeoffPool,
    TrainOptions,
    ars_fit,
    ars_predict,
    cr_weights,
    full_grid_search,
    generate,
    gr_weights,
    greedy_search,
    group_proportions,
    irs_fit,
    irs_predict,
    load_attribute_model,
    load_cluster_model,
    load_pool,
    load_prediction_set,
    load_report,
    metric_bundle,
    pareto_frontier,
    predict_proba,
    realized_coverage,
    robust_coverage,
    save_attribute_model,
    save_cluster_model,
    save_pool,
    save_prediction_set,
    save_report,
    scaled_predict,
    select_k,
    subsample_balanced,
    target_from_name,
    target_name,
    target_value,
    to_prediction_set,
    train_linear,
)

__all__ = [
    "AttributeScalingModel",
    "ClusterScalingModel",
    "CoverageReport",
    "Dataset",
    "FrontierPoint",
    "LinearModel",
    "MetricBundle",
    "PredictionSet",
    "RealizedCoverage",
    "ScalingVector",
    "SearchConfig",
    "SearchResult",
    "SelectKResult",
    "SubsampleMode",
    "SyntheticConfig",
    "SyntheticData",
    "Target",
    "TradeoffPoint",
    "TradeoffPool",
    "TrainOptions",
    "ars_fit",
    "ars_predict",
    "cr_weights",
    "full_grid_search",
    "generate",
    "gr_weights",
    "greedy_search",
    "group_proportions",
    "irs_fit",
    "irs_predict",
    "load_attribute_model",
    "load_cluster_model",
    "load_pool",
    "load_prediction_set",
    "load_report",
    "metric_bundle",
    "pareto_frontier",
    "predict_proba",
    "realized_coverage",
    "robust_coverage",
    "save_attribute_model",
    "save_cluster_model",
    "save_pool",
    "save_prediction_set",
    "save_report",
    "scaled_predict",
    "select_k",
    "subsample_balanced",
    "target_from_name",
    "target_name",
    "target_value",
    "to_prediction_set",
    "train_linear",
]
