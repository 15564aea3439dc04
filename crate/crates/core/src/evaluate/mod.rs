//! Metrics, patient-grouped cross-validation, grid search and clustering of
//! configurations by their metric profiles.

mod cv;
mod folds;
mod grid;
mod kmeans;
mod metrics;
mod summary;

pub use cv::{
    cross_validate, cross_validate_detailed, cross_validate_table, cross_validate_table_detailed,
    leakage_violations, split_rows, CvConfig, CvRun, FoldRun,
};
pub use folds::{make_folds, make_folds_for, make_folds_table, FoldPlan};
pub use grid::{grid_search, grid_search_table, GridCell, GridSettings};
pub use kmeans::{cluster_configs, kmeans, ConfigCluster, KMeansFit, KMEANS_RESTARTS};
pub use metrics::{roc_auc, threshold_metrics, Confusion, ThresholdMetrics, DEFAULT_THRESHOLD};
pub use summary::{
    metrics_from_csv, metrics_to_csv, rank_order, rank_summaries, read_metrics_csv,
    write_metrics_csv, FoldOutcome, MeanStd, MetricSummary, METRICS_HEADER,
};
