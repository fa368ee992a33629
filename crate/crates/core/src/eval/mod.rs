//! Cross-validation, hyperparameter search, metrics and the feature-subset
//! comparison.

mod ablation;
mod folds;
mod metrics;
mod report;
mod search;

use thiserror::Error;

pub use ablation::{
    column_counts, evaluate_subsets, rank_features, run_ablation, AblationConfig, EvalReport, FoldOutcome, Ranking,
    SubsetResult, DECISION_THRESHOLD, DEFAULT_TOP_K,
};
pub use folds::{stratified_kfold, FoldAssignment, FoldError, DEFAULT_FOLDS};
pub use metrics::{auc, precision_recall, roc_curve, MetricError};
pub use report::{importance_svg, metrics_json, ranking_csv, roc_csv, RunMeta, PROTOCOL};
pub use search::{
    grid_search_gbt, grid_search_knn, CellResult, GbtCell, GbtGrid, SearchResult, DEFAULT_GBT_DEPTHS,
    DEFAULT_GBT_TREES, DEFAULT_KNN_GRID,
};

use crate::model::{GbtError, ImportanceError, KnnError};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("every grid cell failed")]
    AllCellsFailed,
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Knn(#[from] KnnError),
    #[error(transparent)]
    Gbt(#[from] GbtError),
    #[error(transparent)]
    Importance(#[from] ImportanceError),
}
