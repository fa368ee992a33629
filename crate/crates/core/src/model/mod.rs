//! Gradient-boosted tree ranking model and the nearest-neighbour classifier
//! used to measure predictive power.

mod gbt;
mod io;
mod knn;
mod matrix;
mod tree;

pub use gbt::{
    feature_importance, mean_deviance, predict_proba, sigmoid, train_gbt, FeatureImportance, GbtError,
    GbtFit, GbtModel, GbtParams, ImportanceError, DEFAULT_SHRINKAGE, MIN_PROBABILITY, MIN_TRAINING_ROWS,
};
pub use io::{read_model, write_model, ModelIoError};
pub use knn::{knn_fit, knn_predict_proba, KnnClassifier, KnnError, KnnModel};
pub use matrix::DenseMatrix;
pub use tree::{
    fit_tree, fit_tree_presorted, split_threshold, Node, RegressionTree, SortedColumns, Split, TreeError,
    TreeParams, DEFAULT_MIN_LEAF_SIZE, MIN_SPLIT_GAIN,
};
