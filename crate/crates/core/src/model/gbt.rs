//! Gradient-boosted regression trees for binary classification.
//!
//! The model is an additive expansion `F(x) = base_score + Σ_i ν·f_i(x)` with
//! each tree `f_i` fitted to the gradient and hessian of the binomial deviance
//! at the current scores. Leaves hold Newton steps already scaled by the
//! shrinkage `ν`, so prediction is a plain sum.

use thiserror::Error;

use super::tree::{fit_tree_presorted, RegressionTree, SortedColumns, TreeError, TreeParams, DEFAULT_MIN_LEAF_SIZE};
use super::DenseMatrix;
use crate::ingest::Label;

pub const DEFAULT_SHRINKAGE: f64 = 0.1;
pub const MIN_TRAINING_ROWS: usize = 10;
/// Probabilities are kept inside `[MIN_PROBABILITY, 1 - MIN_PROBABILITY]`.
pub const MIN_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub max_depth: usize,
    pub n_trees: usize,
    pub shrinkage: f64,
    pub min_leaf_size: usize,
}

impl GbtParams {
    pub fn new(max_depth: usize, n_trees: usize) -> Self {
        GbtParams {
            max_depth,
            n_trees,
            shrinkage: DEFAULT_SHRINKAGE,
            min_leaf_size: DEFAULT_MIN_LEAF_SIZE,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GbtError {
    #[error("need at least {MIN_TRAINING_ROWS} training rows, got {0}")]
    TooFewRows(usize),
    #[error("{labels} labels for {rows} rows")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("shrinkage must lie in (0, 1], got {0}")]
    BadShrinkage(f64),
    #[error("row has {found} features, model expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    /// Prior log-odds of the positive class.
    pub base_score: f64,
    pub params: GbtParams,
    pub trees: Vec<RegressionTree>,
    pub column_names: Vec<String>,
    /// Set when training labels had a single class; the model is then the prior only.
    pub degenerate: bool,
}

/// Training output: the model plus the mean deviance before the first tree and after each tree.
#[derive(Debug, Clone)]
pub struct GbtFit {
    pub model: GbtModel,
    pub deviance: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(MIN_PROBABILITY, 1.0 - MIN_PROBABILITY)
}

/// Binomial deviance `log(1 + e^F) - y·F` for one row, computed stably.
fn row_deviance(score: f64, positive: bool) -> f64 {
    let softplus = if score > 0.0 {
        score + (-score).exp().ln_1p()
    } else {
        score.exp().ln_1p()
    };
    if positive {
        softplus - score
    } else {
        softplus
    }
}

pub fn mean_deviance(scores: &[f64], positive: &[bool]) -> f64 {
    scores
        .iter()
        .zip(positive)
        .map(|(&s, &y)| row_deviance(s, y))
        .sum::<f64>()
        / scores.len() as f64
}

fn log_odds(p: f64) -> f64 {
    let p = p.clamp(MIN_PROBABILITY, 1.0 - MIN_PROBABILITY);
    (p / (1.0 - p)).ln()
}

/// Trains `params.n_trees` trees sequentially. Deterministic: no row or column sampling.
pub fn train_gbt(x: &DenseMatrix, labels: &[Label], params: &GbtParams) -> Result<GbtFit, GbtError> {
    let n = x.n_rows();
    if labels.len() != n {
        return Err(GbtError::LabelMismatch { rows: n, labels: labels.len() });
    }
    if n < MIN_TRAINING_ROWS {
        return Err(GbtError::TooFewRows(n));
    }
    if !(params.shrinkage > 0.0 && params.shrinkage <= 1.0) {
        return Err(GbtError::BadShrinkage(params.shrinkage));
    }
    let positive: Vec<bool> = labels.iter().map(|l| l.is_positive()).collect();
    let n_pos = positive.iter().filter(|&&p| p).count();
    let base_score = log_odds(n_pos as f64 / n as f64);
    let column_names = (0..x.n_cols()).map(|c| format!("f{c}")).collect();
    let mut scores = vec![base_score; n];
    let mut deviance = vec![mean_deviance(&scores, &positive)];

    if n_pos == 0 || n_pos == n {
        return Ok(GbtFit {
            model: GbtModel {
                base_score,
                params: *params,
                trees: Vec::new(),
                column_names,
                degenerate: true,
            },
            deviance,
        });
    }

    let cols = SortedColumns::new(x);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf_size: params.min_leaf_size,
    };
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        for r in 0..n {
            let p = sigmoid(scores[r]);
            grad[r] = p - if positive[r] { 1.0 } else { 0.0 };
            hess[r] = (p * (1.0 - p)).max(f64::MIN_POSITIVE);
        }
        let mut tree = fit_tree_presorted(x, &cols, &grad, &hess, &tree_params)?;
        tree.scale_values(params.shrinkage);
        for (r, s) in scores.iter_mut().enumerate() {
            *s += tree.predict(x.row(r));
        }
        deviance.push(mean_deviance(&scores, &positive));
        trees.push(tree);
    }
    Ok(GbtFit {
        model: GbtModel {
            base_score,
            params: *params,
            trees,
            column_names,
            degenerate: false,
        },
        deviance,
    })
}

impl GbtModel {
    pub fn with_column_names(mut self, names: Vec<String>) -> Self {
        self.column_names = names;
        self
    }

    pub fn n_features(&self) -> usize {
        self.column_names.len()
    }

    /// Raw additive score using only the first `n_trees` trees.
    pub fn raw_score_prefix(&self, row: &[f64], n_trees: usize) -> f64 {
        self.trees
            .iter()
            .take(n_trees)
            .fold(self.base_score, |acc, t| acc + t.predict(row))
    }

    pub fn raw_score(&self, row: &[f64]) -> f64 {
        self.raw_score_prefix(row, self.trees.len())
    }

    /// The same model cut to its first `n_trees` trees; identical to training with
    /// `n_trees` since boosting is sequential and deterministic.
    pub fn truncated(&self, n_trees: usize) -> GbtModel {
        let mut m = self.clone();
        m.trees.truncate(n_trees);
        m.params.n_trees = m.trees.len();
        m
    }
}

pub fn predict_proba(model: &GbtModel, row: &[f64]) -> Result<f64, GbtError> {
    if row.len() != model.n_features() {
        return Err(GbtError::WidthMismatch {
            expected: model.n_features(),
            found: row.len(),
        });
    }
    Ok(sigmoid(model.raw_score(row)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ImportanceError {
    #[error("model contains no splits")]
    NoSplits,
}

/// Total split gain per feature over all trees, normalised to sum to one and
/// sorted descending (ties keep column order). Every column is listed.
pub fn feature_importance(model: &GbtModel) -> Result<Vec<FeatureImportance>, ImportanceError> {
    let mut totals = vec![0.0; model.n_features()];
    for s in model.trees.iter().flat_map(|t| t.splits()) {
        totals[s.feature] += s.gain;
    }
    let sum: f64 = totals.iter().sum();
    if sum.is_nan() || sum <= 0.0 {
        return Err(ImportanceError::NoSplits);
    }
    let mut order: Vec<usize> = (0..totals.len()).collect();
    order.sort_by(|&a, &b| totals[b].total_cmp(&totals[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .map(|c| FeatureImportance {
            feature: model.column_names[c].clone(),
            importance: totals[c] / sum,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize) -> (DenseMatrix, Vec<Label>) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n)
            .map(|i| if i >= n / 2 { Label::Positive } else { Label::Negative })
            .collect();
        (DenseMatrix::from_rows(&rows), labels)
    }

    #[test]
    fn zero_trees_predict_prior() {
        let (x, mut y) = separable(20);
        y[0] = Label::Positive; // 11 of 20 positive
        let fit = train_gbt(&x, &y, &GbtParams::new(1, 0)).unwrap();
        for r in 0..20 {
            let p = predict_proba(&fit.model, x.row(r)).unwrap();
            assert!((p - 0.55).abs() < 1e-12);
        }
    }

    #[test]
    fn balanced_labels_zero_base_score() {
        let (x, y) = separable(20);
        let fit = train_gbt(&x, &y, &GbtParams::new(1, 0)).unwrap();
        assert_eq!(fit.model.base_score, 0.0);
    }

    #[test]
    fn empty_model_predicts_half() {
        let m = GbtModel {
            base_score: 0.0,
            params: GbtParams::new(1, 0),
            trees: vec![],
            column_names: vec!["a".into()],
            degenerate: false,
        };
        assert_eq!(predict_proba(&m, &[3.0]).unwrap(), 0.5);
        assert_eq!(
            predict_proba(&m, &[1.0, 2.0]),
            Err(GbtError::WidthMismatch { expected: 1, found: 2 })
        );
    }

    #[test]
    fn separable_training_reduces_deviance() {
        let (x, y) = separable(40);
        let fit = train_gbt(&x, &y, &GbtParams::new(1, 50)).unwrap();
        assert_eq!(fit.model.trees.len(), 50);
        assert_eq!(fit.deviance.len(), 51);
        assert!(fit.deviance[50] < fit.deviance[0]);
        for w in fit.deviance.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(predict_proba(&fit.model, &[35.0]).unwrap() > 0.5);
        assert!(predict_proba(&fit.model, &[3.0]).unwrap() < 0.5);
    }

    #[test]
    fn single_class_is_degenerate() {
        let (x, _) = separable(12);
        let y = vec![Label::Negative; 12];
        let fit = train_gbt(&x, &y, &GbtParams::new(2, 10)).unwrap();
        assert!(fit.model.degenerate);
        assert!(fit.model.trees.is_empty());
        assert_eq!(feature_importance(&fit.model), Err(ImportanceError::NoSplits));
    }

    #[test]
    fn too_few_rows() {
        let (x, y) = separable(9);
        assert_eq!(train_gbt(&x, &y, &GbtParams::new(1, 1)).unwrap_err(), GbtError::TooFewRows(9));
    }

    #[test]
    fn prefix_equals_shorter_training() {
        let (x, y) = separable(30);
        let long = train_gbt(&x, &y, &GbtParams::new(2, 20)).unwrap().model;
        let short = train_gbt(&x, &y, &GbtParams::new(2, 7)).unwrap().model;
        assert_eq!(long.truncated(7), short);
    }

    #[test]
    fn importance_normalised_and_sorted() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![((i * 7) % 5) as f64, i as f64]).collect();
        let y: Vec<Label> = (0..40)
            .map(|i| if i >= 20 { Label::Positive } else { Label::Negative })
            .collect();
        let model = train_gbt(&DenseMatrix::from_rows(&rows), &y, &GbtParams::new(2, 10))
            .unwrap()
            .model
            .with_column_names(vec!["noise".into(), "signal".into()]);
        let imp = feature_importance(&model).unwrap();
        assert_eq!(imp[0].feature, "signal");
        let total: f64 = imp.iter().map(|i| i.importance).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deviance_matches_direct_formula() {
        for (s, y) in [(0.3_f64, true), (-2.0, false), (40.0, true), (-40.0, true)] {
            let p = 1.0 / (1.0 + (-s).exp());
            let direct = if y { -p.ln() } else { -(1.0 - p).ln() };
            assert!((row_deviance(s, y) - direct).abs() < 1e-9, "{s} {y}");
        }
    }
}
