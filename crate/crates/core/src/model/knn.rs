use std::cmp::Ordering;

use thiserror::Error;

use super::DenseMatrix;
use crate::ingest::Label;

#[derive(Debug, Error, PartialEq)]
pub enum KnnError {
    #[error("K must be at least 1")]
    ZeroK,
    #[error("K = {k} exceeds the {n_train} training rows")]
    KTooLarge { k: usize, n_train: usize },
    #[error("{labels} labels for {rows} rows")]
    LabelMismatch { rows: usize, labels: usize },
    #[error("row has {found} features, model expects {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("input contains a missing or non-finite value")]
    NonFiniteInput,
    #[error("classifier used before fit")]
    NotFitted,
}

/// Fitted nearest-neighbour classifier over z-scored columns.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub k: usize,
    pub means: Vec<f64>,
    /// Population standard deviations; constant columns use 1.
    pub stds: Vec<f64>,
    train: DenseMatrix,
    positive: Vec<bool>,
}

fn column_stats(x: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.n_rows() as f64;
    let mut means = vec![0.0; x.n_cols()];
    for row in x.rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut vars = vec![0.0; x.n_cols()];
    for row in x.rows() {
        for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stds = vars
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (means, stds)
}

pub fn knn_fit(x: &DenseMatrix, labels: &[Label], k: usize) -> Result<KnnModel, KnnError> {
    if k == 0 {
        return Err(KnnError::ZeroK);
    }
    if labels.len() != x.n_rows() {
        return Err(KnnError::LabelMismatch {
            rows: x.n_rows(),
            labels: labels.len(),
        });
    }
    if k > x.n_rows() {
        return Err(KnnError::KTooLarge { k, n_train: x.n_rows() });
    }
    if x.rows().any(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(KnnError::NonFiniteInput);
    }
    let (means, stds) = column_stats(x);
    let mut train = x.clone();
    for r in 0..train.n_rows() {
        for c in 0..train.n_cols() {
            train.set(r, c, (x.get(r, c) - means[c]) / stds[c]);
        }
    }
    Ok(KnnModel {
        k,
        means,
        stds,
        train,
        positive: labels.iter().map(|l| l.is_positive()).collect(),
    })
}

impl KnnModel {
    pub fn n_train(&self) -> usize {
        self.train.n_rows()
    }

    /// Labels of the `k` nearest training rows, nearest first; equal distances
    /// keep training-row order.
    pub fn nearest_labels(&self, row: &[f64], k: usize) -> Result<Vec<bool>, KnnError> {
        if row.len() != self.means.len() {
            return Err(KnnError::WidthMismatch {
                expected: self.means.len(),
                found: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(KnnError::NonFiniteInput);
        }
        let k = k.min(self.n_train());
        if k == 0 {
            return Ok(Vec::new());
        }
        let z: Vec<f64> = row
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let mut dist: Vec<(f64, u32)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, t)| {
                let d: f64 = t.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i as u32)
            })
            .collect();
        let cmp = |a: &(f64, u32), b: &(f64, u32)| -> Ordering { a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)) };
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
            dist.truncate(k);
        }
        dist.sort_unstable_by(cmp);
        Ok(dist.into_iter().map(|(_, i)| self.positive[i as usize]).collect())
    }
}

/// Fraction of positive labels among the `K` nearest training rows.
pub fn knn_predict_proba(model: &KnnModel, row: &[f64]) -> Result<f64, KnnError> {
    let near = model.nearest_labels(row, model.k)?;
    Ok(near.iter().filter(|&&p| p).count() as f64 / model.k as f64)
}

/// Stateful wrapper for callers that configure `K` before data is available.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    k: usize,
    fitted: Option<KnnModel>,
}

impl KnnClassifier {
    pub fn new(k: usize) -> Self {
        KnnClassifier { k, fitted: None }
    }

    pub fn fit(&mut self, x: &DenseMatrix, labels: &[Label]) -> Result<(), KnnError> {
        self.fitted = Some(knn_fit(x, labels, self.k)?);
        Ok(())
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<f64, KnnError> {
        knn_predict_proba(self.fitted.as_ref().ok_or(KnnError::NotFitted)?, row)
    }
}
