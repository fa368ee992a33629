use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::Label;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FoldError {
    #[error("{n_folds} folds need at least {n_folds} rows of each class; the smaller class has {smallest}")]
    TooFewPerClass { n_folds: usize, smallest: usize },
    #[error("at least two folds are required")]
    TooFewFolds,
}

/// Fold index per row for stratified k-fold cross-validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub n_folds: usize,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&r| self.fold_of[r] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&r| self.fold_of[r] != fold).collect()
    }
}

/// Shuffles each class with a seeded generator and deals its rows round-robin
/// over the folds. The negative class continues the deal where the positive
/// class stopped so fold sizes stay within one row of each other.
pub fn stratified_kfold(labels: &[Label], n_folds: usize, seed: u64) -> Result<FoldAssignment, FoldError> {
    if n_folds < 2 {
        return Err(FoldError::TooFewFolds);
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_positive()).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i].is_positive()).collect();
    let smallest = pos.len().min(neg.len());
    if smallest < n_folds {
        return Err(FoldError::TooFewPerClass { n_folds, smallest });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold_of = vec![0; labels.len()];
    for (i, &r) in pos.iter().chain(neg.iter()).enumerate() {
        fold_of[r] = i % n_folds;
    }
    Ok(FoldAssignment { fold_of, n_folds, seed })
}
