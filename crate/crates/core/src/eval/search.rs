//! Cross-validated hyperparameter selection for the GBT and KNN models.

use rayon::prelude::*;
use serde::Serialize;

use super::folds::stratified_kfold;
use super::metrics::auc;
use super::EvalError;
use crate::ingest::Label;
use crate::model::{knn_fit, sigmoid, train_gbt, DenseMatrix, GbtParams};

pub const DEFAULT_GBT_DEPTHS: [usize; 3] = [1, 2, 3];
pub const DEFAULT_GBT_TREES: [usize; 3] = [50, 100, 150];
pub const DEFAULT_KNN_GRID: [usize; 7] = [1, 3, 5, 7, 9, 15, 25];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GbtGrid {
    pub depths: Vec<usize>,
    pub n_trees: Vec<usize>,
}

impl Default for GbtGrid {
    fn default() -> Self {
        GbtGrid {
            depths: DEFAULT_GBT_DEPTHS.to_vec(),
            n_trees: DEFAULT_GBT_TREES.to_vec(),
        }
    }
}

/// Cross-validation outcome of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult<P> {
    pub params: P,
    pub fold_aucs: Vec<f64>,
    /// `None` when the cell failed on some fold.
    pub mean_auc: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult<P> {
    pub best: P,
    pub best_auc: f64,
    pub cells: Vec<CellResult<P>>,
    /// Number of (cell, fold) validations performed.
    pub fold_evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GbtCell {
    pub max_depth: usize,
    pub n_trees: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// First cell (in the given order) with the highest mean AUC.
fn pick_best<P: Copy>(cells: &[CellResult<P>]) -> Result<(P, f64), EvalError> {
    let mut best: Option<(P, f64)> = None;
    for c in cells {
        if let Some(m) = c.mean_auc {
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((c.params, m));
            }
        }
    }
    best.ok_or(EvalError::AllCellsFailed)
}

/// Mean validation AUC for every (depth, n_trees) cell over stratified folds.
///
/// For each depth and fold a single ensemble with the largest tree count is
/// trained; smaller tree counts are evaluated on its prefixes, which equal the
/// ensembles a separate training would produce. Ties go to the smaller depth,
/// then the fewer trees.
pub fn grid_search_gbt(
    x: &DenseMatrix,
    labels: &[Label],
    grid: &GbtGrid,
    n_folds: usize,
    seed: u64,
) -> Result<SearchResult<GbtCell>, EvalError> {
    let mut depths = grid.depths.clone();
    depths.sort_unstable();
    depths.dedup();
    let mut trees = grid.n_trees.clone();
    trees.sort_unstable();
    trees.dedup();
    if depths.is_empty() || trees.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let max_trees = *trees.last().expect("non-empty");
    let folds = stratified_kfold(labels, n_folds, seed)?;

    let jobs: Vec<(usize, usize)> = depths
        .iter()
        .flat_map(|&d| (0..n_folds).map(move |f| (d, f)))
        .collect();
    // per job: AUC at each tree count, or the failure message
    let outcomes: Vec<Result<Vec<f64>, String>> = jobs
        .par_iter()
        .map(|&(depth, fold)| {
            let train = folds.train_rows(fold);
            let test = folds.test_rows(fold);
            let xt = x.select_rows(&train);
            let yt: Vec<Label> = train.iter().map(|&r| labels[r]).collect();
            let yv: Vec<Label> = test.iter().map(|&r| labels[r]).collect();
            let model = train_gbt(&xt, &yt, &GbtParams::new(depth, max_trees))
                .map_err(|e| e.to_string())?
                .model;
            let mut raw: Vec<f64> = vec![model.base_score; test.len()];
            let mut aucs = Vec::with_capacity(trees.len());
            let mut next = 0;
            for m in 0..=model.trees.len() {
                while next < trees.len() && trees[next] == m {
                    let p: Vec<f64> = raw.iter().map(|&s| sigmoid(s)).collect();
                    aucs.push(auc(&p, &yv).map_err(|e| e.to_string())?);
                    next += 1;
                }
                if m < model.trees.len() {
                    for (s, &r) in raw.iter_mut().zip(&test) {
                        *s += model.trees[m].predict(x.row(r));
                    }
                }
            }
            if aucs.len() < trees.len() {
                return Err("ensemble shorter than requested tree count".to_string());
            }
            Ok(aucs)
        })
        .collect();

    let mut cells = Vec::new();
    for (di, &depth) in depths.iter().enumerate() {
        let per_fold = &outcomes[di * n_folds..(di + 1) * n_folds];
        for (ti, &n_trees) in trees.iter().enumerate() {
            let failure = per_fold.iter().find_map(|o| o.as_ref().err().cloned());
            let fold_aucs: Vec<f64> = per_fold.iter().filter_map(|o| o.as_ref().ok().map(|a| a[ti])).collect();
            cells.push(CellResult {
                params: GbtCell { max_depth: depth, n_trees },
                mean_auc: failure.is_none().then(|| mean(&fold_aucs)),
                fold_aucs,
                failure,
            });
        }
    }
    let (best, best_auc) = pick_best(&cells)?;
    Ok(SearchResult {
        best,
        best_auc,
        fold_evaluations: cells.len() * n_folds,
        cells,
    })
}

/// Mean validation AUC for each candidate `K`; ties go to the smaller `K`.
///
/// Each fold computes the neighbour ordering once for the largest feasible
/// `K` and scores every candidate from its prefix.
pub fn grid_search_knn(
    x: &DenseMatrix,
    labels: &[Label],
    ks: &[usize],
    n_folds: usize,
    seed: u64,
) -> Result<SearchResult<usize>, EvalError> {
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let folds = stratified_kfold(labels, n_folds, seed)?;
    let per_fold: Vec<Result<Vec<Option<f64>>, String>> = (0..n_folds)
        .into_par_iter()
        .map(|fold| {
            let train = folds.train_rows(fold);
            let test = folds.test_rows(fold);
            let xt = x.select_rows(&train);
            let yt: Vec<Label> = train.iter().map(|&r| labels[r]).collect();
            let yv: Vec<Label> = test.iter().map(|&r| labels[r]).collect();
            let k_max = ks.iter().copied().filter(|&k| k >= 1 && k <= train.len()).max();
            let Some(k_max) = k_max else {
                return Ok(vec![None; ks.len()]);
            };
            let model = knn_fit(&xt, &yt, k_max).map_err(|e| e.to_string())?;
            let mut near = Vec::with_capacity(test.len());
            for &r in &test {
                near.push(model.nearest_labels(x.row(r), k_max).map_err(|e| e.to_string())?);
            }
            ks.iter()
                .map(|&k| {
                    if k == 0 || k > train.len() {
                        return Ok(None);
                    }
                    let p: Vec<f64> = near
                        .iter()
                        .map(|n| n[..k].iter().filter(|&&b| b).count() as f64 / k as f64)
                        .collect();
                    auc(&p, &yv).map(Some).map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    let mut cells = Vec::new();
    for (ki, &k) in ks.iter().enumerate() {
        let mut failure = None;
        let mut fold_aucs = Vec::new();
        for o in &per_fold {
            match o {
                Ok(v) => match v[ki] {
                    Some(a) => fold_aucs.push(a),
                    None => failure = Some(format!("K = {k} exceeds the training fold size")),
                },
                Err(e) => failure = Some(e.clone()),
            }
        }
        cells.push(CellResult {
            params: k,
            mean_auc: failure.is_none().then(|| mean(&fold_aucs)),
            fold_aucs,
            failure,
        });
    }
    let (best, best_auc) = pick_best(&cells)?;
    Ok(SearchResult {
        best,
        best_auc,
        fold_evaluations: cells.len() * n_folds,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{knn_predict_proba, GbtModel};

    fn noisy_line(n: usize) -> (DenseMatrix, Vec<Label>) {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| vec![i as f64, ((i * 37) % 11) as f64])
            .collect();
        let y = (0..n)
            .map(|i| {
                let flip = (i * 7919) % 10 == 0;
                if (i >= n / 2) ^ flip {
                    Label::Positive
                } else {
                    Label::Negative
                }
            })
            .collect();
        (DenseMatrix::from_rows(&rows), y)
    }

    #[test]
    fn gbt_grid_counts_and_argmax() {
        let (x, y) = noisy_line(80);
        let r = grid_search_gbt(&x, &y, &GbtGrid::default(), 5, 4).unwrap();
        assert_eq!(r.cells.len(), 9);
        assert_eq!(r.fold_evaluations, 45);
        for c in &r.cells {
            assert!(r.best_auc >= c.mean_auc.unwrap() - 1e-12);
        }
    }

    #[test]
    fn gbt_prefix_matches_direct_training() {
        let (x, y) = noisy_line(60);
        let grid = GbtGrid {
            depths: vec![2],
            n_trees: vec![3, 8],
        };
        let r = grid_search_gbt(&x, &y, &grid, 5, 11).unwrap();
        let folds = stratified_kfold(&y, 5, 11).unwrap();
        let train = folds.train_rows(0);
        let test = folds.test_rows(0);
        let yt: Vec<Label> = train.iter().map(|&r| y[r]).collect();
        let model: GbtModel = train_gbt(&x.select_rows(&train), &yt, &GbtParams::new(2, 3)).unwrap().model;
        let p: Vec<f64> = test.iter().map(|&r| sigmoid(model.raw_score(x.row(r)))).collect();
        let yv: Vec<Label> = test.iter().map(|&r| y[r]).collect();
        assert_eq!(r.cells[0].fold_aucs[0], auc(&p, &yv).unwrap());
    }

    #[test]
    fn all_tied_cells_pick_smallest() {
        // constant features: every model predicts the prior, AUC 0.5 everywhere
        let x = DenseMatrix::from_vec(20, 1, vec![1.0; 20]);
        let y: Vec<Label> = (0..20).map(|i| if i % 2 == 0 { Label::Positive } else { Label::Negative }).collect();
        let r = grid_search_gbt(&x, &y, &GbtGrid::default(), 5, 0).unwrap();
        assert_eq!(r.best, GbtCell { max_depth: 1, n_trees: 50 });
        let k = grid_search_knn(&x, &y, &[5, 3], 5, 0).unwrap();
        assert_eq!(k.best, 3);
    }

    #[test]
    fn knn_singleton_grid() {
        let (x, y) = noisy_line(40);
        assert_eq!(grid_search_knn(&x, &y, &[5], 5, 1).unwrap().best, 5);
    }

    #[test]
    fn knn_prefix_scores_match_direct_fit() {
        let (x, y) = noisy_line(50);
        let r = grid_search_knn(&x, &y, &[1, 3, 7], 5, 2).unwrap();
        let folds = stratified_kfold(&y, 5, 2).unwrap();
        let train = folds.train_rows(3);
        let test = folds.test_rows(3);
        let yt: Vec<Label> = train.iter().map(|&r| y[r]).collect();
        let m = knn_fit(&x.select_rows(&train), &yt, 3).unwrap();
        let p: Vec<f64> = test.iter().map(|&r| knn_predict_proba(&m, x.row(r)).unwrap()).collect();
        let yv: Vec<Label> = test.iter().map(|&r| y[r]).collect();
        assert_eq!(r.cells[1].fold_aucs[3], auc(&p, &yv).unwrap());
    }

    #[test]
    fn knn_memorises_training_set() {
        let (x, y) = noisy_line(30);
        let m = knn_fit(&x, &y, 1).unwrap();
        let p: Vec<f64> = x.rows().map(|r| knn_predict_proba(&m, r).unwrap()).collect();
        assert_eq!(auc(&p, &y).unwrap(), 1.0);
    }

    #[test]
    fn oversized_k_cell_fails() {
        let (x, y) = noisy_line(20);
        let r = grid_search_knn(&x, &y, &[1, 500], 5, 0).unwrap();
        assert!(r.cells[1].failure.is_some());
        assert_eq!(r.best, 1);
        assert!(matches!(grid_search_knn(&x, &y, &[500], 5, 0), Err(EvalError::AllCellsFailed)));
    }
}
