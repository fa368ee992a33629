//! Brute-force oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asthma_risk::eval::auc;
use asthma_risk::ingest::Label;
use asthma_risk::model::{
    feature_importance, fit_tree, knn_fit, knn_predict_proba, predict_proba, train_gbt, DenseMatrix, GbtParams,
    RegressionTree, TreeParams, MIN_SPLIT_GAIN,
};
use asthma_risk::synth::{generate, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn label(positive: bool) -> Label {
    if positive {
        Label::Positive
    } else {
        Label::Negative
    }
}

// ---------------------------------------------------------------- AUC

/// Fraction of (positive, negative) pairs ordered correctly, ties counting one half.
pub fn auc_pairwise(scores: &[f64], labels: &[Label]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for (i, li) in labels.iter().enumerate() {
        if !li.is_positive() {
            continue;
        }
        for (j, lj) in labels.iter().enumerate() {
            if lj.is_positive() {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                num += 1.0;
            } else if scores[i] == scores[j] {
                num += 0.5;
            }
        }
    }
    num / pairs
}

/// `n_instances` random instances with n ≤ 500, both classes present, many ties.
pub fn check_auc_oracle(n_instances: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    for case in 0..n_instances {
        let n = r.gen_range(2..=500);
        let levels = if r.gen_bool(0.5) { r.gen_range(2..=10) } else { 1_000_000 };
        let rate = r.gen_range(0.1..0.9);
        let mut labels: Vec<Label> = (0..n).map(|_| label(r.gen_bool(rate))).collect();
        labels[0] = Label::Positive;
        labels[1] = Label::Negative;
        let scores: Vec<f64> = (0..n).map(|_| r.gen_range(0..levels) as f64 / levels as f64).collect();
        let got = auc(&scores, &labels).map_err(|e| format!("case {case}: {e}"))?;
        let want = auc_pairwise(&scores, &labels);
        if (got - want).abs() > 1e-12 {
            return Err(format!("case {case} (n = {n}): rank auc {got} vs pairwise {want}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- tree

#[derive(Debug, PartialEq)]
pub enum OracleNode {
    Leaf(f64),
    Split {
        value: f64,
        feature: usize,
        threshold: f64,
        missing_left: bool,
        gain: f64,
        left: Box<OracleNode>,
        right: Box<OracleNode>,
    },
}

fn sums(rows: &[usize], g: &[f64], h: &[f64]) -> (f64, f64) {
    rows.iter().fold((0.0, 0.0), |(sg, sh), &r| (sg + g[r], sh + h[r]))
}

/// Grows a tree by trying every (feature, threshold, missing side) at every node.
/// Candidates are visited by feature, then threshold, then missing-left first;
/// the first strictly best one wins.
pub fn oracle_tree(
    x: &DenseMatrix,
    g: &[f64],
    h: &[f64],
    rows: &[usize],
    depth_left: usize,
    min_leaf: usize,
) -> OracleNode {
    let (sg, sh) = sums(rows, g, h);
    let value = -sg / sh;
    if depth_left == 0 {
        return OracleNode::Leaf(value);
    }
    let parent = sg * sg / sh;
    let mut best: Option<(usize, f64, bool, f64)> = None;
    let mut best_gain = MIN_SPLIT_GAIN;
    for f in 0..x.n_cols() {
        let mut distinct: Vec<f64> = rows.iter().map(|&r| x.get(r, f)).filter(|v| !v.is_nan()).collect();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup_by(|a, b| a == b);
        let has_missing = rows.iter().any(|&r| x.get(r, f).is_nan());
        for w in distinct.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let sides: &[bool] = if has_missing { &[true, false] } else { &[true] };
            for &missing_left in sides {
                let goes_left = |r: usize| {
                    let v = x.get(r, f);
                    if v.is_nan() {
                        missing_left
                    } else {
                        v <= threshold
                    }
                };
                let l: Vec<usize> = rows.iter().copied().filter(|&r| goes_left(r)).collect();
                let rt: Vec<usize> = rows.iter().copied().filter(|&r| !goes_left(r)).collect();
                if l.len() < min_leaf || rt.len() < min_leaf {
                    continue;
                }
                let (lg, lh) = sums(&l, g, h);
                let (rg, rh) = sums(&rt, g, h);
                let gain = lg * lg / lh + rg * rg / rh - parent;
                if gain > best_gain {
                    best_gain = gain;
                    best = Some((f, threshold, missing_left, gain));
                }
            }
        }
    }
    match best {
        None => OracleNode::Leaf(value),
        Some((feature, threshold, missing_left, gain)) => {
            let goes_left = |r: &usize| {
                let v = x.get(*r, feature);
                if v.is_nan() {
                    missing_left
                } else {
                    v <= threshold
                }
            };
            let l: Vec<usize> = rows.iter().copied().filter(goes_left).collect();
            let rt: Vec<usize> = rows.iter().copied().filter(|r| !goes_left(r)).collect();
            OracleNode::Split {
                value,
                feature,
                threshold,
                missing_left,
                gain,
                left: Box::new(oracle_tree(x, g, h, &l, depth_left - 1, min_leaf)),
                right: Box::new(oracle_tree(x, g, h, &rt, depth_left - 1, min_leaf)),
            }
        }
    }
}

fn same_tree(t: &RegressionTree, i: usize, o: &OracleNode) -> bool {
    let n = &t.nodes[i];
    match (n.split, o) {
        (None, OracleNode::Leaf(v)) => n.value == *v,
        (
            Some(s),
            OracleNode::Split {
                value,
                feature,
                threshold,
                missing_left,
                gain,
                left,
                right,
            },
        ) => {
            n.value == *value
                && s.feature == *feature
                && s.threshold == *threshold
                && s.missing_left == *missing_left
                && s.gain == *gain
                && same_tree(t, s.left, left)
                && same_tree(t, s.right, right)
        }
        _ => false,
    }
}

/// Random instances with ≤ 6 rows and ≤ 3 features. Gradients, hessians and
/// feature values are multiples of 1/4 or 1/2, so every sum is exact and the
/// comparison can be bitwise.
pub fn check_tree_oracle(n_instances: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    for case in 0..n_instances {
        let n = r.gen_range(1..=6);
        let d = r.gen_range(1..=3);
        let data: Vec<f64> = (0..n * d)
            .map(|_| {
                if r.gen_bool(0.15) {
                    f64::NAN
                } else {
                    r.gen_range(-3..=3) as f64 * 0.5
                }
            })
            .collect();
        let x = DenseMatrix::from_vec(n, d, data);
        let g: Vec<f64> = (0..n).map(|_| r.gen_range(-8..=8) as f64 * 0.25).collect();
        let h: Vec<f64> = (0..n).map(|_| r.gen_range(1..=8) as f64 * 0.25).collect();
        let params = TreeParams {
            max_depth: r.gen_range(1..=3),
            min_leaf_size: if r.gen_bool(0.8) { 1 } else { 2 },
        };
        let tree = fit_tree(&x, &g, &h, &params).map_err(|e| format!("case {case}: {e}"))?;
        let rows: Vec<usize> = (0..n).collect();
        let want = oracle_tree(&x, &g, &h, &rows, params.max_depth, params.min_leaf_size);
        if !same_tree(&tree, 0, &want) {
            return Err(format!("case {case}: tree {:?} differs from oracle {want:?}", tree.nodes));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- KNN

/// Z-scores with population deviations, computes every distance and sorts
/// them all by (distance, training index).
pub fn knn_oracle(x: &DenseMatrix, positive: &[bool], k: usize, query: &[f64]) -> f64 {
    let (n, d) = (x.n_rows(), x.n_cols());
    let mut mean = vec![0.0; d];
    let mut sd = vec![0.0; d];
    for c in 0..d {
        let mut s = 0.0;
        for r in 0..n {
            s += x.get(r, c);
        }
        mean[c] = s / n as f64;
        let mut v = 0.0;
        for r in 0..n {
            v += (x.get(r, c) - mean[c]) * (x.get(r, c) - mean[c]);
        }
        let s = (v / n as f64).sqrt();
        sd[c] = if s > 0.0 { s } else { 1.0 };
    }
    let mut dist: Vec<(f64, usize)> = (0..n)
        .map(|r| {
            let mut acc = 0.0;
            for c in 0..d {
                let a = (x.get(r, c) - mean[c]) / sd[c];
                let b = (query[c] - mean[c]) / sd[c];
                acc += (a - b) * (a - b);
            }
            (acc, r)
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    dist[..k].iter().filter(|(_, r)| positive[*r]).count() as f64 / k as f64
}

pub fn check_knn_oracle(n_instances: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    for case in 0..n_instances {
        let n = r.gen_range(1..=40);
        let d = r.gen_range(1..=5);
        // small integer grid: many equal distances
        let continuous = r.gen_bool(0.3);
        let draw = |r: &mut ChaCha8Rng| {
            if continuous {
                r.gen_range(-10.0..10.0)
            } else {
                r.gen_range(0..4) as f64
            }
        };
        let data: Vec<f64> = (0..n * d).map(|_| draw(&mut r)).collect();
        let x = DenseMatrix::from_vec(n, d, data);
        let positive: Vec<bool> = (0..n).map(|_| r.gen_bool(0.5)).collect();
        let labels: Vec<Label> = positive.iter().map(|&p| label(p)).collect();
        let k = r.gen_range(1..=n);
        let model = knn_fit(&x, &labels, k).map_err(|e| format!("case {case}: {e}"))?;
        for q in 0..5 {
            let query: Vec<f64> = if q == 0 {
                x.row(r.gen_range(0..n)).to_vec()
            } else {
                (0..d).map(|_| draw(&mut r)).collect()
            };
            let got = knn_predict_proba(&model, &query).map_err(|e| format!("case {case}: {e}"))?;
            let want = knn_oracle(&x, &positive, k, &query);
            if got != want {
                return Err(format!("case {case} query {q}: knn {got} vs oracle {want}"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- GBT

/// Logistic data with a few informative columns and some missing cells.
pub fn logistic_data(r: &mut ChaCha8Rng, n: usize, d: usize) -> (DenseMatrix, Vec<Label>) {
    let beta: Vec<f64> = (0..d).map(|j| if j < 3 { r.gen_range(-2.0..2.0) } else { 0.0 }).collect();
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| (r.gen_range(-20..20) as f64) / 4.0).collect();
        let z: f64 = row.iter().zip(&beta).map(|(v, b)| v * b).sum::<f64>() / 4.0;
        labels.push(label(r.gen_bool(1.0 / (1.0 + (-z).exp()))));
        data.extend(row.into_iter().map(|v| if r.gen_bool(0.05) { f64::NAN } else { v }));
    }
    (DenseMatrix::from_vec(n, d, data), labels)
}

/// Training deviance never rises by more than 1e-12 from one tree to the next.
pub fn check_deviance_non_increasing(datasets: &[(DenseMatrix, Vec<Label>)]) -> Result<(), String> {
    for (i, (x, y)) in datasets.iter().enumerate() {
        for depth in 1..=3 {
            let fit = train_gbt(x, y, &GbtParams::new(depth, 60)).map_err(|e| format!("dataset {i}: {e}"))?;
            for (t, w) in fit.deviance.windows(2).enumerate() {
                if w[1] > w[0] + 1e-12 {
                    return Err(format!("dataset {i} depth {depth}: deviance rose at tree {} ({} -> {})", t + 1, w[0], w[1]));
                }
            }
        }
    }
    Ok(())
}

pub fn check_importance_sums(datasets: &[(DenseMatrix, Vec<Label>)]) -> Result<(), String> {
    for (i, (x, y)) in datasets.iter().enumerate() {
        let fit = train_gbt(x, y, &GbtParams::new(2, 40)).map_err(|e| format!("dataset {i}: {e}"))?;
        let imp = feature_importance(&fit.model).map_err(|e| format!("dataset {i}: {e}"))?;
        let total: f64 = imp.iter().map(|f| f.importance).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(format!("dataset {i}: importances sum to {total}"));
        }
        if imp.len() != x.n_cols() || imp.iter().any(|f| f.importance < 0.0) {
            return Err(format!("dataset {i}: bad importance list"));
        }
    }
    Ok(())
}

type Transform = (&'static str, fn(f64) -> f64);

const TRANSFORMS: [Transform; 5] = [
    ("exp", |v| (v / 4.0).exp()),
    ("cube", |v| v * v * v),
    ("affine", |v| 3.0 * v - 7.0),
    ("log", |v| (v + 100.0).ln()),
    ("squash", |v| v / (1.0 + v.abs())),
];

/// Strictly increasing transforms of one column leave every training row in the
/// same leaves and every predicted probability bitwise equal.
pub fn check_monotone_invariance(n_cases: usize, seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    for case in 0..n_cases {
        let (n, d) = (r.gen_range(40..=150), r.gen_range(1..=5));
        let (x, y) = logistic_data(&mut r, n, d);
        let col = r.gen_range(0..x.n_cols());
        let (name, tf) = TRANSFORMS[r.gen_range(0..TRANSFORMS.len())];
        let mut xt = x.clone();
        for row in 0..x.n_rows() {
            xt.set(row, col, tf(x.get(row, col)));
        }
        let params = GbtParams::new(r.gen_range(1..=3), r.gen_range(5..=30));
        let a = train_gbt(&x, &y, &params).map_err(|e| format!("case {case}: {e}"))?.model;
        let b = train_gbt(&xt, &y, &params).map_err(|e| format!("case {case}: {e}"))?.model;
        for row in 0..x.n_rows() {
            for (ta, tb) in a.trees.iter().zip(&b.trees) {
                if ta.leaf_index(x.row(row)) != tb.leaf_index(xt.row(row)) {
                    return Err(format!("case {case} ({name} on column {col}): row {row} changed leaf"));
                }
            }
            let pa = predict_proba(&a, x.row(row)).map_err(|e| e.to_string())?;
            let pb = predict_proba(&b, xt.row(row)).map_err(|e| e.to_string())?;
            if pa.to_bits() != pb.to_bits() {
                return Err(format!("case {case} ({name} on column {col}): row {row} {pa} vs {pb}"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- CLI fixtures

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_asthma-risk")
}

pub fn run_cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

/// Small synthetic corpus: a few hundred people over one year.
pub fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        n_people: 400,
        n_counties: 8,
        n_stations: 16,
        years: 2001..=2001,
        seed,
        ..SynthSpec::default()
    }
}

/// Writes data under `dir/data` and a run config `dir/run.cfg` pointing at it.
pub fn write_corpus(dir: &Path, spec: &SynthSpec, extra_config: &str) -> PathBuf {
    generate(spec, &dir.join("data")).expect("synthetic data");
    let years = format!("{}-{}", spec.years.start(), spec.years.end());
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, format!("data_dir = data\nseed = 42\nyears = {years}\n{extra_config}")).unwrap();
    cfg
}
