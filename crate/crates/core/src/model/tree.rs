//! Second-order regression tree grown level by level with exact greedy split
//! search over presorted feature columns.

use thiserror::Error;

use super::DenseMatrix;

/// Splits must improve the objective by more than this to be accepted.
pub const MIN_SPLIT_GAIN: f64 = 1e-12;
pub const DEFAULT_MIN_LEAF_SIZE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf_size: usize,
}

impl TreeParams {
    pub fn new(max_depth: usize) -> Self {
        TreeParams {
            max_depth,
            min_leaf_size: DEFAULT_MIN_LEAF_SIZE,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("cannot fit a tree on zero rows")]
    EmptyInput,
    #[error("expected {expected} gradient/hessian values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("hessian at row {row} is {value}; hessians must be positive and finite")]
    NonPositiveHessian { row: usize, value: f64 },
    #[error("gradient at row {row} is not finite")]
    NonFiniteGradient { row: usize },
    #[error("min_leaf_size must be at least 1")]
    ZeroMinLeaf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    /// Rows with `value <= threshold` go left.
    pub threshold: f64,
    pub missing_left: bool,
    /// Objective reduction `G_L²/H_L + G_R²/H_R − G²/H`.
    pub gain: f64,
    pub left: usize,
    pub right: usize,
}

/// Tree node. Every node carries its Newton value `−G/H`; only leaves use it
/// for prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub value: f64,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        while let Some(s) = self.nodes[i].split {
            let v = row[s.feature];
            let go_left = if v.is_nan() { s.missing_left } else { v <= s.threshold };
            i = if go_left { s.left } else { s.right };
        }
        i
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.nodes[self.leaf_index(row)].value
    }

    pub fn splits(&self) -> impl Iterator<Item = &Split> {
        self.nodes.iter().filter_map(|n| n.split.as_ref())
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &RegressionTree, i: usize) -> usize {
            match t.nodes[i].split {
                Some(s) => 1 + walk(t, s.left).max(walk(t, s.right)),
                None => 0,
            }
        }
        walk(self, 0)
    }

    pub fn scale_values(&mut self, factor: f64) {
        for n in &mut self.nodes {
            n.value *= factor;
        }
    }
}

/// Split threshold between two consecutive distinct values `lo < hi`: their
/// midpoint, or `lo` when the midpoint is not representable strictly below `hi`.
pub fn split_threshold(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) * 0.5;
    if m >= lo && m < hi {
        m
    } else {
        lo
    }
}

/// Per-feature row order, computed once per training matrix.
#[derive(Debug, Clone)]
pub struct SortedColumns {
    /// Non-missing rows of each feature sorted by (value, row).
    sorted: Vec<Vec<u32>>,
    /// Values matching `sorted`, kept contiguous for the split scan.
    values: Vec<Vec<f64>>,
    missing: Vec<Vec<u32>>,
}

impl SortedColumns {
    pub fn new(x: &DenseMatrix) -> Self {
        let mut sorted = Vec::with_capacity(x.n_cols());
        let mut values = Vec::with_capacity(x.n_cols());
        let mut missing = Vec::with_capacity(x.n_cols());
        for c in 0..x.n_cols() {
            let (mut present, absent): (Vec<u32>, Vec<u32>) =
                (0..x.n_rows() as u32).partition(|&r| !x.get(r as usize, c).is_nan());
            present.sort_by(|&a, &b| {
                x.get(a as usize, c)
                    .total_cmp(&x.get(b as usize, c))
                    .then(a.cmp(&b))
            });
            values.push(present.iter().map(|&r| x.get(r as usize, c)).collect());
            sorted.push(present);
            missing.push(absent);
        }
        SortedColumns {
            sorted,
            values,
            missing,
        }
    }
}

/// Fits one tree to gradients and hessians of the loss at the current scores.
pub fn fit_tree(
    x: &DenseMatrix,
    gradients: &[f64],
    hessians: &[f64],
    params: &TreeParams,
) -> Result<RegressionTree, TreeError> {
    let cols = SortedColumns::new(x);
    fit_tree_presorted(x, &cols, gradients, hessians, params)
}

#[derive(Clone, Copy)]
struct Sums {
    g: f64,
    h: f64,
    n: usize,
}

const EMPTY: Sums = Sums { g: 0.0, h: 0.0, n: 0 };

impl Sums {
    fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.n += 1;
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    missing_left: bool,
    gain: f64,
}

fn split_gain(parent: Sums, left: Sums, params: &TreeParams) -> Option<f64> {
    let right = Sums {
        g: parent.g - left.g,
        h: parent.h - left.h,
        n: parent.n - left.n,
    };
    if left.n < params.min_leaf_size || right.n < params.min_leaf_size || left.h <= 0.0 || right.h <= 0.0 {
        return None;
    }
    Some(left.g * left.g / left.h + right.g * right.g / right.h - parent.g * parent.g / parent.h)
}

const CLOSED: u32 = u32::MAX;

pub fn fit_tree_presorted(
    x: &DenseMatrix,
    cols: &SortedColumns,
    gradients: &[f64],
    hessians: &[f64],
    params: &TreeParams,
) -> Result<RegressionTree, TreeError> {
    let n = x.n_rows();
    if n == 0 {
        return Err(TreeError::EmptyInput);
    }
    if params.min_leaf_size == 0 {
        return Err(TreeError::ZeroMinLeaf);
    }
    for len in [gradients.len(), hessians.len()] {
        if len != n {
            return Err(TreeError::LengthMismatch { expected: n, found: len });
        }
    }
    for (row, (&g, &h)) in gradients.iter().zip(hessians).enumerate() {
        if !g.is_finite() {
            return Err(TreeError::NonFiniteGradient { row });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(TreeError::NonPositiveHessian { row, value: h });
        }
    }

    let mut root = EMPTY;
    for r in 0..n {
        root.add(gradients[r], hessians[r]);
    }
    let mut nodes = vec![Node {
        value: -root.g / root.h,
        split: None,
    }];
    let mut sums = vec![root];
    // node id each row currently sits in
    let mut node_of = vec![0u32; n];
    let mut open: Vec<usize> = vec![0];
    let mut depth = 0;

    while depth < params.max_depth && !open.is_empty() {
        let mut slot_of = vec![CLOSED; nodes.len()];
        for (s, &id) in open.iter().enumerate() {
            slot_of[id] = s as u32;
        }
        let row_slot: Vec<u32> = node_of.iter().map(|&id| slot_of[id as usize]).collect();
        let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
        let mut best_gain = vec![MIN_SPLIT_GAIN; open.len()];
        let mut left = vec![EMPTY; open.len()];
        let mut miss = vec![EMPTY; open.len()];
        let mut last: Vec<Option<f64>> = vec![None; open.len()];

        for f in 0..x.n_cols() {
            left.fill(EMPTY);
            miss.fill(EMPTY);
            last.fill(None);
            for &r in &cols.missing[f] {
                let s = row_slot[r as usize];
                if s != CLOSED {
                    miss[s as usize].add(gradients[r as usize], hessians[r as usize]);
                }
            }
            for (&r, &v) in cols.sorted[f].iter().zip(&cols.values[f]) {
                let r = r as usize;
                let s = row_slot[r];
                if s == CLOSED {
                    continue;
                }
                let s = s as usize;
                if let Some(lv) = last[s] {
                    if v > lv {
                        let parent = sums[open[s]];
                        let threshold = split_threshold(lv, v);
                        let mut consider = |l: Sums, missing_left: bool| {
                            if let Some(gain) = split_gain(parent, l, params) {
                                if gain > best_gain[s] {
                                    best_gain[s] = gain;
                                    best[s] = Some(Candidate {
                                        feature: f,
                                        threshold,
                                        missing_left,
                                        gain,
                                    });
                                }
                            }
                        };
                        let m = miss[s];
                        consider(
                            Sums {
                                g: left[s].g + m.g,
                                h: left[s].h + m.h,
                                n: left[s].n + m.n,
                            },
                            true,
                        );
                        if m.n > 0 {
                            consider(left[s], false);
                        }
                    }
                }
                left[s].add(gradients[r], hessians[r]);
                last[s] = Some(v);
            }
        }

        let mut next_open = Vec::new();
        let mut child_of = vec![(CLOSED, CLOSED); open.len()];
        for (s, cand) in best.iter().enumerate() {
            if let Some(c) = cand {
                let l = nodes.len();
                nodes.push(Node { value: 0.0, split: None });
                nodes.push(Node { value: 0.0, split: None });
                sums.push(EMPTY);
                sums.push(EMPTY);
                nodes[open[s]].split = Some(Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    missing_left: c.missing_left,
                    gain: c.gain,
                    left: l,
                    right: l + 1,
                });
                child_of[s] = (l as u32, l as u32 + 1);
                next_open.push(l);
                next_open.push(l + 1);
            }
        }
        for r in 0..n {
            let s = row_slot[r];
            if s == CLOSED {
                continue;
            }
            let s = s as usize;
            let (l, rt) = child_of[s];
            if l == CLOSED {
                continue;
            }
            let split = nodes[open[s]].split.expect("split recorded");
            let v = x.get(r, split.feature);
            let go_left = if v.is_nan() { split.missing_left } else { v <= split.threshold };
            let child = if go_left { l } else { rt };
            node_of[r] = child;
            sums[child as usize].add(gradients[r], hessians[r]);
        }
        for &id in &next_open {
            nodes[id].value = -sums[id].g / sums[id].h;
        }
        open = next_open;
        depth += 1;
    }
    Ok(RegressionTree { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            min_leaf_size: 1,
        }
    }

    #[test]
    fn separable_stump_splits_in_the_middle() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        // targets -1,-1,+1,+1 under squared error: g = -target, h = 1
        let g = [1.0, 1.0, -1.0, -1.0];
        let t = fit_tree(&x, &g, &[1.0; 4], &params(1)).unwrap();
        let s = t.nodes[0].split.unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 2.5);
        assert_eq!(t.nodes[s.left].value, -1.0);
        assert_eq!(t.nodes[s.right].value, 1.0);
        assert_eq!(s.gain, 4.0);
    }

    #[test]
    fn identical_targets_give_single_leaf() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0]]);
        let t = fit_tree(&x, &[0.3; 4], &[1.0; 4], &params(3)).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert!((t.nodes[0].value + 0.3).abs() < 1e-15);
    }

    #[test]
    fn equal_gain_prefers_lower_feature() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0], vec![4.0, 4.0]]);
        let t = fit_tree(&x, &[1.0, 1.0, -1.0, -1.0], &[1.0; 4], &params(1)).unwrap();
        assert_eq!(t.nodes[0].split.unwrap().feature, 0);
    }

    #[test]
    fn min_leaf_size_blocks_small_children() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![5.0], vec![6.0]]);
        let g = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        let t = fit_tree(&x, &g, &[1.0; 6], &TreeParams::new(2)).unwrap();
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn missing_values_follow_better_side() {
        // missing rows share the sign of the high values
        let x = DenseMatrix::from_rows(&[
            vec![1.0],
            vec![2.0],
            vec![3.0],
            vec![4.0],
            vec![f64::NAN],
            vec![f64::NAN],
        ]);
        let g = [1.0, 1.0, -1.0, -1.0, -1.0, -1.0];
        let t = fit_tree(&x, &g, &[1.0; 6], &params(1)).unwrap();
        let s = t.nodes[0].split.unwrap();
        assert!(!s.missing_left);
        assert_eq!(t.predict(&[f64::NAN]), t.predict(&[4.0]));
    }

    #[test]
    fn depth_limit_respected() {
        let rows: Vec<Vec<f64>> = (0..32).map(|i| vec![i as f64]).collect();
        let g: Vec<f64> = (0..32).map(|i| if (i / 4) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let t = fit_tree(&DenseMatrix::from_rows(&rows), &g, &[1.0; 32], &params(2)).unwrap();
        assert!(t.depth() <= 2);
        assert!(t.splits().all(|s| s.gain >= 0.0));
    }

    #[test]
    fn input_errors() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![2.0]]);
        assert_eq!(
            fit_tree(&x, &[1.0], &[1.0, 1.0], &params(1)),
            Err(TreeError::LengthMismatch { expected: 2, found: 1 })
        );
        assert!(matches!(
            fit_tree(&x, &[1.0, 1.0], &[1.0, 0.0], &params(1)),
            Err(TreeError::NonPositiveHessian { row: 1, .. })
        ));
        let empty = DenseMatrix::from_vec(0, 1, vec![]);
        assert_eq!(fit_tree(&empty, &[], &[], &params(1)), Err(TreeError::EmptyInput));
    }

    #[test]
    fn threshold_between_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = split_threshold(lo, hi);
        assert!(lo <= t && t < hi);
        assert_eq!(split_threshold(2.0, 3.0), 2.5);
    }
}
