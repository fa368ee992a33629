use thiserror::Error;

use crate::ingest::Label;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("AUC needs both classes present")]
    SingleClass,
    #[error("no positive labels")]
    NoPositives,
    #[error("{scores} scores for {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("scores contain NaN")]
    NanScore,
}

fn check(scores: &[f64], labels: &[Label]) -> Result<(), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(MetricError::NanScore);
    }
    Ok(())
}

/// Area under the ROC curve via the Mann-Whitney rank sum, with average ranks
/// for tied scores (a tied positive/negative pair counts one half).
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64, MetricError> {
    check(scores, labels)?;
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their average
        let avg_rank = (i + j + 2) as f64 / 2.0;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k].is_positive()).count();
        rank_sum_pos += avg_rank * pos_in_group as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    let u = rank_sum_pos - p * (p + 1.0) / 2.0;
    Ok(u / (p * n))
}

/// Precision and recall when predicting positive iff `score >= threshold`.
/// Precision is `None` when nothing is predicted positive.
pub fn precision_recall(
    scores: &[f64],
    labels: &[Label],
    threshold: f64,
) -> Result<(Option<f64>, f64), MetricError> {
    check(scores, labels)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&s, l) in scores.iter().zip(labels) {
        match (s >= threshold, l.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp + fn_ == 0 {
        return Err(MetricError::NoPositives);
    }
    let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
    Ok((precision, tp as f64 / (tp + fn_) as f64))
}

/// ROC points `(fpr, tpr)` from `(0, 0)` to `(1, 1)`, one point per distinct score.
pub fn roc_curve(scores: &[f64], labels: &[Label]) -> Result<Vec<(f64, f64)>, MetricError> {
    check(scores, labels)?;
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(v: &[i8]) -> Vec<Label> {
        v.iter().map(|&s| Label::from_sign(s).unwrap()).collect()
    }

    #[test]
    fn perfect_separation() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &l(&[-1, -1, 1, 1])).unwrap(), 1.0);
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &l(&[-1, -1, 1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn all_ties_half() {
        assert_eq!(auc(&[0.5; 6], &l(&[-1, 1, -1, 1, 1, -1])).unwrap(), 0.5);
    }

    #[test]
    fn hand_example() {
        // pairs (+0.35 vs -0.1) (+0.35 vs -0.4 lost) (+0.8 vs both): 3 of 4
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &l(&[-1, -1, 1, 1])).unwrap(), 0.75);
    }

    #[test]
    fn single_class_rejected() {
        assert_eq!(auc(&[0.1, 0.2], &l(&[1, 1])), Err(MetricError::SingleClass));
        assert_eq!(auc(&[0.1], &l(&[1, -1])), Err(MetricError::LengthMismatch { scores: 1, labels: 2 }));
    }

    #[test]
    fn precision_recall_cases() {
        assert_eq!(
            precision_recall(&[1.0, 1.0, 0.0], &l(&[1, 1, -1]), 0.5).unwrap(),
            (Some(1.0), 1.0)
        );
        assert_eq!(precision_recall(&[0.1, 0.2], &l(&[1, -1]), 0.5).unwrap(), (None, 0.0));
        // TP=2, FP=1, FN=2
        let (p, r) = precision_recall(&[0.9, 0.6, 0.7, 0.1, 0.2, 0.0], &l(&[1, 1, -1, 1, 1, -1]), 0.5).unwrap();
        assert_eq!(p, Some(2.0 / 3.0));
        assert_eq!(r, 0.5);
        assert_eq!(precision_recall(&[0.9], &l(&[-1]), 0.5), Err(MetricError::NoPositives));
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(precision_recall(&[0.5], &l(&[1]), 0.5).unwrap(), (Some(1.0), 1.0));
    }

    #[test]
    fn roc_endpoints() {
        let pts = roc_curve(&[0.1, 0.4, 0.35, 0.8], &l(&[-1, -1, 1, 1])).unwrap();
        assert_eq!(pts.first(), Some(&(0.0, 0.0)));
        assert_eq!(pts.last(), Some(&(1.0, 1.0)));
        assert_eq!(pts.len(), 5);
        // trapezoid area equals the rank AUC
        let area: f64 = pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
        assert!((area - 0.75).abs() < 1e-12);
    }
}
