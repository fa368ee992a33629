//! Rendering of evaluation outputs: metrics JSON, ranking and ROC tables and
//! the importance bar chart.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::ablation::SubsetResult;
use crate::model::FeatureImportance;

pub const PROTOCOL: &str = "nested stratified cross-validation: metrics are means over the outer folds, \
K is chosen by an inner stratified search on each outer training part, positive iff score >= 0.5";

#[derive(Debug, Serialize)]
struct ChosenParams {
    /// Most frequent K over the outer folds.
    k: usize,
    k_per_fold: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct SubsetMetrics {
    precision: Option<f64>,
    recall: f64,
    auc: f64,
    n_cols: usize,
    fold_auc: Vec<f64>,
    chosen_params: ChosenParams,
}

#[derive(Debug, Serialize)]
struct MetricsDoc<'a> {
    seed: u64,
    protocol: &'a str,
    n_rows: usize,
    n_folds: usize,
    column_counts: &'a BTreeMap<String, usize>,
    knn_k_grid: &'a [usize],
    subsets: BTreeMap<String, SubsetMetrics>,
}

/// Inputs of `metrics.json` beyond the subset rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub seed: u64,
    pub n_rows: usize,
    pub n_folds: usize,
    pub column_counts: BTreeMap<String, usize>,
    pub knn_grid: Vec<usize>,
}

pub fn metrics_json(meta: &RunMeta, subsets: &[SubsetResult]) -> String {
    let doc = MetricsDoc {
        seed: meta.seed,
        protocol: PROTOCOL,
        n_rows: meta.n_rows,
        n_folds: meta.n_folds,
        column_counts: &meta.column_counts,
        knn_k_grid: &meta.knn_grid,
        subsets: subsets
            .iter()
            .map(|s| {
                (
                    s.subset.label(),
                    SubsetMetrics {
                        precision: s.precision,
                        recall: s.recall,
                        auc: s.auc,
                        n_cols: s.n_cols,
                        fold_auc: s.folds.iter().map(|f| f.auc).collect(),
                        chosen_params: ChosenParams {
                            k: s.modal_k(),
                            k_per_fold: s.folds.iter().map(|f| f.chosen_k).collect(),
                        },
                    },
                )
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("metrics document serialises");
    out.push('\n');
    out
}

/// `rank,feature,importance`, ranks starting at 1.
pub fn ranking_csv(ranking: &[FeatureImportance]) -> String {
    let mut out = String::from("rank,feature,importance\n");
    for (i, f) in ranking.iter().enumerate() {
        writeln!(out, "{},{},{}", i + 1, f.feature, f.importance).unwrap();
    }
    out
}

/// `subset,fpr,tpr` with one block per subset.
pub fn roc_csv(subsets: &[SubsetResult]) -> String {
    let mut out = String::from("subset,fpr,tpr\n");
    for s in subsets {
        for (fpr, tpr) in &s.roc {
            writeln!(out, "{},{},{}", s.subset.label(), fpr, tpr).unwrap();
        }
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Horizontal bar chart, most important feature on top.
pub fn importance_svg(ranking: &[FeatureImportance]) -> String {
    const LABEL_W: f64 = 260.0;
    const BAR_W: f64 = 400.0;
    const ROW_H: f64 = 22.0;
    const TOP: f64 = 36.0;
    let max = ranking.iter().map(|f| f.importance).fold(0.0, f64::max);
    let height = TOP + ROW_H * ranking.len() as f64 + 12.0;
    let width = LABEL_W + BAR_W + 80.0;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<text x="8" y="20" font-size="14">Feature importance (top {})</text>"#, ranking.len()).unwrap();
    for (i, f) in ranking.iter().enumerate() {
        let y = TOP + ROW_H * i as f64;
        let w = if max > 0.0 { BAR_W * f.importance / max } else { 0.0 };
        writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LABEL_W - 6.0,
            y + 15.0,
            xml_escape(&f.feature)
        )
        .unwrap();
        writeln!(
            out,
            r##"<rect x="{LABEL_W}" y="{}" width="{w:.2}" height="{}" fill="#4a78a8"/>"##,
            y + 3.0,
            ROW_H - 6.0
        )
        .unwrap();
        writeln!(out, r#"<text x="{:.2}" y="{}">{:.4}</text>"#, LABEL_W + w + 4.0, y + 15.0, f.importance).unwrap();
    }
    out.push_str("</svg>\n");
    out
}
