//! Flat text serialization of [`GbtModel`].
//!
//! ```text
//! gbt-model	1
//! base_score	0
//! shrinkage	0.1
//! max_depth	2
//! min_leaf_size	5
//! n_trees	1
//! degenerate	0
//! columns	2
//! FP_age
//! FE_Wildfires
//! tree	0	3
//! 0	split	1	412.5	L	-0.0	1.25	1	2
//! 1	leaf	-	-	-	-0.04	-	-	-
//! 2	leaf	-	-	-	0.05	-	-	-
//! ```
//!
//! Node lines are `id kind feature threshold missing-direction value gain left right`,
//! tab separated. Floats use Rust's shortest round-trip formatting.
#![allow(clippy::tabs_in_doc_comments)]

use std::io::{BufRead, Write};

use thiserror::Error;

use super::gbt::{GbtModel, GbtParams};
use super::tree::{Node, RegressionTree, Split};

const MAGIC: &str = "gbt-model";
const VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub fn write_model<W: Write>(mut w: W, model: &GbtModel) -> std::io::Result<()> {
    writeln!(w, "{MAGIC}\t{VERSION}")?;
    writeln!(w, "base_score\t{:?}", model.base_score)?;
    writeln!(w, "shrinkage\t{:?}", model.params.shrinkage)?;
    writeln!(w, "max_depth\t{}", model.params.max_depth)?;
    writeln!(w, "min_leaf_size\t{}", model.params.min_leaf_size)?;
    writeln!(w, "n_trees\t{}", model.params.n_trees)?;
    writeln!(w, "degenerate\t{}", u8::from(model.degenerate))?;
    writeln!(w, "columns\t{}", model.column_names.len())?;
    for c in &model.column_names {
        writeln!(w, "{c}")?;
    }
    for (i, t) in model.trees.iter().enumerate() {
        writeln!(w, "tree\t{i}\t{}", t.nodes.len())?;
        for (id, n) in t.nodes.iter().enumerate() {
            match n.split {
                Some(s) => writeln!(
                    w,
                    "{id}\tsplit\t{}\t{:?}\t{}\t{:?}\t{:?}\t{}\t{}",
                    s.feature,
                    s.threshold,
                    if s.missing_left { "L" } else { "R" },
                    n.value,
                    s.gain,
                    s.left,
                    s.right
                )?,
                None => writeln!(w, "{id}\tleaf\t-\t-\t-\t{:?}\t-\t-\t-", n.value)?,
            }
        }
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, ModelIoError> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, reason: impl Into<String>) -> ModelIoError {
        ModelIoError::Parse {
            line: self.line,
            reason: reason.into(),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<String, ModelIoError> {
        let l = self.next()?;
        match l.split_once('\t') {
            Some((k, v)) if k == key => Ok(v.to_string()),
            _ => Err(self.err(format!("expected `{key}`"))),
        }
    }

    fn keyed_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ModelIoError> {
        let v = self.keyed(key)?;
        self.parse(&v, key)
    }

    fn parse<T: std::str::FromStr>(&self, s: &str, what: &str) -> Result<T, ModelIoError> {
        s.parse().map_err(|_| self.err(format!("bad {what} `{s}`")))
    }
}

pub fn read_model<R: BufRead>(reader: R) -> Result<GbtModel, ModelIoError> {
    let mut l = Lines {
        inner: reader.lines(),
        line: 0,
    };
    let v = l.keyed(MAGIC)?;
    if v != VERSION {
        return Err(l.err(format!("unsupported version `{v}`")));
    }
    let base_score: f64 = l.keyed_parse("base_score")?;
    let shrinkage: f64 = l.keyed_parse("shrinkage")?;
    let max_depth: usize = l.keyed_parse("max_depth")?;
    let min_leaf_size: usize = l.keyed_parse("min_leaf_size")?;
    let n_trees: usize = l.keyed_parse("n_trees")?;
    let degenerate: u8 = l.keyed_parse("degenerate")?;
    let n_cols: usize = l.keyed_parse("columns")?;
    let mut column_names = Vec::with_capacity(n_cols);
    for _ in 0..n_cols {
        column_names.push(l.next()?);
    }

    let mut trees = Vec::new();
    loop {
        l.line += 1;
        let header = match l.inner.next() {
            None => break,
            Some(h) => h?,
        };
        if header.is_empty() {
            continue;
        }
        let parts: Vec<&str> = header.split('\t').collect();
        if parts.len() != 3 || parts[0] != "tree" {
            return Err(l.err("expected `tree` header"));
        }
        let n_nodes: usize = l.parse(parts[2], "node count")?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for id in 0..n_nodes {
            let line = l.next()?;
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 9 || l.parse::<usize>(f[0], "node id")? != id {
                return Err(l.err("malformed node line"));
            }
            let value: f64 = l.parse(f[5], "value")?;
            let split = match f[1] {
                "leaf" => None,
                "split" => {
                    let s = Split {
                        feature: l.parse(f[2], "feature")?,
                        threshold: l.parse(f[3], "threshold")?,
                        missing_left: match f[4] {
                            "L" => true,
                            "R" => false,
                            other => return Err(l.err(format!("bad missing direction `{other}`"))),
                        },
                        gain: l.parse(f[6], "gain")?,
                        left: l.parse(f[7], "left child")?,
                        right: l.parse(f[8], "right child")?,
                    };
                    if s.feature >= n_cols || s.left >= n_nodes || s.right >= n_nodes || s.left <= id || s.right <= id {
                        return Err(l.err("split references out-of-range feature or child"));
                    }
                    Some(s)
                }
                other => return Err(l.err(format!("unknown node kind `{other}`"))),
            };
            nodes.push(Node { value, split });
        }
        if nodes.is_empty() {
            return Err(l.err("tree has no nodes"));
        }
        trees.push(RegressionTree { nodes });
    }
    Ok(GbtModel {
        base_score,
        params: GbtParams {
            max_depth,
            n_trees,
            shrinkage,
            min_leaf_size,
        },
        trees,
        column_names,
        degenerate: degenerate != 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Label;
    use crate::model::{predict_proba, train_gbt, DenseMatrix};

    #[test]
    fn round_trip_preserves_predictions() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![(i as f64 * 0.37).sin(), if i % 7 == 0 { f64::NAN } else { i as f64 / 3.0 }])
            .collect();
        let y: Vec<Label> = (0..60)
            .map(|i| if (i * 13) % 5 < 2 { Label::Positive } else { Label::Negative })
            .collect();
        let x = DenseMatrix::from_rows(&rows);
        let model = train_gbt(&x, &y, &GbtParams::new(3, 15))
            .unwrap()
            .model
            .with_column_names(vec!["FP_a".into(), "FA_b".into()]);
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        let back = read_model(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        for r in x.rows() {
            assert_eq!(
                predict_proba(&back, r).unwrap().to_bits(),
                predict_proba(&model, r).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_model("hello\n".as_bytes()).is_err());
        let bad = "gbt-model\t1\nbase_score\t0\nshrinkage\t0.1\nmax_depth\t1\nmin_leaf_size\t5\nn_trees\t1\ndegenerate\t0\ncolumns\t1\na\ntree\t0\t1\n0\tsplit\t4\t1\tL\t0\t1\t1\t2\n";
        assert!(read_model(bad.as_bytes()).is_err());
    }
}
