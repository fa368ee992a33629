//! Ranks asthma risk factors from personal activity diaries and
//! environmental exposure data.
//!
//! The pipeline ingests four tabular inputs (profiles, diaries, emission
//! inventories and station readings), extracts personal (`FP_`), emission
//! (`FE_`) and air-quality (`FA_`) feature families, ranks features with a
//! gradient-boosted tree ensemble and measures predictive power with a
//! cross-validated nearest-neighbour classifier.

pub mod ingest;
pub mod spatial;
pub mod util;
pub mod features;
pub mod model;
pub mod eval;
pub mod synth;
pub mod cli;
