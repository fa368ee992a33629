//! Command-line entry point: `synth`, `featurize`, `rank`, `evaluate` and `run-all`.
//!
//! Exit codes: 0 success, 1 bad configuration or missing input, 2 invalid
//! input data, 3 internal error.

pub mod config;
pub mod pipeline;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::eval::{EvalError, FoldError};
use crate::features::{FamilySet, FeatureError};
use crate::ingest::{CohortError, IngestError};
use crate::synth::{generate, SynthError};
use config::{synth_spec, ConfigError, KeyValues, Overrides, RunConfig, RUN_KEYS, SYNTH_KEYS};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("missing input file: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{0}")]
    BadInput(String),
    #[error("invalid data: {0}")]
    Validation(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::MissingInput(_) | CliError::BadInput(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        if e.is_io() {
            CliError::BadInput(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<CohortError> for CliError {
    fn from(e: CohortError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Fold(FoldError::TooFewPerClass { .. }) => CliError::Validation(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io { .. } | SynthError::Feature(_) => CliError::Internal(e.to_string()),
            _ => CliError::BadInput(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "asthma-risk", version, about = "Rank asthma risk factors from activity and exposure data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// `key = value` run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feature families, e.g. `P,E,A`
    #[arg(long)]
    families: Option<FamilySet>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic input files with a planted signal
    Synth {
        /// `key = value` synthetic spec (defaults apply to unset keys)
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Build features.csv from the input files
    Featurize(Common),
    /// Rank features with the GBT model: ranking.csv, importance.svg, model.txt
    Rank(Common),
    /// Cross-validate the KNN classifier per feature subset: metrics.json, roc.csv
    Evaluate(Common),
    /// featurize, rank and evaluate in order
    RunAll(Common),
}

fn run_config(c: &Common) -> Result<RunConfig, CliError> {
    let (kv, base) = match &c.config {
        Some(path) => {
            if !path.is_file() {
                return Err(CliError::MissingInput(path.clone()));
            }
            let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
            (KeyValues::load(path, RUN_KEYS)?, base)
        }
        None => (KeyValues::default(), PathBuf::from(".")),
    };
    let o = Overrides {
        seed: c.seed,
        out_dir: c.out.clone(),
        families: c.families,
    };
    Ok(RunConfig::build(&kv, &base, &o)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { spec, seed, out } => {
            let kv = match &spec {
                Some(p) if !p.is_file() => return Err(CliError::MissingInput(p.clone())),
                Some(p) => KeyValues::load(p, SYNTH_KEYS)?,
                None => KeyValues::default(),
            };
            let spec = synth_spec(&kv, seed)?;
            let truth = generate(&spec, &out)?;
            println!(
                "wrote synthetic inputs for {} people to {} (positive rate {:.3})",
                spec.n_people,
                out.display(),
                truth.positive_rate
            );
        }
        Command::Featurize(c) => {
            let cfg = run_config(&c)?;
            let m = pipeline::featurize(&cfg)?;
            println!("features: {} rows x {} columns", m.n_rows(), m.n_cols());
        }
        Command::Rank(c) => {
            let cfg = run_config(&c)?;
            let m = pipeline::load_features(&cfg)?;
            report_rank(&pipeline::rank(&cfg, &m)?);
        }
        Command::Evaluate(c) => {
            let cfg = run_config(&c)?;
            let m = pipeline::load_features(&cfg)?;
            report_eval(&pipeline::evaluate(&cfg, &m)?);
        }
        Command::RunAll(c) => {
            let cfg = run_config(&c)?;
            let m = pipeline::featurize(&cfg)?;
            println!("features: {} rows x {} columns", m.n_rows(), m.n_cols());
            // later stages read the file just written so the run matches separate invocations
            let m = pipeline::load_features(&cfg)?;
            report_rank(&pipeline::rank(&cfg, &m)?);
            report_eval(&pipeline::evaluate(&cfg, &m)?);
        }
    }
    Ok(())
}

fn report_rank(r: &crate::eval::Ranking) {
    println!(
        "gbt: depth {} trees {} (cv auc {:.3})",
        r.search.best.max_depth, r.search.best.n_trees, r.search.best_auc
    );
    for (i, f) in r.top().iter().enumerate() {
        println!("{:>3}  {:<40} {:.4}", i + 1, f.feature, f.importance);
    }
}

fn report_eval(subsets: &[crate::eval::SubsetResult]) {
    for s in subsets {
        let p = s.precision.map_or_else(|| "n/a".to_string(), |p| format!("{p:.3}"));
        println!("{:<6} auc {:.3}  precision {}  recall {:.3}", s.subset.label(), s.auc, p, s.recall);
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
