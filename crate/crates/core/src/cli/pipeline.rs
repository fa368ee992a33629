//! Stage implementations behind the subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::CliError;
use crate::eval::{
    column_counts, evaluate_subsets, importance_svg, metrics_json, rank_features, ranking_csv, roc_csv,
    AblationConfig, Ranking, RunMeta, SubsetResult,
};
use crate::features::{assemble_matrix, extract_vectors, AssembledMatrix, CategoryMapping, FeatureMatrix};
use crate::ingest::{
    balance_cohort, parse_diaries, parse_emissions, parse_profiles, parse_station_days, DiaryEntry, EmissionRecord,
    Label, PersonProfile, StationDay,
};
use crate::model::write_model;
use crate::spatial::{parse_counties, CountyRef};
use crate::util::write_atomic;

pub const FEATURES_FILE: &str = "features.csv";
pub const RANKING_FILE: &str = "ranking.csv";
pub const IMPORTANCE_SVG_FILE: &str = "importance.svg";
pub const MODEL_FILE: &str = "model.txt";
pub const METRICS_FILE: &str = "metrics.json";
pub const ROC_FILE: &str = "roc.csv";
pub const RUN_LOG_FILE: &str = "run.log";

pub struct Inputs {
    pub profiles: Vec<PersonProfile>,
    pub diaries: Vec<DiaryEntry>,
    pub emissions: Vec<EmissionRecord>,
    pub stations: Vec<StationDay>,
    pub counties: Vec<CountyRef>,
    pub mapping: CategoryMapping,
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

pub fn load_inputs(cfg: &RunConfig) -> Result<Inputs, CliError> {
    let p = &cfg.inputs;
    for path in [&p.profiles, &p.diaries, &p.emissions, &p.stations, &p.counties]
        .into_iter()
        .chain(p.category_map.as_ref())
    {
        require(path)?;
    }
    Ok(Inputs {
        profiles: parse_profiles(&p.profiles)?,
        diaries: parse_diaries(&p.diaries)?,
        emissions: parse_emissions(&p.emissions)?,
        stations: parse_station_days(&p.stations)?,
        counties: parse_counties(&p.counties)?,
        mapping: match &p.category_map {
            Some(path) => CategoryMapping::load(path)?,
            None => CategoryMapping::default_mapping(),
        },
    })
}

/// Balanced cohort matrix over the configured families, plus log lines.
pub fn build_matrix(inputs: &Inputs, cfg: &RunConfig) -> Result<(AssembledMatrix, Vec<String>), CliError> {
    let v = extract_vectors(
        &inputs.profiles,
        &inputs.diaries,
        &inputs.emissions,
        &inputs.stations,
        &inputs.counties,
        &inputs.mapping,
        cfg.years.clone(),
        cfg.idw_k,
    )?;
    let cohort = balance_cohort(&inputs.profiles, cfg.seed)?;
    let assembled = assemble_matrix(&cohort, &v.person, &v.emission, &v.pollution, cfg.families)?;
    let m = &assembled.matrix;
    let mut log = vec![
        format!("families = {}", cfg.families),
        format!("years = {}-{}", cfg.years.start(), cfg.years.end()),
        format!("idw_k = {}", cfg.idw_k),
        format!("profiles = {}", inputs.profiles.len()),
        format!("cohort_rows = {}", m.n_rows()),
        format!("cohort_positive = {}", cohort.count(Label::Positive)),
        format!("cohort_negative = {}", cohort.count(Label::Negative)),
    ];
    for (k, n) in column_counts(m) {
        log.push(format!("columns.{k} = {n}"));
    }
    log.push(format!("imputed_columns = {}", assembled.imputed.len()));
    log.push(format!("unmapped_county_rows = {}", assembled.unmapped.len()));
    log.push(format!("people_without_diary = {}", v.without_diary.len()));
    if !v.unmapped_codes.is_empty() {
        let codes: Vec<&str> = v.unmapped_codes.iter().map(String::as_str).collect();
        log.push(format!("unmapped_codes = {}", codes.join(",")));
    }
    Ok((assembled, log))
}

pub fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    write_atomic(&path, bytes).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Replaces the `stage.*` lines of `run.log`, keeping other stages' lines.
pub fn update_run_log(dir: &Path, stage: &str, seed: u64, lines: &[String]) -> Result<(), CliError> {
    let path = dir.join(RUN_LOG_FILE);
    let prefix = format!("{stage}.");
    let mut out = String::new();
    if let Ok(old) = fs::read_to_string(&path) {
        for l in old.lines().filter(|l| !l.starts_with(&prefix)) {
            out.push_str(l);
            out.push('\n');
        }
    }
    writeln!(out, "{stage}.version = {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(out, "{stage}.seed = {seed}").unwrap();
    for l in lines {
        writeln!(out, "{stage}.{l}").unwrap();
    }
    write_output(dir, RUN_LOG_FILE, out.as_bytes()).map(|_| ())
}

pub fn featurize(cfg: &RunConfig) -> Result<FeatureMatrix, CliError> {
    let inputs = load_inputs(cfg)?;
    let (assembled, log) = build_matrix(&inputs, cfg)?;
    let mut buf = Vec::new();
    assembled
        .matrix
        .write_csv(&mut buf)
        .map_err(|e| CliError::Internal(format!("serialising features: {e}")))?;
    write_output(&cfg.out_dir, FEATURES_FILE, &buf)?;
    update_run_log(&cfg.out_dir, "featurize", cfg.seed, &log)?;
    Ok(assembled.matrix)
}

/// Reads `features.csv` from the output directory, restricted to the configured families.
pub fn load_features(cfg: &RunConfig) -> Result<FeatureMatrix, CliError> {
    let path = cfg.out_dir.join(FEATURES_FILE);
    require(&path)?;
    let f = fs::File::open(&path).map_err(|_| CliError::MissingInput(path.clone()))?;
    let m = FeatureMatrix::read_csv(std::io::BufReader::new(f))
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(m.restrict(cfg.families))
}

pub fn rank(cfg: &RunConfig, m: &FeatureMatrix) -> Result<Ranking, CliError> {
    let r = rank_features(m, &cfg.gbt_grid, cfg.n_folds, cfg.top_k, cfg.seed)?;
    write_output(&cfg.out_dir, RANKING_FILE, ranking_csv(&r.importances).as_bytes())?;
    write_output(&cfg.out_dir, IMPORTANCE_SVG_FILE, importance_svg(r.top()).as_bytes())?;
    let mut model = Vec::new();
    write_model(&mut model, &r.model).map_err(|e| CliError::Internal(format!("serialising model: {e}")))?;
    write_output(&cfg.out_dir, MODEL_FILE, &model)?;
    let mut log = vec![
        format!("families = {}", cfg.families),
        format!("columns = {}", m.n_cols()),
        format!("gbt_max_depth = {}", r.search.best.max_depth),
        format!("gbt_n_trees = {}", r.search.best.n_trees),
        format!("gbt_cv_auc = {}", r.search.best_auc),
        format!("gbt_fold_evaluations = {}", r.search.fold_evaluations),
    ];
    for c in r.search.cells.iter().filter(|c| c.failure.is_some()) {
        log.push(format!(
            "gbt_failed_cell = depth {} trees {}: {}",
            c.params.max_depth,
            c.params.n_trees,
            c.failure.as_deref().unwrap_or_default()
        ));
    }
    update_run_log(&cfg.out_dir, "rank", cfg.seed, &log)?;
    Ok(r)
}

pub fn evaluate(cfg: &RunConfig, m: &FeatureMatrix) -> Result<Vec<SubsetResult>, CliError> {
    let acfg = AblationConfig {
        subsets: cfg.subsets.clone(),
        knn_grid: cfg.knn_grid.clone(),
        gbt_grid: cfg.gbt_grid.clone(),
        n_folds: cfg.n_folds,
        top_k: cfg.top_k,
        seed: cfg.seed,
    };
    let subsets = evaluate_subsets(m, &acfg)?;
    let meta = RunMeta {
        seed: cfg.seed,
        n_rows: m.n_rows(),
        n_folds: cfg.n_folds,
        column_counts: column_counts(m),
        knn_grid: cfg.knn_grid.clone(),
    };
    write_output(&cfg.out_dir, METRICS_FILE, metrics_json(&meta, &subsets).as_bytes())?;
    write_output(&cfg.out_dir, ROC_FILE, roc_csv(&subsets).as_bytes())?;
    let mut log = Vec::new();
    for s in &subsets {
        let ks: Vec<String> = s.folds.iter().map(|f| f.chosen_k.to_string()).collect();
        log.push(format!("subset.{}.auc = {}", s.subset, s.auc));
        log.push(format!("subset.{}.knn_k_per_fold = {}", s.subset, ks.join(",")));
    }
    update_run_log(&cfg.out_dir, "evaluate", cfg.seed, &log)?;
    Ok(subsets)
}
