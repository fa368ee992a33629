//! `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Relative paths are
//! resolved against the directory holding the config file. Recognised keys:
//!
//! | key | meaning | default |
//! |-----|---------|---------|
//! | `data_dir` | directory holding the input files | config directory |
//! | `profiles`, `diaries`, `emissions`, `stations`, `counties`, `category_map` | input paths | standard names in `data_dir` (built-in category map when absent) |
//! | `out_dir` | output directory | `out` |
//! | `seed` | run seed | required |
//! | `families` | families in the feature matrix, e.g. `P,E,A` | `P,E,A` |
//! | `subsets` | evaluation subsets separated by `;`, e.g. `P;P+A` | the four standard subsets within `families` |
//! | `gbt_depths`, `gbt_trees` | GBT grid | `1,2,3` and `50,100,150` |
//! | `knn_k` | KNN candidates | `1,3,5,7,9,15,25` |
//! | `folds` | cross-validation folds | `5` |
//! | `top_k` | features shown in the chart | `20` |
//! | `years` | climatology years, `2001-2014` | `2001-2014` |
//! | `idw_k` | stations per interpolation | `5` |

use std::collections::BTreeMap;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::eval::{GbtGrid, DEFAULT_FOLDS, DEFAULT_KNN_GRID, DEFAULT_TOP_K};
use crate::features::FamilySet;
use crate::spatial::{DEFAULT_NEIGHBORS, DEFAULT_YEARS};
use crate::synth::{
    SynthSpec, CATEGORY_MAP_FILE, COUNTIES_FILE, DIARIES_FILE, EMISSIONS_FILE, PROFILES_FILE, STATIONS_FILE,
};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("{file} line {line}: expected `key = value`")]
    Syntax { file: String, line: usize },
    #[error("{file} line {line}: unknown key `{key}`")]
    UnknownKey { file: String, line: usize, key: String },
    #[error("{file} line {line}: duplicate key `{key}`")]
    DuplicateKey { file: String, line: usize, key: String },
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("no seed given; set `seed` in the config or pass --seed")]
    MissingSeed,
}

/// Parsed `key = value` pairs with the line each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    pub file: String,
    pub entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str, file: &str, allowed: &[&str]) -> Result<Self, ConfigError> {
        let mut kv = KeyValues {
            file: file.to_string(),
            entries: BTreeMap::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax {
                file: file.to_string(),
                line: i + 1,
            })?;
            let key = k.trim().to_string();
            if !allowed.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey {
                    file: file.to_string(),
                    line: i + 1,
                    key,
                });
            }
            if kv.entries.contains_key(&key) {
                return Err(ConfigError::DuplicateKey {
                    file: file.to_string(),
                    line: i + 1,
                    key,
                });
            }
            kv.entries.insert(key, (i + 1, v.trim().to_string()));
        }
        Ok(kv)
    }

    pub fn load(path: &Path, allowed: &[&str]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string(), allowed)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|e: T::Err| ConfigError::BadValue {
                    key: key.to_string(),
                    reason: e.to_string(),
                })
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    let items = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|e: T::Err| ConfigError::BadValue {
                key: key.to_string(),
                reason: format!("`{s}`: {e}"),
            })
        })
        .collect::<Result<Vec<T>, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::BadValue {
            key: key.to_string(),
            reason: "empty list".into(),
        });
    }
    Ok(items)
}

/// `2001-2014` or a single year.
pub fn parse_years(key: &str, v: &str) -> Result<RangeInclusive<i32>, ConfigError> {
    let bad = |reason: String| ConfigError::BadValue {
        key: key.to_string(),
        reason,
    };
    let (a, b) = v.split_once('-').unwrap_or((v, v));
    let a: i32 = a.trim().parse().map_err(|_| bad(format!("`{v}` is not a year range")))?;
    let b: i32 = b.trim().parse().map_err(|_| bad(format!("`{v}` is not a year range")))?;
    if a > b {
        return Err(bad(format!("`{v}` is empty")));
    }
    Ok(a..=b)
}

pub const RUN_KEYS: &[&str] = &[
    "data_dir",
    "profiles",
    "diaries",
    "emissions",
    "stations",
    "counties",
    "category_map",
    "out_dir",
    "seed",
    "families",
    "subsets",
    "gbt_depths",
    "gbt_trees",
    "knn_k",
    "folds",
    "top_k",
    "years",
    "idw_k",
];

#[derive(Debug, Clone, PartialEq)]
pub struct InputPaths {
    pub profiles: PathBuf,
    pub diaries: PathBuf,
    pub emissions: PathBuf,
    pub stations: PathBuf,
    pub counties: PathBuf,
    /// `None` selects the built-in mapping.
    pub category_map: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub inputs: InputPaths,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub families: FamilySet,
    pub subsets: Vec<FamilySet>,
    pub gbt_grid: GbtGrid,
    pub knn_grid: Vec<usize>,
    pub n_folds: usize,
    pub top_k: usize,
    pub years: RangeInclusive<i32>,
    pub idw_k: usize,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub families: Option<FamilySet>,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Builds the configuration from file values (if any) and overrides.
    /// `base` is the directory relative paths in the file refer to.
    pub fn build(kv: &KeyValues, base: &Path, o: &Overrides) -> Result<RunConfig, ConfigError> {
        let data_dir = kv.get("data_dir").map_or_else(|| base.to_path_buf(), |d| resolve(base, d));
        let input = |key: &str, default: &str| {
            kv.get(key).map_or_else(|| data_dir.join(default), |v| resolve(base, v))
        };
        let category_map = match kv.get("category_map") {
            Some(v) => Some(resolve(base, v)),
            None => Some(data_dir.join(CATEGORY_MAP_FILE)).filter(|p| p.exists()),
        };
        let inputs = InputPaths {
            profiles: input("profiles", PROFILES_FILE),
            diaries: input("diaries", DIARIES_FILE),
            emissions: input("emissions", EMISSIONS_FILE),
            stations: input("stations", STATIONS_FILE),
            counties: input("counties", COUNTIES_FILE),
            category_map,
        };
        let out_dir = match &o.out_dir {
            Some(d) => d.clone(),
            None => resolve(base, kv.get("out_dir").unwrap_or("out")),
        };
        let seed = match o.seed {
            Some(s) => s,
            None => kv.value("seed")?.ok_or(ConfigError::MissingSeed)?,
        };
        let families = match o.families {
            Some(f) => f,
            None => kv.value("families")?.unwrap_or(FamilySet::ALL),
        };
        let subsets = match kv.get("subsets") {
            Some(v) => v
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    let set: FamilySet = s.parse().map_err(|e| ConfigError::BadValue {
                        key: "subsets".into(),
                        reason: e,
                    })?;
                    if set.families().any(|f| !families.contains(f)) {
                        return Err(ConfigError::BadValue {
                            key: "subsets".into(),
                            reason: format!("subset {set} uses a family outside {families}"),
                        });
                    }
                    Ok(set)
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => FamilySet::ABLATION
                .into_iter()
                .filter(|s| s.families().all(|f| families.contains(f)))
                .collect(),
        };
        if subsets.is_empty() {
            return Err(ConfigError::BadValue {
                key: "subsets".into(),
                reason: "no evaluation subset".into(),
            });
        }
        let default_grid = GbtGrid::default();
        let positive = |key: &str, v: Vec<usize>| {
            if v.contains(&0) {
                Err(ConfigError::BadValue {
                    key: key.to_string(),
                    reason: "values must be positive".into(),
                })
            } else {
                Ok(v)
            }
        };
        let gbt_grid = GbtGrid {
            depths: positive("gbt_depths", kv.list("gbt_depths")?.unwrap_or(default_grid.depths))?,
            n_trees: kv.list("gbt_trees")?.unwrap_or(default_grid.n_trees),
        };
        let knn_grid = positive("knn_k", kv.list("knn_k")?.unwrap_or_else(|| DEFAULT_KNN_GRID.to_vec()))?;
        let n_folds = kv.value("folds")?.unwrap_or(DEFAULT_FOLDS);
        if n_folds < 2 {
            return Err(ConfigError::BadValue {
                key: "folds".into(),
                reason: "at least two folds are required".into(),
            });
        }
        let years = match kv.get("years") {
            Some(v) => parse_years("years", v)?,
            None => DEFAULT_YEARS,
        };
        let idw_k = positive("idw_k", vec![kv.value("idw_k")?.unwrap_or(DEFAULT_NEIGHBORS)])?[0];
        Ok(RunConfig {
            inputs,
            out_dir,
            seed,
            families,
            subsets,
            gbt_grid,
            knn_grid,
            n_folds,
            top_k: kv.value("top_k")?.unwrap_or(DEFAULT_TOP_K),
            years,
            idw_k,
        })
    }
}

pub const SYNTH_KEYS: &[&str] = &["n_people", "n_counties", "n_stations", "years", "planted", "noise_scale", "seed"];

/// Synthetic spec from `key = value` pairs; `planted` is a comma list of
/// `feature:coefficient`. Unset keys keep the default spec.
pub fn synth_spec(kv: &KeyValues, seed: Option<u64>) -> Result<SynthSpec, ConfigError> {
    let d = SynthSpec::default();
    let planted = match kv.get("planted") {
        Some(v) => v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|item| {
                let (name, coef) = item.split_once(':').ok_or_else(|| ConfigError::BadValue {
                    key: "planted".into(),
                    reason: format!("`{item}` is not `feature:coefficient`"),
                })?;
                let coef: f64 = coef.trim().parse().map_err(|_| ConfigError::BadValue {
                    key: "planted".into(),
                    reason: format!("`{coef}` is not a number"),
                })?;
                Ok((name.trim().to_string(), coef))
            })
            .collect::<Result<Vec<_>, _>>()?,
        None => d.planted,
    };
    Ok(SynthSpec {
        n_people: kv.value("n_people")?.unwrap_or(d.n_people),
        n_counties: kv.value("n_counties")?.unwrap_or(d.n_counties),
        n_stations: kv.value("n_stations")?.unwrap_or(d.n_stations),
        years: match kv.get("years") {
            Some(v) => parse_years("years", v)?,
            None => d.years,
        },
        planted,
        noise_scale: kv.value("noise_scale")?.unwrap_or(d.noise_scale),
        seed: match seed {
            Some(s) => s,
            None => kv.value("seed")?.unwrap_or(d.seed),
        },
    })
}
