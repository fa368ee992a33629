//! Deterministic synthetic inputs with a planted logistic signal.
//!
//! Labels are drawn from `logit P(asthma) = b + Σ β_j z_j + ε`, where `z_j` is
//! planted feature `j` standardised over the generated population. Feature
//! values come from the same extractors the pipeline uses, so a planted
//! column is exactly the column the ranking model sees. The intercept `b` is
//! found by bisection so the expected positive rate is [`TARGET_POSITIVE_RATE`],
//! leaving enough negatives for cohort balancing; `ε` is Gaussian with
//! standard deviation `noise_scale`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::features::{extract_vectors, CategoryMapping, FeatureError, NamedValues, DEFAULT_CATEGORY_MAP};
use crate::ingest::{
    write_diaries, write_emissions, write_profiles, write_station_days, AsthmaStatus, CountyFips, DiaryEntry,
    EmissionCategory, EmissionRecord, EnvFactor, Gender, PersonProfile, StationDay,
};
use crate::spatial::{haversine_km, write_counties, CountyRef, DEFAULT_NEIGHBORS};
use crate::util::write_atomic;

pub const PROFILES_FILE: &str = "profiles.csv";
pub const DIARIES_FILE: &str = "diaries.csv";
pub const EMISSIONS_FILE: &str = "emissions.csv";
pub const STATIONS_FILE: &str = "stations.csv";
pub const COUNTIES_FILE: &str = "counties.csv";
pub const CATEGORY_MAP_FILE: &str = "category_map.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const TARGET_POSITIVE_RATE: f64 = 0.4;

/// Planted features and coefficients (per standard deviation) of the default spec.
pub const DEFAULT_PLANTED: [(&str, f64); 10] = [
    ("FP_t_exercise", 1.0),
    ("FP_t_work", 0.6),
    ("FP_t_hb", 0.7),
    ("FP_smoker", 0.6),
    ("FP_lives_with_smoker", 0.5),
    ("FP_age", -0.8),
    ("FP_gas_stove", 0.5),
    ("FE_Wildfires", 0.6),
    ("FA_pm25_mean_m7", 0.6),
    ("FA_so2_max_m7", 0.5),
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_people: usize,
    pub n_counties: usize,
    pub n_stations: usize,
    pub years: RangeInclusive<i32>,
    pub planted: Vec<(String, f64)>,
    /// Standard deviation of the Gaussian noise added to the logit.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_people: 2000,
            n_counties: 30,
            n_stations: 60,
            years: 2001..=2004,
            planted: DEFAULT_PLANTED.iter().map(|&(n, c)| (n.to_string(), c)).collect(),
            noise_scale: 0.5,
            seed: 42,
        }
    }
}

impl SynthSpec {
    /// The default spec with every coefficient set to zero.
    pub fn null(seed: u64) -> Self {
        let mut s = SynthSpec {
            seed,
            ..SynthSpec::default()
        };
        for p in &mut s.planted {
            p.1 = 0.0;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub planted: Vec<(String, f64)>,
    pub intercept: f64,
    /// Realised share of positives among people with a known status.
    pub positive_rate: f64,
}

impl GroundTruth {
    pub fn features(&self) -> Vec<&str> {
        self.planted.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// `feature,coefficient` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,coefficient\n");
        for (n, c) in &self.planted {
            writeln!(out, "{n},{c}").unwrap();
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("planted feature `{0}` is not produced by the feature extractors")]
    UnknownPlantedFeature(String),
    #[error("coefficient of `{0}` is not finite")]
    NonFiniteCoefficient(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Generated inputs held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub profiles: Vec<PersonProfile>,
    pub diaries: Vec<DiaryEntry>,
    pub emissions: Vec<EmissionRecord>,
    pub stations: Vec<StationDay>,
    pub counties: Vec<CountyRef>,
}

fn validate(spec: &SynthSpec) -> Result<(), SynthError> {
    if spec.n_people == 0 || spec.n_counties == 0 || spec.n_stations == 0 {
        return Err(SynthError::InvalidSpec("people, counties and stations must be positive".into()));
    }
    if spec.n_counties > 49_900 {
        return Err(SynthError::InvalidSpec("too many counties".into()));
    }
    if spec.years.is_empty() || *spec.years.start() < 1900 || *spec.years.end() > 2100 {
        return Err(SynthError::InvalidSpec(format!(
            "year range {}-{} is empty or implausible",
            spec.years.start(),
            spec.years.end()
        )));
    }
    if !(spec.noise_scale.is_finite() && spec.noise_scale >= 0.0) {
        return Err(SynthError::InvalidSpec("noise scale must be finite and non-negative".into()));
    }
    for (n, c) in &spec.planted {
        if !c.is_finite() {
            return Err(SynthError::NonFiniteCoefficient(n.clone()));
        }
    }
    Ok(())
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

fn pick<'a, R: Rng>(rng: &mut R, items: &[(&'a str, f64)]) -> &'a str {
    items.choose_weighted(rng, |i| i.1).expect("non-empty weights").0
}

fn gen_counties(rng: &mut ChaCha8Rng, n: usize) -> Vec<CountyRef> {
    (0..n)
        .map(|i| CountyRef {
            county_fips: format!("{:02}{:03}", 6 + i / 499, 2 * (i % 499) + 1).parse().expect("valid fips"),
            centroid_lat: round_to(rng.gen_range(33.0..39.0), 4),
            centroid_lon: round_to(rng.gen_range(-122.0..-114.0), 4),
        })
        .collect()
}

/// Smooth regional wildfire intensity: a sum of Gaussian bumps, rescaled to
/// mean 0 and standard deviation 1 over the county centroids. It drives
/// county wildfire emissions and July PM2.5 and SO2 near the fires.
struct FireField {
    bumps: Vec<(f64, f64, f64, f64)>,
    mean: f64,
    sd: f64,
}

impl FireField {
    fn new(rng: &mut ChaCha8Rng, counties: &[CountyRef]) -> Self {
        let unit = Normal::new(0.0, 1.0).expect("valid normal");
        let bumps = (0..5)
            .map(|_| {
                (
                    rng.gen_range(33.0..39.0),
                    rng.gen_range(-122.0..-114.0),
                    unit.sample(rng),
                    rng.gen_range(1.0..2.0),
                )
            })
            .collect();
        let mut f = FireField {
            bumps,
            mean: 0.0,
            sd: 1.0,
        };
        let raw: Vec<f64> = counties.iter().map(|c| f.at(c.centroid_lat, c.centroid_lon)).collect();
        let n = raw.len() as f64;
        let mean = raw.iter().sum::<f64>() / n;
        let sd = (raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        f.mean = mean;
        f.sd = if sd > 0.0 { sd } else { 1.0 };
        f
    }

    fn at(&self, lat: f64, lon: f64) -> f64 {
        let raw: f64 = self
            .bumps
            .iter()
            .map(|&(blat, blon, a, w)| {
                let d2 = (lat - blat).powi(2) + (lon - blon).powi(2);
                a * (-d2 / (2.0 * w * w)).exp()
            })
            .sum();
        (raw - self.mean) / self.sd
    }
}

/// (typical level, spread between stations, daily noise, seasonal amplitude)
fn factor_profile(f: EnvFactor) -> (f64, f64, f64, f64) {
    match f {
        EnvFactor::Pm25 => (12.0, 4.0, 3.0, 3.0),
        EnvFactor::So2 => (3.0, 1.2, 0.8, 0.5),
        EnvFactor::No2 => (15.0, 5.0, 4.0, 3.0),
        EnvFactor::O3 => (0.04, 0.01, 0.008, 0.01),
        EnvFactor::Co => (0.5, 0.2, 0.12, 0.1),
        EnvFactor::Temperature => (18.0, 3.0, 3.0, 8.0),
        EnvFactor::Pressure => (1010.0, 4.0, 3.0, 0.0),
        EnvFactor::WindSpeed => (3.5, 1.0, 1.0, 0.5),
    }
}

fn gen_stations(
    rng: &mut ChaCha8Rng,
    n: usize,
    counties: &[CountyRef],
    fire: &FireField,
    years: &RangeInclusive<i32>,
) -> Vec<StationDay> {
    struct Site {
        id: String,
        lat: f64,
        lon: f64,
        county: Option<CountyFips>,
        factors: Vec<EnvFactor>,
        // per factor (index into `factors`) and month
        offset: Vec<[f64; 12]>,
        smoke: f64,
    }
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut sites = Vec::with_capacity(n);
    for i in 0..n {
        let lat = round_to(rng.gen_range(32.8..39.2), 4);
        let lon = round_to(rng.gen_range(-122.2..-113.8), 4);
        let county = if i % 10 == 9 {
            None
        } else {
            counties
                .iter()
                .min_by(|a, b| {
                    haversine_km(lat, lon, a.centroid_lat, a.centroid_lon)
                        .total_cmp(&haversine_km(lat, lon, b.centroid_lat, b.centroid_lon))
                })
                .map(|c| c.county_fips.clone())
        };
        let mut factors: Vec<EnvFactor> = EnvFactor::ALL.into_iter().filter(|_| rng.gen_bool(0.75)).collect();
        if factors.is_empty() {
            factors.push(EnvFactor::Pm25);
        }
        let smoke = fire.at(lat, lon);
        let offset = factors
            .iter()
            .map(|&f| {
                let spread = factor_profile(f).1;
                let mut m = [0.0; 12];
                for v in &mut m {
                    *v = spread * unit.sample(rng);
                }
                if f == EnvFactor::Pm25 {
                    m[6] += 1.5 * spread * smoke;
                }
                m
            })
            .collect();
        sites.push(Site {
            id: format!("S{:03}", i + 1),
            lat,
            lon,
            county,
            factors,
            offset,
            smoke,
        });
    }

    let mut out = Vec::new();
    let start = NaiveDate::from_ymd_opt(*years.start(), 1, 1).expect("valid year");
    let end = NaiveDate::from_ymd_opt(*years.end(), 12, 31).expect("valid year");
    for (day_ix, date) in start.iter_days().take_while(|d| *d <= end).enumerate() {
        let month = date.month0() as usize;
        let season = (2.0 * std::f64::consts::PI * (date.month() as f64 - 7.0) / 12.0).cos();
        for (s_ix, site) in sites.iter().enumerate() {
            // one-in-three sampling schedule with occasional outages
            if (day_ix + s_ix) % 3 != 0 || rng.gen_bool(0.05) {
                continue;
            }
            for (f_ix, &f) in site.factors.iter().enumerate() {
                let (level, spread, mut noise, amp) = factor_profile(f);
                if month == 6 && f == EnvFactor::Pm25 {
                    noise *= 3.0;
                }
                let mut v = level + amp * season + site.offset[f_ix][month] + noise * unit.sample(rng);
                // July fire episodes show in sulfur dioxide peaks rather than its level
                if month == 6 && f == EnvFactor::So2 && rng.gen_bool(0.15) {
                    v += 6.0 * spread * (site.smoke + 1.5).max(0.0) * rng.gen_range(0.5..1.5);
                }
                if f != EnvFactor::Temperature {
                    v = v.max(0.0);
                }
                out.push(StationDay {
                    station_id: site.id.clone(),
                    latitude: site.lat,
                    longitude: site.lon,
                    county_fips: site.county.clone(),
                    date,
                    factor: f,
                    value: round_to(v, 4),
                });
            }
        }
    }
    out
}

fn gen_emissions(rng: &mut ChaCha8Rng, counties: &[CountyRef], fire: &FireField) -> Vec<EmissionRecord> {
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut out = Vec::new();
    for c in counties {
        for (i, &cat) in EmissionCategory::ALL.iter().enumerate() {
            let wildfire = cat == EmissionCategory::Wildfires;
            if !wildfire && !rng.gen_bool(0.9) {
                continue;
            }
            let mu = 2.0 + (i % 5) as f64;
            let log_tonnes = if wildfire {
                mu + fire.at(c.centroid_lat, c.centroid_lon) + 0.4 * unit.sample(rng)
            } else {
                mu + unit.sample(rng)
            };
            out.push(EmissionRecord {
                county_fips: c.county_fips.clone(),
                category: cat,
                tonnes_per_year: round_to(log_tonnes.exp(), 3),
            });
        }
    }
    out
}

fn maybe<T, R: Rng>(rng: &mut R, p_missing: f64, v: T) -> Option<T> {
    if rng.gen_bool(p_missing) {
        None
    } else {
        Some(v)
    }
}

fn gen_profile(rng: &mut ChaCha8Rng, i: usize, counties: &[CountyRef]) -> PersonProfile {
    let county = counties.choose(rng).expect("counties").county_fips.clone();
    let age: u32 = rng.gen_range(2..=85);
    let gender = match rng.gen_range(0..100) {
        0..=47 => Gender::Male,
        48..=95 => Gender::Female,
        _ => Gender::Unknown,
    };
    let race = pick(
        rng,
        &[("White", 0.55), ("Black", 0.13), ("Asian", 0.07), ("Hispanic", 0.18), ("Other", 0.07)],
    );
    let employment = if age < 18 {
        "student"
    } else if age >= 65 {
        pick(rng, &[("retired", 0.8), ("part-time", 0.1), ("full-time", 0.1)])
    } else {
        pick(
            rng,
            &[
                ("full-time", 0.55),
                ("part-time", 0.15),
                ("unemployed", 0.12),
                ("student", 0.06),
                ("homemaker", 0.12),
            ],
        )
    };
    let hours = match employment {
        "full-time" => round_to(rng.gen_range(35.0..55.0), 1),
        "part-time" => round_to(rng.gen_range(10.0..30.0), 1),
        _ => 0.0,
    };
    let smoker = age >= 16 && rng.gen_bool(0.22);
    let lives_with_smoker = rng.gen_bool(0.25);
    let education = rng.gen_range(1..=6);
    let income = rng.gen_range(1..=10);
    let gas_stove = rng.gen_bool(0.45);
    let heating = pick(rng, &[("natural gas", 0.5), ("electricity", 0.3), ("oil", 0.1), ("wood", 0.1)]);
    let cooking = pick(rng, &[("gas", 0.45), ("electric", 0.5), ("propane", 0.05)]);
    PersonProfile {
        person_id: format!("P{:05}", i + 1),
        county_fips: maybe(rng, 0.01, county),
        age_years: age,
        gender,
        race: maybe(rng, 0.05, race.to_string()),
        asthma: AsthmaStatus::Unknown,
        smoker: maybe(rng, 0.03, smoker),
        lives_with_smoker: maybe(rng, 0.03, lives_with_smoker),
        employment_status: maybe(rng, 0.03, employment.to_string()),
        hours_work_per_week: maybe(rng, 0.05, hours),
        education_level: maybe(rng, 0.05, education),
        income_bracket: maybe(rng, 0.08, income),
        gas_stove: maybe(rng, 0.03, gas_stove),
        heating_fuel: maybe(rng, 0.04, heating.to_string()),
        cooking_fuel: maybe(rng, 0.04, cooking.to_string()),
    }
}

struct Block {
    activity: &'static str,
    location: &'static str,
    minutes: u32,
    hb: bool,
}

fn gen_diary(rng: &mut ChaCha8Rng, p: &PersonProfile, years: &RangeInclusive<i32>) -> Vec<DiaryEntry> {
    if rng.gen_bool(0.01) {
        return Vec::new();
    }
    let exercise_mean: f64 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(10.0..90.0) };
    let hb_rate: f64 = rng.gen_range(0.0..0.3);
    let work_per_day = p.hours_work_per_week.unwrap_or(0.0) * 12.0;
    let work_loc = pick(
        rng,
        &[("office", 0.35), ("work", 0.2), ("worksite_outdoor", 0.15), ("home", 0.1), ("store", 0.1), ("school", 0.1)],
    );
    // per awake block; diaries flag smoke exposure, not only own smoking
    let smoke_rate = 0.03
        + if p.smoker == Some(true) { 0.12 } else { 0.0 }
        + if p.lives_with_smoker == Some(true) { 0.08 } else { 0.0 };

    let n_days = rng.gen_range(1..=3);
    let first = NaiveDate::from_ymd_opt(*years.start(), 1, 1).expect("valid year");
    let last = NaiveDate::from_ymd_opt(*years.end(), 12, 31).expect("valid year");
    let span = (last - first).num_days();
    let mut dates: Vec<NaiveDate> = (0..n_days)
        .map(|_| first + chrono::Duration::days(rng.gen_range(0..=span)))
        .collect();
    dates.sort();
    dates.dedup();

    let mut out = Vec::new();
    for date in dates {
        let mut blocks = vec![Block {
            activity: "sleep",
            location: if rng.gen_bool(0.1) { "30121" } else { "home" },
            minutes: rng.gen_range(360..=540),
            hb: false,
        }];
        let mut day = Vec::new();
        if work_per_day > 0.0 && rng.gen_bool(5.0 / 7.0) {
            day.push(Block {
                activity: if work_loc == "worksite_outdoor" { "work_outdoor" } else { "work" },
                location: work_loc,
                minutes: (work_per_day * rng.gen_range(0.8..1.2)).round() as u32,
                hb: false,
            });
            if work_loc != "home" {
                day.push(Block {
                    activity: "commute",
                    location: pick(rng, &[("car", 0.7), ("bus", 0.2), ("train", 0.1)]),
                    minutes: rng.gen_range(15..=60),
                    hb: false,
                });
            }
        }
        if exercise_mean > 0.0 {
            let activity = pick(rng, &[("exercise", 0.5), ("sport", 0.2), ("hiking", 0.15), ("cycling", 0.15)]);
            let location = match activity {
                "hiking" => "park",
                "cycling" => "bicycle_lane",
                _ => pick(rng, &[("gym", 0.6), ("park", 0.4)]),
            };
            day.push(Block {
                activity,
                location,
                minutes: ((exercise_mean * rng.gen_range(0.5..1.5)).round() as u32).clamp(1, 180),
                hb: rng.gen_bool(0.4),
            });
        }
        day.push(Block {
            activity: "walking",
            location: pick(rng, &[("street", 0.6), ("park", 0.3), ("unknown", 0.1)]),
            minutes: rng.gen_range(5..=60),
            hb: false,
        });
        day.shuffle(rng);
        blocks.extend(day);
        let fill: [(&str, f64); 9] = [
            ("leisure", 0.2),
            ("tv", 0.2),
            ("reading", 0.1),
            ("eating", 0.15),
            ("cooking", 0.1),
            ("chores", 0.1),
            ("shopping", 0.05),
            ("personal_care", 0.1),
            ("volunteering", 0.003),
        ];
        let mut used: u32 = blocks.iter().map(|b| b.minutes).sum();
        while used < 1440 {
            let activity = pick(rng, &fill);
            let location = match activity {
                "shopping" => "store",
                "eating" => pick(rng, &[("home", 0.7), ("restaurant", 0.3)]),
                "leisure" => pick(rng, &[("home", 0.4), ("other_indoor", 0.3), ("home_yard", 0.2), ("other_outdoor", 0.1)]),
                _ => "home",
            };
            let minutes = rng.gen_range(20..=180);
            blocks.push(Block {
                activity,
                location,
                minutes,
                hb: false,
            });
            used += minutes;
        }

        let mut start: u32 = 0;
        for b in blocks {
            if start >= 1440 {
                break;
            }
            let minutes = b.minutes.min(1440 - start);
            let awake = b.activity != "sleep";
            out.push(DiaryEntry {
                person_id: p.person_id.clone(),
                date,
                start_min: start as u16,
                duration_min: minutes,
                activity_code: b.activity.to_string(),
                location_code: b.location.to_string(),
                smoking: awake && rng.gen_bool(smoke_rate),
                heavy_breathing: b.hb || (awake && rng.gen_bool(hb_rate)),
            });
            start += minutes;
        }
    }
    out
}

fn lookup(
    name: &str,
    p: &PersonProfile,
    person: &BTreeMap<String, NamedValues>,
    emission: &BTreeMap<CountyFips, NamedValues>,
    pollution: &BTreeMap<CountyFips, NamedValues>,
) -> Option<f64> {
    let county_value = |m: &BTreeMap<CountyFips, NamedValues>| {
        p.county_fips.as_ref().and_then(|c| m.get(c)).and_then(|v| v.get(name).copied().flatten())
    };
    if name.starts_with("FE_") {
        county_value(emission)
    } else if name.starts_with("FA_") {
        county_value(pollution)
    } else {
        person.get(&p.person_id).and_then(|v| v.get(name).copied().flatten())
    }
}

fn known_name(
    name: &str,
    person: &BTreeMap<String, NamedValues>,
    emission: &BTreeMap<CountyFips, NamedValues>,
    pollution: &BTreeMap<CountyFips, NamedValues>,
) -> bool {
    person.values().any(|v| v.contains_key(name))
        || emission.values().any(|v| v.contains_key(name))
        || pollution.values().any(|v| v.contains_key(name))
}

/// Median-imputed, population z-scored column.
fn standardise(values: &[Option<f64>]) -> Vec<f64> {
    let mut present: Vec<f64> = values.iter().flatten().copied().collect();
    present.sort_by(f64::total_cmp);
    let median = match present.len() {
        0 => 0.0,
        n if n % 2 == 1 => present[n / 2],
        n => (present[n / 2 - 1] + present[n / 2]) / 2.0,
    };
    let filled: Vec<f64> = values.iter().map(|v| v.unwrap_or(median)).collect();
    let n = filled.len() as f64;
    let mean = filled.iter().sum::<f64>() / n;
    let sd = (filled.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    filled.iter().map(|v| (v - mean) / sd).collect()
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Intercept making the mean predicted probability [`TARGET_POSITIVE_RATE`].
fn tune_intercept(eta: &[f64]) -> f64 {
    let rate = |b: f64| eta.iter().map(|e| sigmoid(b + e)).sum::<f64>() / eta.len() as f64;
    let (mut lo, mut hi) = (-30.0, 30.0);
    for _ in 0..200 {
        let mid = (lo + hi) / 2.0;
        if rate(mid) < TARGET_POSITIVE_RATE {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) / 2.0
}

/// Generates all inputs in memory and draws labels.
pub fn simulate(spec: &SynthSpec) -> Result<(SynthData, GroundTruth), SynthError> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let counties = gen_counties(&mut rng, spec.n_counties);
    let fire = FireField::new(&mut rng, &counties);
    let stations = gen_stations(&mut rng, spec.n_stations, &counties, &fire, &spec.years);
    let emissions = gen_emissions(&mut rng, &counties, &fire);
    let mut profiles: Vec<PersonProfile> = (0..spec.n_people).map(|i| gen_profile(&mut rng, i, &counties)).collect();
    let mut diaries = Vec::new();
    for p in &profiles {
        diaries.extend(gen_diary(&mut rng, p, &spec.years));
    }

    let mapping = CategoryMapping::default_mapping();
    let v = extract_vectors(
        &profiles,
        &diaries,
        &emissions,
        &stations,
        &counties,
        &mapping,
        spec.years.clone(),
        DEFAULT_NEIGHBORS,
    )?;
    let mut eta = vec![0.0; profiles.len()];
    for (name, beta) in &spec.planted {
        if !known_name(name, &v.person, &v.emission, &v.pollution) {
            return Err(SynthError::UnknownPlantedFeature(name.clone()));
        }
        let raw: Vec<Option<f64>> = profiles
            .iter()
            .map(|p| lookup(name, p, &v.person, &v.emission, &v.pollution))
            .collect();
        for (e, z) in eta.iter_mut().zip(standardise(&raw)) {
            *e += beta * z;
        }
    }
    if spec.noise_scale > 0.0 {
        let noise = Normal::new(0.0, spec.noise_scale).expect("valid noise scale");
        for e in &mut eta {
            *e += noise.sample(&mut rng);
        }
    }
    let intercept = tune_intercept(&eta);
    let (mut pos, mut known) = (0usize, 0usize);
    for (p, e) in profiles.iter_mut().zip(&eta) {
        let positive = rng.gen_bool(sigmoid(intercept + e));
        if rng.gen_bool(0.02) {
            continue;
        }
        p.asthma = if positive { AsthmaStatus::Yes } else { AsthmaStatus::No };
        known += 1;
        pos += usize::from(positive);
    }
    let truth = GroundTruth {
        planted: spec.planted.clone(),
        intercept,
        positive_rate: pos as f64 / known.max(1) as f64,
    };
    let data = SynthData {
        profiles,
        diaries,
        emissions,
        stations,
        counties,
    };
    Ok((data, truth))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), SynthError> {
    let path = dir.join(name);
    write_atomic(&path, bytes).map_err(|source| SynthError::Io { path, source })
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing CSV to memory");
    buf
}

/// Writes the input files, the category map and `ground_truth.csv` to `out_dir`.
pub fn generate(spec: &SynthSpec, out_dir: &Path) -> Result<GroundTruth, SynthError> {
    let (data, truth) = simulate(spec)?;
    fs::create_dir_all(out_dir).map_err(|source| SynthError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_file(out_dir, PROFILES_FILE, &csv_bytes(|b| write_profiles(b, &data.profiles)))?;
    write_file(out_dir, DIARIES_FILE, &csv_bytes(|b| write_diaries(b, &data.diaries)))?;
    write_file(out_dir, EMISSIONS_FILE, &csv_bytes(|b| write_emissions(b, &data.emissions)))?;
    write_file(out_dir, STATIONS_FILE, &csv_bytes(|b| write_station_days(b, &data.stations)))?;
    write_file(out_dir, COUNTIES_FILE, &csv_bytes(|b| write_counties(b, &data.counties)))?;
    write_file(out_dir, CATEGORY_MAP_FILE, DEFAULT_CATEGORY_MAP.as_bytes())?;
    write_file(out_dir, GROUND_TRUTH_FILE, truth.to_csv().as_bytes())?;
    Ok(truth)
}
