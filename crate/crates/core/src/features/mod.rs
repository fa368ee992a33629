//! Personal (`FP_`), emission (`FE_`) and air-quality (`FA_`) feature
//! families and their assembly into a named feature matrix.

mod activity;
mod environment;
mod mapping;
mod matrix;
mod profile;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;

use thiserror::Error;

pub use activity::{activity_column_names, activity_features, ActivityFeatures};
pub use environment::{
    emission_column_names, emission_features, pollution_column_name, pollution_column_names,
    pollution_features,
};
pub use mapping::{ActivityCategory, CategoryMapping, LocationCategory, CATEGORY_MAP_HEADER, DEFAULT_CATEGORY_MAP};
pub use matrix::{assemble_matrix, AssembledMatrix, Family, FamilySet, FeatureMatrix, UnmappedCounty};
pub use profile::profile_features;

use crate::ingest::{
    group_diaries, CountyFips, DiaryEntry, EmissionRecord, PersonProfile, StationDay,
};
use crate::spatial::{county_climatology, CountyRef, SpatialError};

/// Partial feature vector: column name to value, `None` for a missing cell.
pub type NamedValues = BTreeMap<String, Option<f64>>;

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("person has no diary entries")]
    EmptyDiary,
    #[error("diary entries mix persons `{expected}` and `{found}`")]
    MixedPersons { expected: String, found: String },
    #[error("no personal feature vector for cohort member `{0}`")]
    MissingPersonVector(String),
    #[error("features file line {line}: {reason}")]
    BadFeatureFile { line: u64, reason: String },
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

/// Per-person and per-county feature vectors for a whole dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVectors {
    pub person: BTreeMap<String, NamedValues>,
    pub emission: BTreeMap<CountyFips, NamedValues>,
    pub pollution: BTreeMap<CountyFips, NamedValues>,
    /// People with a profile but no diary entries; their activity block is missing.
    pub without_diary: Vec<String>,
    /// Diary codes not present in the category mapping (counted in no category).
    pub unmapped_codes: BTreeSet<String>,
}

/// Computes every feature family from parsed inputs.
///
/// Emission vectors exist for counties that appear in the inventory; pollution
/// vectors for every county in `counties`.
#[allow(clippy::too_many_arguments)]
pub fn extract_vectors(
    profiles: &[PersonProfile],
    diaries: &[DiaryEntry],
    emissions: &[EmissionRecord],
    stations: &[StationDay],
    counties: &[CountyRef],
    mapping: &CategoryMapping,
    years: RangeInclusive<i32>,
    neighbors: usize,
) -> Result<FeatureVectors, FeatureError> {
    let mut out = FeatureVectors::default();
    let index = group_diaries(diaries);
    for e in diaries {
        if !mapping.knows_activity(&e.activity_code) {
            out.unmapped_codes.insert(format!("activity:{}", e.activity_code));
        }
        if !mapping.knows_location(&e.location_code) {
            out.unmapped_codes.insert(format!("location:{}", e.location_code));
        }
    }
    for p in profiles {
        let mut v = profile_features(p);
        match index.get(p.person_id.as_str()) {
            Some(days) => {
                let entries: Vec<&DiaryEntry> = days.values().flatten().copied().collect();
                v.extend(activity_features(&entries, mapping)?.named());
            }
            None => {
                out.without_diary.push(p.person_id.clone());
                v.extend(ActivityFeatures::missing_named());
            }
        }
        out.person.insert(p.person_id.clone(), v);
    }

    let emission_counties: BTreeSet<&CountyFips> = emissions.iter().map(|r| &r.county_fips).collect();
    for c in emission_counties {
        out.emission.insert(c.clone(), emission_features(emissions, c));
    }

    let climatology = county_climatology(stations, counties, years, neighbors)?;
    for (c, stats) in &climatology {
        out.pollution.insert(c.clone(), pollution_features(stats));
    }
    Ok(out)
}
