use std::collections::BTreeMap;

use chrono::NaiveDate;

use super::mapping::{ActivityCategory, CategoryMapping, LocationCategory};
use super::{FeatureError, NamedValues};
use crate::ingest::DiaryEntry;

/// Daily-average time budget of one person, in minutes (counts for `n_*`).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityFeatures {
    /// Indexed by [`LocationCategory::index`].
    pub t_location: [f64; 5],
    /// Indexed by [`ActivityCategory::index`].
    pub t_activity: [f64; 6],
    pub t_hb: f64,
    pub t_s: f64,
    pub n_hb: f64,
    pub n_s: f64,
}

#[derive(Default)]
struct DayTotals {
    location: [u64; 5],
    activity: [u64; 6],
    hb_minutes: u64,
    smoke_minutes: u64,
    hb_count: u64,
    smoke_count: u64,
}

/// Per-day sums of durations (and flagged-entry counts) averaged over every
/// diary day of the person. Overlapping categories count an entry in each.
pub fn activity_features(
    entries: &[&DiaryEntry],
    mapping: &CategoryMapping,
) -> Result<ActivityFeatures, FeatureError> {
    let first = entries.first().ok_or(FeatureError::EmptyDiary)?;
    let mut days: BTreeMap<NaiveDate, DayTotals> = BTreeMap::new();
    for e in entries {
        if e.person_id != first.person_id {
            return Err(FeatureError::MixedPersons {
                expected: first.person_id.clone(),
                found: e.person_id.clone(),
            });
        }
        let day = days.entry(e.date).or_default();
        let d = u64::from(e.duration_min);
        for c in mapping.location(&e.location_code) {
            day.location[c.index()] += d;
        }
        for c in mapping.activity(&e.activity_code) {
            day.activity[c.index()] += d;
        }
        if e.heavy_breathing {
            day.hb_minutes += d;
            day.hb_count += 1;
        }
        if e.smoking {
            day.smoke_minutes += d;
            day.smoke_count += 1;
        }
    }

    let n_days = days.len() as f64;
    let mean = |f: &dyn Fn(&DayTotals) -> u64| days.values().map(f).sum::<u64>() as f64 / n_days;
    let mut t_location = [0.0; 5];
    for (k, t) in t_location.iter_mut().enumerate() {
        *t = mean(&|d| d.location[k]);
    }
    let mut t_activity = [0.0; 6];
    for (k, t) in t_activity.iter_mut().enumerate() {
        *t = mean(&|d| d.activity[k]);
    }
    Ok(ActivityFeatures {
        t_location,
        t_activity,
        t_hb: mean(&|d| d.hb_minutes),
        t_s: mean(&|d| d.smoke_minutes),
        n_hb: mean(&|d| d.hb_count),
        n_s: mean(&|d| d.smoke_count),
    })
}

/// Column names of the activity block, in [`ActivityFeatures::named`] order.
pub fn activity_column_names() -> Vec<String> {
    let mut names: Vec<String> = LocationCategory::ALL
        .iter()
        .map(|c| format!("FP_t_at_{}", c.key()))
        .collect();
    names.extend(ActivityCategory::ALL.iter().map(|c| format!("FP_t_{}", c.key())));
    names.extend(["FP_t_hb", "FP_t_smoking", "FP_n_hb", "FP_n_smoking"].map(String::from));
    names
}

impl ActivityFeatures {
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.t_location.to_vec();
        v.extend_from_slice(&self.t_activity);
        v.extend([self.t_hb, self.t_s, self.n_hb, self.n_s]);
        v
    }

    pub fn named(&self) -> NamedValues {
        activity_column_names()
            .into_iter()
            .zip(self.values())
            .map(|(n, v)| (n, Some(v)))
            .collect()
    }

    /// All activity columns present but missing, for people without diaries.
    pub fn missing_named() -> NamedValues {
        activity_column_names().into_iter().map(|n| (n, None)).collect()
    }

    pub fn location(&self, c: LocationCategory) -> f64 {
        self.t_location[c.index()]
    }

    pub fn activity(&self, c: ActivityCategory) -> f64 {
        self.t_activity[c.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(day: u32, act: &str, loc: &str, dur: u32, smoke: bool, hb: bool) -> DiaryEntry {
        DiaryEntry {
            person_id: "P1".into(),
            date: NaiveDate::from_ymd_opt(2001, 6, day).unwrap(),
            start_min: 0,
            duration_min: dur,
            activity_code: act.into(),
            location_code: loc.into(),
            smoking: smoke,
            heavy_breathing: hb,
        }
    }

    #[test]
    fn single_entry() {
        let m = CategoryMapping::default_mapping();
        let e = entry(3, "sleep", "home", 480, false, false);
        let f = activity_features(&[&e], &m).unwrap();
        assert_eq!(f.activity(ActivityCategory::Sleep), 480.0);
        assert_eq!(f.location(LocationCategory::Home), 480.0);
        assert_eq!(f.activity(ActivityCategory::Work), 0.0);
        assert_eq!(f.location(LocationCategory::Outdoor), 0.0);
        assert_eq!(f.n_hb, 0.0);
    }

    #[test]
    fn two_day_hand_example() {
        let m = CategoryMapping::default_mapping();
        let es = [
            entry(1, "sleep", "home", 400, false, false),
            entry(1, "work", "work", 200, false, true),
            entry(2, "sleep", "home", 500, false, false),
        ];
        let refs: Vec<&DiaryEntry> = es.iter().collect();
        let f = activity_features(&refs, &m).unwrap();
        assert_eq!(f.activity(ActivityCategory::Sleep), 450.0);
        assert_eq!(f.activity(ActivityCategory::Work), 100.0);
        assert_eq!(f.location(LocationCategory::Home), 450.0);
        assert_eq!(f.location(LocationCategory::Work), 100.0);
        assert_eq!(f.t_hb, 100.0);
        assert_eq!(f.n_hb, 0.5);
        assert_eq!(f.t_s, 0.0);
    }

    #[test]
    fn overlapping_location_counts_twice() {
        let m = CategoryMapping::default_mapping();
        let e = entry(1, "tv", "30121", 90, true, false);
        let f = activity_features(&[&e], &m).unwrap();
        assert_eq!(f.location(LocationCategory::Home), 90.0);
        assert_eq!(f.location(LocationCategory::Indoor), 90.0);
        assert_eq!(f.t_s, 90.0);
        assert_eq!(f.n_s, 1.0);
    }

    #[test]
    fn errors() {
        let m = CategoryMapping::default_mapping();
        assert_eq!(activity_features(&[], &m), Err(FeatureError::EmptyDiary));
        let a = entry(1, "sleep", "home", 10, false, false);
        let mut b = a.clone();
        b.person_id = "P2".into();
        assert!(matches!(
            activity_features(&[&a, &b], &m),
            Err(FeatureError::MixedPersons { .. })
        ));
    }

    #[test]
    fn names_match_values() {
        let names = activity_column_names();
        assert_eq!(names.len(), 15);
        assert!(names.contains(&"FP_t_exercise".to_string()));
        assert!(names.contains(&"FP_t_at_work".to_string()));
    }
}
