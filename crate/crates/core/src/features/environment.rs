use super::NamedValues;
use crate::ingest::{CountyFips, EmissionCategory, EnvFactor};
use crate::spatial::MonthlyStats;

/// One `FE_` column per inventory category. Categories with no record for the
/// county are zero: an inventory lists every source it has estimates for.
pub fn emission_features(
    records: &[crate::ingest::EmissionRecord],
    county: &CountyFips,
) -> NamedValues {
    let mut out: NamedValues = EmissionCategory::ALL
        .iter()
        .map(|c| (c.column_name(), Some(0.0)))
        .collect();
    for r in records.iter().filter(|r| &r.county_fips == county) {
        out.insert(r.category.column_name(), Some(r.tonnes_per_year));
    }
    out
}

pub fn emission_column_names() -> Vec<String> {
    EmissionCategory::ALL.iter().map(|c| c.column_name()).collect()
}

pub const STAT_KEYS: [&str; 3] = ["max", "mean", "min"];

pub fn pollution_column_name(factor: EnvFactor, stat: &str, month: u32) -> String {
    format!("FA_{}_{stat}_m{month}", factor.key())
}

pub fn pollution_column_names() -> Vec<String> {
    let mut v = Vec::with_capacity(288);
    for f in EnvFactor::ALL {
        for s in STAT_KEYS {
            for m in 1..=12 {
                v.push(pollution_column_name(f, s, m));
            }
        }
    }
    v
}

/// `FA_<factor>_<stat>_m<month>` columns for one county. Every one of the 288
/// names is present; factor/month combinations without data are missing.
pub fn pollution_features(stats: &[MonthlyStats]) -> NamedValues {
    let mut out: NamedValues = pollution_column_names().into_iter().map(|n| (n, None)).collect();
    for s in stats {
        for (key, v) in STAT_KEYS.iter().zip([s.f_max, s.f_mean, s.f_min]) {
            out.insert(pollution_column_name(s.factor, key, s.month), v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::EmissionRecord;

    #[test]
    fn emission_block() {
        let c: CountyFips = "06059".parse().unwrap();
        let other: CountyFips = "06037".parse().unwrap();
        let recs = vec![
            EmissionRecord {
                county_fips: c.clone(),
                category: EmissionCategory::Wildfires,
                tonnes_per_year: 850.2,
            },
            EmissionRecord {
                county_fips: other,
                category: EmissionCategory::Mining,
                tonnes_per_year: 5.0,
            },
        ];
        let f = emission_features(&recs, &c);
        assert_eq!(f["FE_Wildfires"], Some(850.2));
        assert_eq!(f["FE_Mining"], Some(0.0));
        assert_eq!(f.len(), EmissionCategory::ALL.len());
    }

    #[test]
    fn pollution_block() {
        let june = MonthlyStats {
            factor: EnvFactor::Pm25,
            month: 6,
            f_max: Some(35.0),
            f_mean: Some(25.0),
            f_min: Some(15.0),
            years_covered: vec![2001, 2002],
        };
        let f = pollution_features(&[june]);
        assert_eq!(f.len(), 8 * 3 * 12);
        assert_eq!(f["FA_pm25_max_m6"], Some(35.0));
        assert_eq!(f["FA_pm25_min_m6"], Some(15.0));
        assert_eq!(f["FA_pm25_max_m2"], None);
        assert_eq!(f["FA_wind_speed_mean_m12"], None);
    }
}
