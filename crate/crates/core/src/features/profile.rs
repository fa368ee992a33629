use super::NamedValues;
use crate::ingest::{Gender, PersonProfile};

/// Lowercase `[a-z0-9_]` form of a categorical value for use in a column name.
pub(crate) fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.trim().chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    let out = out.trim_matches('_').to_string();
    if out.is_empty() || out == "missing" {
        format!("v_{out}")
    } else {
        out
    }
}

fn one_hot(out: &mut NamedValues, base: &str, value: &Option<String>) {
    if let Some(v) = value {
        out.insert(format!("{base}_{}", slug(v)), Some(1.0));
    }
    out.insert(format!("{base}_missing"), Some(f64::from(u8::from(value.is_none()))));
}

fn tri_state(out: &mut NamedValues, base: &str, value: Option<bool>) {
    out.insert(base.to_string(), Some(f64::from(u8::from(value == Some(true)))));
    out.insert(format!("{base}_missing"), Some(f64::from(u8::from(value.is_none()))));
}

/// Numeric encoding of the profile block.
///
/// Categorical values become one-hot columns; a one-hot column a person does
/// not emit is zero for that person. Nullable numbers stay missing here and are
/// imputed at matrix assembly.
pub fn profile_features(p: &PersonProfile) -> NamedValues {
    let mut out = NamedValues::new();
    out.insert("FP_age".into(), Some(f64::from(p.age_years)));
    let (female, male) = match p.gender {
        Gender::Female => (1.0, 0.0),
        Gender::Male => (0.0, 1.0),
        Gender::Unknown => (0.0, 0.0),
    };
    out.insert("FP_gender_female".into(), Some(female));
    out.insert("FP_gender_male".into(), Some(male));
    out.insert(
        "FP_gender_missing".into(),
        Some(f64::from(u8::from(p.gender == Gender::Unknown))),
    );
    one_hot(&mut out, "FP_race", &p.race);
    tri_state(&mut out, "FP_smoker", p.smoker);
    tri_state(&mut out, "FP_lives_with_smoker", p.lives_with_smoker);
    one_hot(&mut out, "FP_employment", &p.employment_status);
    out.insert("FP_hours_work".into(), p.hours_work_per_week);
    out.insert("FP_education".into(), p.education_level.map(f64::from));
    out.insert("FP_income".into(), p.income_bracket.map(f64::from));
    tri_state(&mut out, "FP_gas_stove", p.gas_stove);
    one_hot(&mut out, "FP_heating_fuel", &p.heating_fuel);
    one_hot(&mut out, "FP_cooking_fuel", &p.cooking_fuel);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::AsthmaStatus;

    fn base() -> PersonProfile {
        PersonProfile {
            person_id: "P1".into(),
            county_fips: Some("06059".parse().unwrap()),
            age_years: 10,
            gender: Gender::Female,
            race: Some("Asian American".into()),
            asthma: AsthmaStatus::Yes,
            smoker: None,
            lives_with_smoker: Some(true),
            employment_status: None,
            hours_work_per_week: Some(40.0),
            education_level: None,
            income_bracket: Some(3),
            gas_stove: Some(false),
            heating_fuel: Some("natural gas".into()),
            cooking_fuel: None,
        }
    }

    #[test]
    fn encodes_table_fields() {
        let f = profile_features(&base());
        assert_eq!(f["FP_age"], Some(10.0));
        assert_eq!(f["FP_gender_female"], Some(1.0));
        assert_eq!(f["FP_gender_male"], Some(0.0));
        assert_eq!(f["FP_hours_work"], Some(40.0));
        assert_eq!(f["FP_race_asian_american"], Some(1.0));
        assert_eq!(f["FP_race_missing"], Some(0.0));
        assert_eq!(f["FP_heating_fuel_natural_gas"], Some(1.0));
        assert_eq!(f["FP_cooking_fuel_missing"], Some(1.0));
        assert_eq!(f["FP_income"], Some(3.0));
    }

    #[test]
    fn unknown_tri_state() {
        let f = profile_features(&base());
        assert_eq!(f["FP_smoker"], Some(0.0));
        assert_eq!(f["FP_smoker_missing"], Some(1.0));
        assert_eq!(f["FP_lives_with_smoker"], Some(1.0));
        assert_eq!(f["FP_lives_with_smoker_missing"], Some(0.0));
    }

    #[test]
    fn nullable_numbers_stay_missing() {
        let f = profile_features(&base());
        assert_eq!(f["FP_education"], None);
    }

    #[test]
    fn slugs() {
        assert_eq!(slug(" Part-time / seasonal "), "part_time_seasonal");
        assert_eq!(slug("missing"), "v_missing");
    }
}
