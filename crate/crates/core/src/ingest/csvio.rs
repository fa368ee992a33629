//! Reading and writing the four input tables.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use csv::StringRecord;

use super::error::IngestError;
use super::records::*;
use crate::util::fmt_opt;

pub const PROFILE_HEADER: &[&str] = &[
    "person_id",
    "county_fips",
    "age_years",
    "gender",
    "race",
    "asthma",
    "smoker",
    "lives_with_smoker",
    "employment_status",
    "hours_work_per_week",
    "education_level",
    "income_bracket",
    "gas_stove",
    "heating_fuel",
    "cooking_fuel",
];

pub const DIARY_HEADER: &[&str] = &[
    "person_id",
    "date",
    "start_min",
    "duration_min",
    "activity_code",
    "location_code",
    "smoking_flag",
    "heavy_breathing_flag",
];

pub const EMISSION_HEADER: &[&str] = &["county_fips", "category", "tonnes_per_year"];

pub const STATION_HEADER: &[&str] = &[
    "station_id",
    "latitude",
    "longitude",
    "county_fips",
    "date",
    "factor",
    "value",
];

/// A validated CSV row with its source position, handing out typed cells.
pub(crate) struct Row<'a> {
    file: &'a str,
    header: &'static [&'static str],
    pub line: u64,
    record: StringRecord,
}

impl<'a> Row<'a> {
    pub fn raw(&self, col: usize) -> &str {
        self.record.get(col).unwrap_or("").trim()
    }

    pub fn malformed(&self, col: usize, reason: impl Into<String>) -> IngestError {
        IngestError::MalformedRow {
            file: self.file.to_string(),
            line: self.line,
            column: self.header[col].to_string(),
            reason: reason.into(),
        }
    }

    pub fn required(&self, col: usize) -> Result<&str, IngestError> {
        let v = self.raw(col);
        if v.is_empty() {
            Err(self.malformed(col, "required value is empty"))
        } else {
            Ok(v)
        }
    }

    pub fn optional_string(&self, col: usize) -> Option<String> {
        let v = self.raw(col);
        (!v.is_empty()).then(|| v.to_string())
    }

    pub fn parse<T: std::str::FromStr>(&self, col: usize) -> Result<T, IngestError> {
        let v = self.required(col)?;
        v.parse()
            .map_err(|_| self.malformed(col, format!("cannot parse `{v}`")))
    }

    pub fn parse_opt<T: std::str::FromStr>(&self, col: usize) -> Result<Option<T>, IngestError> {
        if self.raw(col).is_empty() {
            Ok(None)
        } else {
            self.parse(col).map(Some)
        }
    }

    pub fn finite(&self, col: usize) -> Result<f64, IngestError> {
        let v: f64 = self.parse(col)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.malformed(col, "value must be finite"))
        }
    }

    pub fn date(&self, col: usize) -> Result<NaiveDate, IngestError> {
        let v = self.required(col)?;
        NaiveDate::parse_from_str(v, "%Y-%m-%d")
            .map_err(|_| self.malformed(col, format!("`{v}` is not a YYYY-MM-DD date")))
    }

    pub fn fips_opt(&self, col: usize) -> Result<Option<CountyFips>, IngestError> {
        let v = self.raw(col);
        if v.is_empty() {
            return Ok(None);
        }
        v.parse().map(Some).map_err(|e: String| self.malformed(col, e))
    }

    pub fn bool_opt(&self, col: usize) -> Result<Option<bool>, IngestError> {
        let v = self.raw(col);
        match v.to_ascii_lowercase().as_str() {
            "" => Ok(None),
            "1" | "y" | "yes" | "true" => Ok(Some(true)),
            "0" | "n" | "no" | "false" => Ok(Some(false)),
            _ => Err(self.malformed(col, format!("`{v}` is not a yes/no value"))),
        }
    }

    /// Strict 0/1 flag.
    pub fn flag(&self, col: usize) -> Result<bool, IngestError> {
        let v = self.required(col)?;
        match v.parse::<i64>() {
            Ok(0) => Ok(false),
            Ok(1) => Ok(true),
            Ok(_) => Err(IngestError::FlagOutOfRange {
                file: self.file.to_string(),
                line: self.line,
                column: self.header[col].to_string(),
                value: v.to_string(),
            }),
            Err(_) => Err(self.malformed(col, format!("`{v}` is not an integer flag"))),
        }
    }
}

/// Checks the header and streams each data row to `f`.
pub(crate) fn for_each_row<R: Read>(
    reader: R,
    file: &str,
    header: &'static [&'static str],
    mut f: impl FnMut(Row<'_>) -> Result<(), IngestError>,
) -> Result<(), IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let missing_header = || IngestError::MissingHeader {
        file: file.to_string(),
        expected: header.join(","),
    };
    let first = match records.next() {
        Some(Ok(r)) => r,
        Some(Err(_)) | None => return Err(missing_header()),
    };
    let found: Vec<&str> = first.iter().map(|s| s.trim().trim_start_matches('\u{feff}')).collect();
    if found != header {
        return Err(missing_header());
    }
    for rec in records {
        let record = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            IngestError::MalformedRow {
                file: file.to_string(),
                line,
                column: String::new(),
                reason: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record.get(0).is_none_or(|s| s.trim().is_empty()) {
            continue;
        }
        if record.len() != header.len() {
            return Err(IngestError::MalformedRow {
                file: file.to_string(),
                line,
                column: String::new(),
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        f(Row {
            file,
            header,
            line,
            record,
        })?;
    }
    Ok(())
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn display_name(path: &Path) -> String {
    path.display().to_string()
}

fn parse_gender(row: &Row<'_>, col: usize) -> Result<Gender, IngestError> {
    let v = row.raw(col);
    match v.to_ascii_lowercase().as_str() {
        "m" | "male" => Ok(Gender::Male),
        "f" | "female" => Ok(Gender::Female),
        "" | "u" | "unknown" => Ok(Gender::Unknown),
        _ => Err(row.malformed(col, format!("unknown gender `{v}`"))),
    }
}

fn parse_asthma(row: &Row<'_>, col: usize) -> Result<AsthmaStatus, IngestError> {
    Ok(match row.bool_opt(col)? {
        Some(true) => AsthmaStatus::Yes,
        Some(false) => AsthmaStatus::No,
        None => AsthmaStatus::Unknown,
    })
}

pub fn read_profiles<R: Read>(reader: R, file: &str) -> Result<Vec<PersonProfile>, IngestError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for_each_row(reader, file, PROFILE_HEADER, |row| {
        let person_id = row.required(0)?.to_string();
        let age_years: u32 = row.parse(2)?;
        if age_years > 130 {
            return Err(row.malformed(2, format!("age {age_years} exceeds 130")));
        }
        let hours_work_per_week: Option<f64> = row.parse_opt(9)?;
        if let Some(h) = hours_work_per_week {
            if !(h.is_finite() && h >= 0.0) {
                return Err(row.malformed(9, "hours must be a non-negative number"));
            }
        }
        if !seen.insert(person_id.clone()) {
            return Err(IngestError::DuplicatePersonId {
                file: file.to_string(),
                line: row.line,
                person_id,
            });
        }
        out.push(PersonProfile {
            county_fips: row.fips_opt(1)?,
            age_years,
            gender: parse_gender(&row, 3)?,
            race: row.optional_string(4),
            asthma: parse_asthma(&row, 5)?,
            smoker: row.bool_opt(6)?,
            lives_with_smoker: row.bool_opt(7)?,
            employment_status: row.optional_string(8),
            hours_work_per_week,
            education_level: row.parse_opt(10)?,
            income_bracket: row.parse_opt(11)?,
            gas_stove: row.bool_opt(12)?,
            heating_fuel: row.optional_string(13),
            cooking_fuel: row.optional_string(14),
            person_id,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_profiles(path: &Path) -> Result<Vec<PersonProfile>, IngestError> {
    read_profiles(open(path)?, &display_name(path))
}

pub fn read_diaries<R: Read>(reader: R, file: &str) -> Result<Vec<DiaryEntry>, IngestError> {
    let mut out = Vec::new();
    for_each_row(reader, file, DIARY_HEADER, |row| {
        let start_min: u16 = row.parse(2)?;
        if start_min > 1439 {
            return Err(row.malformed(2, format!("start_min {start_min} outside 0-1439")));
        }
        let duration: i64 = row.parse(3)?;
        if duration < 1 {
            return Err(IngestError::NonPositiveDuration {
                file: file.to_string(),
                line: row.line,
                value: duration,
            });
        }
        if i64::from(start_min) + duration > 1440 + 1439 {
            return Err(row.malformed(3, "entry extends beyond the following day"));
        }
        out.push(DiaryEntry {
            person_id: row.required(0)?.to_string(),
            date: row.date(1)?,
            start_min,
            duration_min: duration as u32,
            activity_code: row.required(4)?.to_string(),
            location_code: row.required(5)?.to_string(),
            smoking: row.flag(6)?,
            heavy_breathing: row.flag(7)?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_diaries(path: &Path) -> Result<Vec<DiaryEntry>, IngestError> {
    read_diaries(open(path)?, &display_name(path))
}

pub fn read_emissions<R: Read>(reader: R, file: &str) -> Result<Vec<EmissionRecord>, IngestError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for_each_row(reader, file, EMISSION_HEADER, |row| {
        let county_fips: CountyFips = row
            .required(0)?
            .parse()
            .map_err(|e: String| row.malformed(0, e))?;
        let raw_cat = row.required(1)?;
        let category = EmissionCategory::parse(raw_cat).ok_or_else(|| IngestError::UnknownCategory {
            file: file.to_string(),
            line: row.line,
            category: raw_cat.to_string(),
        })?;
        let tonnes_per_year = row.finite(2)?;
        if tonnes_per_year < 0.0 {
            return Err(row.malformed(2, "emissions must be non-negative"));
        }
        if !seen.insert((county_fips.clone(), category)) {
            return Err(IngestError::DuplicateRecord {
                file: file.to_string(),
                line: row.line,
                key: format!("({county_fips}, {})", category.name()),
            });
        }
        out.push(EmissionRecord {
            county_fips,
            category,
            tonnes_per_year,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_emissions(path: &Path) -> Result<Vec<EmissionRecord>, IngestError> {
    read_emissions(open(path)?, &display_name(path))
}

pub fn read_station_days<R: Read>(reader: R, file: &str) -> Result<Vec<StationDay>, IngestError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for_each_row(reader, file, STATION_HEADER, |row| {
        let station_id = row.required(0)?.to_string();
        let latitude = row.finite(1)?;
        let longitude = row.finite(2)?;
        for (col, v, lim) in [(1, latitude, 90.0), (2, longitude, 180.0)] {
            if v.abs() > lim {
                return Err(IngestError::CoordinateOutOfRange {
                    file: file.to_string(),
                    line: row.line,
                    column: STATION_HEADER[col].to_string(),
                    value: v,
                });
            }
        }
        let date = row.date(4)?;
        let raw_factor = row.required(5)?;
        let factor = EnvFactor::parse(raw_factor).ok_or_else(|| IngestError::UnknownFactor {
            file: file.to_string(),
            line: row.line,
            factor: raw_factor.to_string(),
        })?;
        if !seen.insert((station_id.clone(), date, factor)) {
            return Err(IngestError::DuplicateRecord {
                file: file.to_string(),
                line: row.line,
                key: format!("({station_id}, {date}, {})", factor.key()),
            });
        }
        out.push(StationDay {
            county_fips: row.fips_opt(3)?,
            value: row.finite(6)?,
            station_id,
            latitude,
            longitude,
            date,
            factor,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_station_days(path: &Path) -> Result<Vec<StationDay>, IngestError> {
    read_station_days(open(path)?, &display_name(path))
}

fn tri(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

fn csv_writer<W: Write>(w: W, header: &[&str]) -> csv::Result<csv::Writer<W>> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(header)?;
    Ok(wtr)
}

pub fn write_profiles<W: Write>(w: W, profiles: &[PersonProfile]) -> csv::Result<()> {
    let mut wtr = csv_writer(w, PROFILE_HEADER)?;
    for p in profiles {
        let gender = match p.gender {
            Gender::Male => "M",
            Gender::Female => "F",
            Gender::Unknown => "",
        };
        let asthma = match p.asthma {
            AsthmaStatus::Yes => "1",
            AsthmaStatus::No => "0",
            AsthmaStatus::Unknown => "",
        };
        wtr.write_record([
            p.person_id.clone(),
            fmt_opt(&p.county_fips),
            p.age_years.to_string(),
            gender.to_string(),
            fmt_opt(&p.race),
            asthma.to_string(),
            tri(p.smoker).to_string(),
            tri(p.lives_with_smoker).to_string(),
            fmt_opt(&p.employment_status),
            fmt_opt(&p.hours_work_per_week),
            fmt_opt(&p.education_level),
            fmt_opt(&p.income_bracket),
            tri(p.gas_stove).to_string(),
            fmt_opt(&p.heating_fuel),
            fmt_opt(&p.cooking_fuel),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_diaries<W: Write>(w: W, entries: &[DiaryEntry]) -> csv::Result<()> {
    let mut wtr = csv_writer(w, DIARY_HEADER)?;
    for e in entries {
        wtr.write_record([
            e.person_id.clone(),
            e.date.format("%Y-%m-%d").to_string(),
            e.start_min.to_string(),
            e.duration_min.to_string(),
            e.activity_code.clone(),
            e.location_code.clone(),
            u8::from(e.smoking).to_string(),
            u8::from(e.heavy_breathing).to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_emissions<W: Write>(w: W, records: &[EmissionRecord]) -> csv::Result<()> {
    let mut wtr = csv_writer(w, EMISSION_HEADER)?;
    for r in records {
        wtr.write_record([
            r.county_fips.to_string(),
            r.category.name().to_string(),
            r.tonnes_per_year.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_station_days<W: Write>(w: W, days: &[StationDay]) -> csv::Result<()> {
    let mut wtr = csv_writer(w, STATION_HEADER)?;
    for d in days {
        wtr.write_record([
            d.station_id.clone(),
            d.latitude.to_string(),
            d.longitude.to_string(),
            fmt_opt(&d.county_fips),
            d.date.format("%Y-%m-%d").to_string(),
            d.factor.key().to_string(),
            d.value.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profiles_csv(rows: &[&str]) -> String {
        let mut s = PROFILE_HEADER.join(",");
        for r in rows {
            s.push('\n');
            s.push_str(r);
        }
        s.push('\n');
        s
    }

    #[test]
    fn profile_row_maps_fields() {
        let csv = profiles_csv(&["P1,06059,34,F,white,1,0,,employed,40,3,5,1,gas,electric"]);
        let ps = read_profiles(csv.as_bytes(), "profiles.csv").unwrap();
        let p = &ps[0];
        assert_eq!(p.person_id, "P1");
        assert_eq!(p.county_fips.as_ref().unwrap().as_str(), "06059");
        assert_eq!(p.age_years, 34);
        assert_eq!(p.gender, Gender::Female);
        assert_eq!(p.asthma, AsthmaStatus::Yes);
        assert_eq!(p.smoker, Some(false));
        assert_eq!(p.lives_with_smoker, None);
        assert_eq!(p.hours_work_per_week, Some(40.0));
    }

    #[test]
    fn empty_hours_cell_is_missing_not_zero() {
        let csv = profiles_csv(&["P1,06059,34,M,,0,,,,,,,,,"]);
        let ps = read_profiles(csv.as_bytes(), "profiles.csv").unwrap();
        assert_eq!(ps[0].hours_work_per_week, None);
        assert_eq!(ps[0].race, None);
        assert_eq!(ps[0].education_level, None);
    }

    #[test]
    fn duplicate_person_id_is_named() {
        let csv = profiles_csv(&["P7,06059,34,M,,0,,,,,,,,,", "P7,06059,35,F,,1,,,,,,,,,"]);
        match read_profiles(csv.as_bytes(), "profiles.csv") {
            Err(IngestError::DuplicatePersonId { person_id, line, .. }) => {
                assert_eq!(person_id, "P7");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_row_names_column() {
        let csv = profiles_csv(&["P1,06059,old,M,,0,,,,,,,,,"]);
        match read_profiles(csv.as_bytes(), "profiles.csv") {
            Err(IngestError::MalformedRow { column, line, .. }) => {
                assert_eq!(column, "age_years");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        let csv = profiles_csv(&["P1,06059,131,M,,0,,,,,,,,,"]);
        assert!(matches!(
            read_profiles(csv.as_bytes(), "p"),
            Err(IngestError::MalformedRow { .. })
        ));
        let csv = profiles_csv(&["P1,6059,30,M,,0,,,,,,,,,"]);
        assert!(matches!(
            read_profiles(csv.as_bytes(), "p"),
            Err(IngestError::MalformedRow { .. })
        ));
    }

    #[test]
    fn header_mismatch_rejected() {
        let csv = "id,county\nP1,06059\n";
        assert!(matches!(
            read_profiles(csv.as_bytes(), "p"),
            Err(IngestError::MissingHeader { .. })
        ));
        assert!(matches!(
            read_profiles("".as_bytes(), "p"),
            Err(IngestError::MissingHeader { .. })
        ));
    }

    fn diary(row: &str) -> Result<Vec<DiaryEntry>, IngestError> {
        let csv = format!("{}\n{row}\n", DIARY_HEADER.join(","));
        read_diaries(csv.as_bytes(), "diaries.csv")
    }

    #[test]
    fn diary_row_maps_fields() {
        let es = diary("P1,2001-06-03,420,60,sleep,home,0,0").unwrap();
        assert_eq!(es[0].duration_min, 60);
        assert_eq!(es[0].start_min, 420);
        assert_eq!(es[0].date, NaiveDate::from_ymd_opt(2001, 6, 3).unwrap());
        assert!(!es[0].smoking && !es[0].heavy_breathing);
    }

    #[test]
    fn diary_validation_errors() {
        assert!(matches!(
            diary("P1,2001-06-03,420,60,sleep,home,2,0"),
            Err(IngestError::FlagOutOfRange { .. })
        ));
        assert!(matches!(
            diary("P1,2001-06-03,420,0,sleep,home,0,0"),
            Err(IngestError::NonPositiveDuration { value: 0, .. })
        ));
        assert!(matches!(
            diary("P1,2001-06-03,1440,10,sleep,home,0,0"),
            Err(IngestError::MalformedRow { .. })
        ));
        assert!(matches!(
            diary("P1,2001-06-03,1439,1441,sleep,home,0,0"),
            Err(IngestError::MalformedRow { .. })
        ));
        // crossing midnight is fine
        assert!(diary("P1,2001-06-03,1380,480,sleep,home,0,0").is_ok());
        assert!(matches!(
            diary("P1,03/06/2001,10,10,sleep,home,0,0"),
            Err(IngestError::MalformedRow { .. })
        ));
    }

    #[test]
    fn emission_rows() {
        let csv = "county_fips,category,tonnes_per_year\n06059,Wildfires,850.2\n06059,paved road dust,3\n";
        let rs = read_emissions(csv.as_bytes(), "e").unwrap();
        assert_eq!(rs[0].category, EmissionCategory::Wildfires);
        assert_eq!(rs[0].tonnes_per_year, 850.2);
        assert_eq!(rs[1].category, EmissionCategory::PavedRoadDust);

        let bad = "county_fips,category,tonnes_per_year\n06059,Volcanoes,1\n";
        assert!(matches!(
            read_emissions(bad.as_bytes(), "e"),
            Err(IngestError::UnknownCategory { category, .. }) if category == "Volcanoes"
        ));
        let dup = "county_fips,category,tonnes_per_year\n06059,Coal,1\n06059,coal,2\n";
        assert!(matches!(
            read_emissions(dup.as_bytes(), "e"),
            Err(IngestError::DuplicateRecord { .. })
        ));
    }

    #[test]
    fn station_rows() {
        let h = STATION_HEADER.join(",");
        let ok = format!("{h}\nS1,33.7,-117.8,06059,2001-06-01,pm25,12.5\nS1,33.7,-117.8,,2001-06-01,o3,0.04\n");
        let ds = read_station_days(ok.as_bytes(), "s").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds[1].county_fips, None);

        let bad_lat = format!("{h}\nS1,95.0,-117.8,,2001-06-01,pm25,1\n");
        assert!(matches!(
            read_station_days(bad_lat.as_bytes(), "s"),
            Err(IngestError::CoordinateOutOfRange { value, .. }) if value == 95.0
        ));
        let bad_factor = format!("{h}\nS1,30,-117.8,,2001-06-01,radon,1\n");
        assert!(matches!(
            read_station_days(bad_factor.as_bytes(), "s"),
            Err(IngestError::UnknownFactor { .. })
        ));
        let dup = format!("{h}\nS1,30,10,,2001-06-01,pm25,1\nS1,30,10,,2001-06-01,PM2.5,2\n");
        assert!(matches!(
            read_station_days(dup.as_bytes(), "s"),
            Err(IngestError::DuplicateRecord { .. })
        ));
    }
}
