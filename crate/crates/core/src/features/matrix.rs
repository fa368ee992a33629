use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use super::{FeatureError, NamedValues};
use crate::ingest::{Cohort, CountyFips, Label};
use crate::model::DenseMatrix;

/// Feature family, identified by the column-name prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Profile and activity features, `FP_`.
    Personal,
    /// Emission inventory features, `FE_`.
    Emission,
    /// Air pollution and weather features, `FA_`.
    AirQuality,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Personal, Family::Emission, Family::AirQuality];

    pub fn prefix(self) -> &'static str {
        match self {
            Family::Personal => "FP_",
            Family::Emission => "FE_",
            Family::AirQuality => "FA_",
        }
    }

    pub fn letter(self) -> char {
        match self {
            Family::Personal => 'P',
            Family::Emission => 'E',
            Family::AirQuality => 'A',
        }
    }

    pub fn of_column(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| name.starts_with(f.prefix()))
    }
}

/// A subset of feature families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FamilySet {
    pub personal: bool,
    pub emission: bool,
    pub air_quality: bool,
}

impl FamilySet {
    pub const ALL: FamilySet = FamilySet {
        personal: true,
        emission: true,
        air_quality: true,
    };
    pub const P: FamilySet = FamilySet {
        personal: true,
        emission: false,
        air_quality: false,
    };
    pub const PA: FamilySet = FamilySet {
        personal: true,
        emission: false,
        air_quality: true,
    };
    pub const PE: FamilySet = FamilySet {
        personal: true,
        emission: true,
        air_quality: false,
    };

    /// The four ablation subsets: P, P+A, P+E, P+E+A.
    pub const ABLATION: [FamilySet; 4] = [FamilySet::P, FamilySet::PA, FamilySet::PE, FamilySet::ALL];

    pub fn contains(self, f: Family) -> bool {
        match f {
            Family::Personal => self.personal,
            Family::Emission => self.emission,
            Family::AirQuality => self.air_quality,
        }
    }

    pub fn is_empty(self) -> bool {
        !(self.personal || self.emission || self.air_quality)
    }

    pub fn families(self) -> impl Iterator<Item = Family> {
        Family::ALL.into_iter().filter(move |f| self.contains(*f))
    }

    /// `P`, `P+A`, `P+E+A`, ...
    pub fn label(self) -> String {
        self.families().map(|f| f.letter().to_string()).collect::<Vec<_>>().join("+")
    }
}

impl fmt::Display for FamilySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for FamilySet {
    type Err = String;

    /// Accepts letters separated by `,` or `+`, e.g. `P,E,A` or `P+A`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = FamilySet {
            personal: false,
            emission: false,
            air_quality: false,
        };
        for part in s.split([',', '+']).map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_uppercase().as_str() {
                "P" => set.personal = true,
                "E" => set.emission = true,
                "A" => set.air_quality = true,
                other => return Err(format!("unknown feature family `{other}` (expected P, E or A)")),
            }
        }
        if set.is_empty() {
            return Err(format!("empty feature family list `{s}`"));
        }
        Ok(set)
    }
}

/// Named numeric matrix over cohort members.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub column_names: Vec<String>,
    pub families: Vec<Family>,
    pub row_keys: Vec<String>,
    pub labels: Vec<Label>,
    pub values: DenseMatrix,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.n_cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn count_family(&self, f: Family) -> usize {
        self.families.iter().filter(|&&g| g == f).count()
    }

    /// Drops every column whose family is not in `set`.
    pub fn restrict(&self, set: FamilySet) -> FeatureMatrix {
        let keep: Vec<usize> = (0..self.n_cols()).filter(|&c| set.contains(self.families[c])).collect();
        FeatureMatrix {
            column_names: keep.iter().map(|&c| self.column_names[c].clone()).collect(),
            families: keep.iter().map(|&c| self.families[c]).collect(),
            row_keys: self.row_keys.clone(),
            labels: self.labels.clone(),
            values: self.values.select_cols(&keep),
        }
    }

    pub fn positive_flags(&self) -> Vec<bool> {
        self.labels.iter().map(|l| l.is_positive()).collect()
    }

    /// Writes `person_id,label,<columns>`; missing cells are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        let mut header = vec!["person_id".to_string(), "label".to_string()];
        header.extend(self.column_names.iter().cloned());
        wtr.write_record(&header)?;
        let mut rec = Vec::with_capacity(header.len());
        for (r, key) in self.row_keys.iter().enumerate() {
            rec.clear();
            rec.push(key.clone());
            rec.push(self.labels[r].sign().to_string());
            rec.extend(self.values.row(r).iter().map(|v| {
                if v.is_nan() {
                    String::new()
                } else {
                    v.to_string()
                }
            }));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<FeatureMatrix, FeatureError> {
        let bad = |line: u64, reason: String| FeatureError::BadFeatureFile { line, reason };
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(Ok(h)) => h,
            _ => return Err(bad(1, "missing header".into())),
        };
        if header.len() < 2 || &header[0] != "person_id" || &header[1] != "label" {
            return Err(bad(1, "header must start with person_id,label".into()));
        }
        let column_names: Vec<String> = header.iter().skip(2).map(String::from).collect();
        let mut families = Vec::with_capacity(column_names.len());
        for c in &column_names {
            families.push(Family::of_column(c).ok_or_else(|| bad(1, format!("column `{c}` has no family prefix")))?);
        }
        let mut row_keys = Vec::new();
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            row_keys.push(rec[0].to_string());
            let label = rec[1]
                .trim()
                .parse::<i8>()
                .ok()
                .and_then(Label::from_sign)
                .ok_or_else(|| bad(line, format!("label `{}` is not 1 or -1", &rec[1])))?;
            labels.push(label);
            for cell in rec.iter().skip(2) {
                let cell = cell.trim();
                data.push(if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.parse().map_err(|_| bad(line, format!("`{cell}` is not a number")))?
                });
            }
        }
        let values = DenseMatrix::from_vec(row_keys.len(), column_names.len(), data);
        Ok(FeatureMatrix {
            column_names,
            families,
            row_keys,
            labels,
            values,
        })
    }
}

/// A cohort member whose county had no environmental data for a requested family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnmappedCounty {
    pub person_id: String,
    pub county_fips: CountyFips,
    pub family: Family,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledMatrix {
    pub matrix: FeatureMatrix,
    pub unmapped: Vec<UnmappedCounty>,
    /// Number of imputed cells per column that needed imputation.
    pub imputed: BTreeMap<String, usize>,
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Joins per-person and per-county feature vectors into one matrix.
///
/// Columns are ordered FP, FE, FA, alphabetical within each block. Missing
/// cells are replaced by the column median over the cohort and flagged in a
/// companion `<column>_missing` indicator (added only when a column has
/// missing cells). Names a row does not emit are zero, which is how one-hot
/// categories absent for a person are filled.
pub fn assemble_matrix(
    cohort: &Cohort,
    person: &BTreeMap<String, NamedValues>,
    emission: &BTreeMap<CountyFips, NamedValues>,
    pollution: &BTreeMap<CountyFips, NamedValues>,
    families: FamilySet,
) -> Result<AssembledMatrix, FeatureError> {
    let mut unmapped = Vec::new();
    let mut rows: Vec<NamedValues> = Vec::with_capacity(cohort.len());
    let template = |m: &BTreeMap<CountyFips, NamedValues>| -> BTreeSet<String> {
        m.values().flat_map(|v| v.keys().cloned()).collect()
    };
    let emission_names = template(emission);
    let pollution_names = template(pollution);

    for m in &cohort.members {
        let id = &m.profile.person_id;
        let mut row = NamedValues::new();
        if families.personal {
            let pv = person
                .get(id)
                .ok_or_else(|| FeatureError::MissingPersonVector(id.clone()))?;
            row.extend(pv.iter().map(|(k, v)| (k.clone(), *v)));
        }
        let county = m.profile.county_fips.as_ref();
        for (family, source, names) in [
            (Family::Emission, emission, &emission_names),
            (Family::AirQuality, pollution, &pollution_names),
        ] {
            if !families.contains(family) {
                continue;
            }
            match county.and_then(|c| source.get(c)) {
                Some(v) => row.extend(v.iter().map(|(k, v)| (k.clone(), *v))),
                None => {
                    if let Some(c) = county {
                        unmapped.push(UnmappedCounty {
                            person_id: id.clone(),
                            county_fips: c.clone(),
                            family,
                        });
                    }
                    row.extend(names.iter().map(|n| (n.clone(), None)));
                }
            }
        }
        rows.push(row);
    }

    let base_names: BTreeSet<&String> = rows.iter().flat_map(|r| r.keys()).collect();
    let base_names: Vec<String> = base_names.into_iter().cloned().collect();
    // column-wise: raw values with NaN for missing
    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut imputed = BTreeMap::new();
    for name in &base_names {
        let mut col: Vec<f64> = rows
            .iter()
            .map(|r| match r.get(name) {
                Some(Some(v)) => *v,
                Some(None) => f64::NAN,
                None => 0.0,
            })
            .collect();
        let n_missing = col.iter().filter(|v| v.is_nan()).count();
        if n_missing > 0 {
            let mut present: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
            let fill = median(&mut present).unwrap_or(0.0);
            let indicator: Vec<f64> = col.iter().map(|v| if v.is_nan() { 1.0 } else { 0.0 }).collect();
            for v in col.iter_mut().filter(|v| v.is_nan()) {
                *v = fill;
            }
            columns.insert(format!("{name}_missing"), indicator);
            imputed.insert(name.clone(), n_missing);
        }
        columns.insert(name.clone(), col);
    }

    let mut column_names = Vec::with_capacity(columns.len());
    let mut fams = Vec::with_capacity(columns.len());
    for family in families.families() {
        for name in columns.keys().filter(|n| Family::of_column(n) == Some(family)) {
            column_names.push(name.clone());
            fams.push(family);
        }
    }
    let n = rows.len();
    let mut values = DenseMatrix::from_vec(n, column_names.len(), vec![0.0; n * column_names.len()]);
    for (c, name) in column_names.iter().enumerate() {
        for (r, v) in columns[name].iter().enumerate() {
            values.set(r, c, *v);
        }
    }
    Ok(AssembledMatrix {
        matrix: FeatureMatrix {
            column_names,
            families: fams,
            row_keys: cohort.members.iter().map(|m| m.profile.person_id.clone()).collect(),
            labels: cohort.members.iter().map(|m| m.label).collect(),
            values,
        },
        unmapped,
        imputed,
    })
}
