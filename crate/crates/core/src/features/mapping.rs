use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::ingest::{for_each_row, IngestError};

pub const CATEGORY_MAP_HEADER: &[&str] = &["kind", "code", "categories"];

pub const DEFAULT_CATEGORY_MAP: &str = include_str!("../../data/category_map.csv");

/// Location categories; a diary location may belong to several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocationCategory {
    Work,
    Travel,
    Home,
    Indoor,
    Outdoor,
}

impl LocationCategory {
    pub const ALL: [LocationCategory; 5] = [
        LocationCategory::Work,
        LocationCategory::Travel,
        LocationCategory::Home,
        LocationCategory::Indoor,
        LocationCategory::Outdoor,
    ];

    pub fn key(self) -> &'static str {
        match self {
            LocationCategory::Work => "work",
            LocationCategory::Travel => "travel",
            LocationCategory::Home => "home",
            LocationCategory::Indoor => "indoor",
            LocationCategory::Outdoor => "outdoor",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Activity categories; a diary activity may belong to several.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActivityCategory {
    Sleep,
    Work,
    Exercise,
    Walking,
    Cycling,
    Leisure,
}

impl ActivityCategory {
    pub const ALL: [ActivityCategory; 6] = [
        ActivityCategory::Sleep,
        ActivityCategory::Work,
        ActivityCategory::Exercise,
        ActivityCategory::Walking,
        ActivityCategory::Cycling,
        ActivityCategory::Leisure,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ActivityCategory::Sleep => "sleep",
            ActivityCategory::Work => "work",
            ActivityCategory::Exercise => "exercise",
            ActivityCategory::Walking => "walking",
            ActivityCategory::Cycling => "cycling",
            ActivityCategory::Leisure => "leisure",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Diary code to category-set lookup. Codes absent from the table map to the empty set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryMapping {
    location: HashMap<String, Vec<LocationCategory>>,
    activity: HashMap<String, Vec<ActivityCategory>>,
}

impl CategoryMapping {
    /// The mapping shipped in `data/category_map.csv`.
    pub fn default_mapping() -> Self {
        Self::read(DEFAULT_CATEGORY_MAP.as_bytes(), "category_map.csv (built-in)")
            .expect("built-in category map is valid")
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let f = std::fs::File::open(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read(f, &path.display().to_string())
    }

    pub fn read<R: Read>(reader: R, file: &str) -> Result<Self, IngestError> {
        let mut m = CategoryMapping::default();
        for_each_row(reader, file, CATEGORY_MAP_HEADER, |row| {
            let kind = row.required(0)?.to_ascii_lowercase();
            let code = row.required(1)?.to_string();
            let names: Vec<String> = row
                .raw(2)
                .split('|')
                .map(|s| s.trim().to_ascii_lowercase())
                .filter(|s| !s.is_empty())
                .collect();
            match kind.as_str() {
                "location" => {
                    let mut cats = Vec::new();
                    for n in &names {
                        let c = LocationCategory::ALL
                            .into_iter()
                            .find(|c| c.key() == n)
                            .ok_or_else(|| row.malformed(2, format!("unknown location category `{n}`")))?;
                        if !cats.contains(&c) {
                            cats.push(c);
                        }
                    }
                    m.location.insert(code, cats);
                }
                "activity" => {
                    let mut cats = Vec::new();
                    for n in &names {
                        let c = ActivityCategory::ALL
                            .into_iter()
                            .find(|c| c.key() == n)
                            .ok_or_else(|| row.malformed(2, format!("unknown activity category `{n}`")))?;
                        if !cats.contains(&c) {
                            cats.push(c);
                        }
                    }
                    m.activity.insert(code, cats);
                }
                _ => return Err(row.malformed(0, format!("kind must be location or activity, got `{kind}`"))),
            }
            Ok(())
        })?;
        Ok(m)
    }

    pub fn location(&self, code: &str) -> &[LocationCategory] {
        self.location.get(code).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn activity(&self, code: &str) -> &[ActivityCategory] {
        self.activity.get(code).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn knows_location(&self, code: &str) -> bool {
        self.location.contains_key(code)
    }

    pub fn knows_activity(&self, code: &str) -> bool {
        self.activity.contains_key(code)
    }

    /// Location codes in sorted order.
    pub fn location_codes(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.location.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// Activity codes in sorted order.
    pub fn activity_codes(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.activity.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mapping_loads() {
        let m = CategoryMapping::default_mapping();
        assert_eq!(m.location("30121"), &[LocationCategory::Home, LocationCategory::Indoor]);
        assert_eq!(m.activity("sleep"), &[ActivityCategory::Sleep]);
        assert!(m.activity("eating").is_empty());
        assert!(m.knows_activity("eating"));
        assert!(m.location("nowhere").is_empty());
    }

    #[test]
    fn rejects_unknown_category() {
        let csv = "kind,code,categories\nlocation,x,home|moon\n";
        assert!(matches!(
            CategoryMapping::read(csv.as_bytes(), "m"),
            Err(IngestError::MalformedRow { .. })
        ));
        let csv = "kind,code,categories\nplace,x,home\n";
        assert!(CategoryMapping::read(csv.as_bytes(), "m").is_err());
    }
}
