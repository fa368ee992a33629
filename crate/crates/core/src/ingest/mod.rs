//! Input tables: personal profiles, activity diaries, emission inventories and
//! station readings, plus construction of the class-balanced cohort.

mod cohort;
mod csvio;
mod error;
mod records;

use std::collections::BTreeMap;

use chrono::NaiveDate;

pub use cohort::{balance_cohort, Cohort, CohortMember, Label};
pub use csvio::{
    parse_diaries, parse_emissions, parse_profiles, parse_station_days, read_diaries,
    read_emissions, read_profiles, read_station_days, write_diaries, write_emissions,
    write_profiles, write_station_days, DIARY_HEADER, EMISSION_HEADER, PROFILE_HEADER,
    STATION_HEADER,
};
pub(crate) use csvio::for_each_row;
pub use error::{CohortError, IngestError};
pub use records::*;

/// Diary entries grouped by person, then by day.
pub type DiaryIndex<'a> = BTreeMap<&'a str, BTreeMap<NaiveDate, Vec<&'a DiaryEntry>>>;

/// Groups entries so that the entries of person `p` on day `j` can be retrieved directly.
pub fn group_diaries(entries: &[DiaryEntry]) -> DiaryIndex<'_> {
    let mut index: DiaryIndex<'_> = BTreeMap::new();
    for e in entries {
        index
            .entry(e.person_id.as_str())
            .or_default()
            .entry(e.date)
            .or_default()
            .push(e);
    }
    index
}
