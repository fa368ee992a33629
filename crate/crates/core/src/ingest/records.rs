use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Five-digit county FIPS code, the spatial join key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CountyFips(String);

impl CountyFips {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for CountyFips {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() == 5 && s.bytes().all(|b| b.is_ascii_digit()) {
            Ok(CountyFips(s.to_string()))
        } else {
            Err(format!("`{s}` is not a 5-digit FIPS code"))
        }
    }
}

impl fmt::Display for CountyFips {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AsthmaStatus {
    Yes,
    No,
    Unknown,
}

/// One subject's demographic and household attributes.
///
/// Nullable survey answers are `Option`s; an unanswered question never
/// collapses to zero or `false`.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonProfile {
    pub person_id: String,
    pub county_fips: Option<CountyFips>,
    pub age_years: u32,
    pub gender: Gender,
    pub race: Option<String>,
    pub asthma: AsthmaStatus,
    pub smoker: Option<bool>,
    pub lives_with_smoker: Option<bool>,
    pub employment_status: Option<String>,
    pub hours_work_per_week: Option<f64>,
    pub education_level: Option<u32>,
    pub income_bracket: Option<u32>,
    pub gas_stove: Option<bool>,
    pub heating_fuel: Option<String>,
    pub cooking_fuel: Option<String>,
}

/// One timed activity record. Entries crossing midnight belong to their start date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiaryEntry {
    pub person_id: String,
    pub date: NaiveDate,
    pub start_min: u16,
    pub duration_min: u32,
    pub activity_code: String,
    pub location_code: String,
    pub smoking: bool,
    pub heavy_breathing: bool,
}

/// Source group of an emission category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmissionGroup {
    Mobile,
    Industrial,
    Dust,
    Fires,
    Fuel,
    Miscellaneous,
}

macro_rules! emission_categories {
    ($( $variant:ident => ($name:literal, $group:ident) ),+ $(,)?) => {
        /// Closed vocabulary of PM2.5 emission inventory source categories.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum EmissionCategory {
            $( $variant ),+
        }

        impl EmissionCategory {
            pub const ALL: &'static [EmissionCategory] = &[ $( EmissionCategory::$variant ),+ ];

            /// Canonical display name, as written to `emissions.csv`.
            pub fn name(self) -> &'static str {
                match self {
                    $( EmissionCategory::$variant => $name ),+
                }
            }

            pub fn group(self) -> EmissionGroup {
                match self {
                    $( EmissionCategory::$variant => EmissionGroup::$group ),+
                }
            }
        }
    };
}

emission_categories! {
    Aircraft => ("Aircraft", Mobile),
    MarineVessels => ("Marine Vessels", Mobile),
    Locomotives => ("Locomotives", Mobile),
    Equipment => ("Equipment", Mobile),
    HeavyDutyVehicles => ("Heavy Duty Vehicles", Mobile),
    LightDutyVehicles => ("Light Duty Vehicles", Mobile),
    Agricultural => ("Agricultural", Industrial),
    Mining => ("Mining", Industrial),
    OilGasProduction => ("Oil & Gas Production", Industrial),
    StorageTransportation => ("Storage & Transportation", Industrial),
    IndustrialOther => ("Industrial Other", Industrial),
    Construction => ("Construction", Dust),
    PavedRoadDust => ("Paved Road Dust", Dust),
    UnpavedRoadDust => ("Unpaved Road Dust", Dust),
    AgriculturalFieldBurning => ("Agricultural Field Burning", Fires),
    PrescribedFires => ("Prescribed Fires", Fires),
    Wildfires => ("Wildfires", Fires),
    Biomass => ("Biomass", Fuel),
    Coal => ("Coal", Fuel),
    NaturalGas => ("Natural Gas", Fuel),
    Oil => ("Oil", Fuel),
    ResidentialWood => ("Residential Wood", Fuel),
    FuelOther => ("Fuel Other", Fuel),
    WasteDisposal => ("Waste Disposal", Miscellaneous),
    Agriculture => ("Agriculture", Miscellaneous),
    CommercialCooking => ("Commercial Cooking", Miscellaneous),
}

/// Lowercase alphanumeric key used for lenient name matching.
fn match_key(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

impl EmissionCategory {
    /// Case-insensitive lookup that also ignores spaces, `&` and `_`.
    pub fn parse(s: &str) -> Option<Self> {
        let key = match_key(s);
        Self::ALL.iter().copied().find(|c| match_key(c.name()) == key)
    }

    /// Feature column name, e.g. `FE_Paved_Road_Dust`.
    pub fn column_name(self) -> String {
        let words: Vec<&str> = self
            .name()
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        format!("FE_{}", words.join("_"))
    }
}

/// County-level annual emission estimate for one source category.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionRecord {
    pub county_fips: CountyFips,
    pub category: EmissionCategory,
    pub tonnes_per_year: f64,
}

/// Pollutant or weather variable measured at monitoring stations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EnvFactor {
    Pm25,
    So2,
    No2,
    O3,
    Co,
    Temperature,
    Pressure,
    WindSpeed,
}

impl EnvFactor {
    pub const ALL: [EnvFactor; 8] = [
        EnvFactor::Pm25,
        EnvFactor::So2,
        EnvFactor::No2,
        EnvFactor::O3,
        EnvFactor::Co,
        EnvFactor::Temperature,
        EnvFactor::Pressure,
        EnvFactor::WindSpeed,
    ];

    pub fn key(self) -> &'static str {
        match self {
            EnvFactor::Pm25 => "pm25",
            EnvFactor::So2 => "so2",
            EnvFactor::No2 => "no2",
            EnvFactor::O3 => "o3",
            EnvFactor::Co => "co",
            EnvFactor::Temperature => "temperature",
            EnvFactor::Pressure => "pressure",
            EnvFactor::WindSpeed => "wind_speed",
        }
    }

    /// Accepts the canonical key plus common spellings such as `PM2.5` or `wind speed`.
    pub fn parse(s: &str) -> Option<Self> {
        let key = match_key(s);
        Self::ALL.iter().copied().find(|f| match_key(f.key()) == key)
    }
}

/// Daily average reading of one factor at one monitoring station.
#[derive(Debug, Clone, PartialEq)]
pub struct StationDay {
    pub station_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub county_fips: Option<CountyFips>,
    pub date: NaiveDate,
    pub factor: EnvFactor,
    pub value: f64,
}
