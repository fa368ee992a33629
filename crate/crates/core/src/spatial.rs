//! Station-to-county interpolation and monthly climatology.
//!
//! Daily station readings are converted to a county value by inverse-distance
//! weighting (power 1) over the nearest stations to the county centroid. The
//! daily county series is then summarised per calendar month as the
//! cross-year mean of the per-year daily maximum, mean and minimum.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{for_each_row, CountyFips, EnvFactor, IngestError, StationDay};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Stations closer than this (1 m) to a centroid supply the value directly.
pub const EXACT_MATCH_KM: f64 = 0.001;
pub const DEFAULT_NEIGHBORS: usize = 5;
pub const DEFAULT_YEARS: RangeInclusive<i32> = 2001..=2014;

pub const COUNTY_HEADER: &[&str] = &["county_fips", "centroid_lat", "centroid_lon"];

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("readings span more than one factor or date")]
    MixedFactorInput,
    #[error("year range {start}..={end} is empty")]
    EmptyRange { start: i32, end: i32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountyRef {
    pub county_fips: CountyFips,
    pub centroid_lat: f64,
    pub centroid_lon: f64,
}

pub fn read_counties<R: Read>(reader: R, file: &str) -> Result<Vec<CountyRef>, IngestError> {
    let mut out: Vec<CountyRef> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for_each_row(reader, file, COUNTY_HEADER, |row| {
        let county_fips: CountyFips = row
            .required(0)?
            .parse()
            .map_err(|e: String| row.malformed(0, e))?;
        let lat = row.finite(1)?;
        let lon = row.finite(2)?;
        for (col, v, lim) in [(1, lat, 90.0), (2, lon, 180.0)] {
            if v.abs() > lim {
                return Err(IngestError::CoordinateOutOfRange {
                    file: file.to_string(),
                    line: row.line,
                    column: COUNTY_HEADER[col].to_string(),
                    value: v,
                });
            }
        }
        if !seen.insert(county_fips.clone()) {
            return Err(IngestError::DuplicateRecord {
                file: file.to_string(),
                line: row.line,
                key: county_fips.to_string(),
            });
        }
        out.push(CountyRef {
            county_fips,
            centroid_lat: lat,
            centroid_lon: lon,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_counties(path: &Path) -> Result<Vec<CountyRef>, IngestError> {
    let f = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_counties(f, &path.display().to_string())
}

pub fn write_counties<W: Write>(w: W, counties: &[CountyRef]) -> csv::Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record(COUNTY_HEADER)?;
    for c in counties {
        wtr.write_record([
            c.county_fips.to_string(),
            c.centroid_lat.to_string(),
            c.centroid_lon.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Great-circle distance in kilometres.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (phi1, phi2) = (lat1.to_radians(), lat2.to_radians());
    let dphi = (lat2 - lat1).to_radians();
    let dlambda = (lon2 - lon1).to_radians();
    let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Inverse-distance weighted average of `(distance_km, value)` pairs over the
/// `k` nearest. Distance ties keep input order.
pub fn idw(points: &[(f64, f64)], k: usize) -> Option<f64> {
    if points.is_empty() || k == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(a.cmp(&b)));
    order.truncate(k);
    let (nearest_d, nearest_v) = points[order[0]];
    if nearest_d <= EXACT_MATCH_KM {
        return Some(nearest_v);
    }
    let total: f64 = order.iter().map(|&i| 1.0 / points[i].0).sum();
    let mut weight_sum = 0.0;
    let mut acc = 0.0;
    for &i in &order {
        let w = (1.0 / points[i].0) / total;
        weight_sum += w;
        acc += w * points[i].1;
    }
    debug_assert!((weight_sum - 1.0).abs() <= 1e-12, "IDW weights sum to {weight_sum}");
    // convex combination; guard against rounding just outside the hull
    let (lo, hi) = order.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
        (lo.min(points[i].1), hi.max(points[i].1))
    });
    Some(acc.clamp(lo, hi))
}

/// County value for one (date, factor) from station readings, using the
/// default neighbour count.
pub fn interpolate_county_day(
    readings: &[StationDay],
    county: &CountyRef,
) -> Result<Option<f64>, SpatialError> {
    interpolate_county_day_k(readings, county, DEFAULT_NEIGHBORS)
}

pub fn interpolate_county_day_k(
    readings: &[StationDay],
    county: &CountyRef,
    k: usize,
) -> Result<Option<f64>, SpatialError> {
    if let Some(first) = readings.first() {
        if readings
            .iter()
            .any(|r| r.date != first.date || r.factor != first.factor)
        {
            return Err(SpatialError::MixedFactorInput);
        }
    }
    let points: Vec<(f64, f64)> = readings
        .iter()
        .map(|r| {
            (
                haversine_km(county.centroid_lat, county.centroid_lon, r.latitude, r.longitude),
                r.value,
            )
        })
        .collect();
    Ok(idw(&points, k))
}

/// Climatological summary of one factor for one calendar month.
///
/// The three statistics are `None` when no year has data for the month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyStats {
    pub factor: EnvFactor,
    pub month: u32,
    pub f_max: Option<f64>,
    pub f_mean: Option<f64>,
    pub f_min: Option<f64>,
    pub years_covered: Vec<i32>,
}

/// Twelve monthly summaries of a daily county series. Dates outside `years` are ignored.
pub fn county_monthly_stats(
    factor: EnvFactor,
    daily: &BTreeMap<NaiveDate, f64>,
    years: RangeInclusive<i32>,
) -> Result<Vec<MonthlyStats>, SpatialError> {
    if years.is_empty() {
        return Err(SpatialError::EmptyRange {
            start: *years.start(),
            end: *years.end(),
        });
    }
    // (month, year) -> (max, sum, min, count)
    let mut per_year: BTreeMap<(u32, i32), (f64, f64, f64, usize)> = BTreeMap::new();
    for (date, &v) in daily.range(
        NaiveDate::from_ymd_opt(*years.start(), 1, 1).unwrap_or(NaiveDate::MIN)
            ..=NaiveDate::from_ymd_opt(*years.end(), 12, 31).unwrap_or(NaiveDate::MAX),
    ) {
        let e = per_year
            .entry((date.month(), date.year()))
            .or_insert((f64::NEG_INFINITY, 0.0, f64::INFINITY, 0));
        e.0 = e.0.max(v);
        e.1 += v;
        e.2 = e.2.min(v);
        e.3 += 1;
    }
    Ok((1..=12)
        .map(|month| {
            let mut years_covered = Vec::new();
            let (mut smax, mut smean, mut smin) = (0.0, 0.0, 0.0);
            for (&(_, year), &(mx, sum, mn, n)) in per_year.range((month, i32::MIN)..=(month, i32::MAX)) {
                let mean = (sum / n as f64).clamp(mn, mx);
                smax += mx;
                smean += mean;
                smin += mn;
                years_covered.push(year);
            }
            let n = years_covered.len() as f64;
            let present = !years_covered.is_empty();
            MonthlyStats {
                factor,
                month,
                f_max: present.then(|| smax / n),
                f_mean: present.then(|| smean / n),
                f_min: present.then(|| smin / n),
                years_covered,
            }
        })
        .collect())
}

/// Monthly statistics for every county and factor.
pub type CountyClimatology = BTreeMap<CountyFips, Vec<MonthlyStats>>;

/// Interpolates every (factor, date) group of station readings to each county
/// and summarises the resulting daily series. Each county gets 8 × 12 entries
/// ordered by factor then month.
pub fn county_climatology(
    readings: &[StationDay],
    counties: &[CountyRef],
    years: RangeInclusive<i32>,
    k: usize,
) -> Result<CountyClimatology, SpatialError> {
    if years.is_empty() {
        return Err(SpatialError::EmptyRange {
            start: *years.start(),
            end: *years.end(),
        });
    }
    // first-seen coordinates per station
    let mut station_ix: HashMap<&str, usize> = HashMap::new();
    let mut station_pos: Vec<(f64, f64)> = Vec::new();
    let mut groups: BTreeMap<(EnvFactor, NaiveDate), Vec<(usize, f64)>> = BTreeMap::new();
    for r in readings {
        if !years.contains(&r.date.year()) {
            continue;
        }
        let ix = *station_ix.entry(r.station_id.as_str()).or_insert_with(|| {
            station_pos.push((r.latitude, r.longitude));
            station_pos.len() - 1
        });
        groups.entry((r.factor, r.date)).or_default().push((ix, r.value));
    }

    counties
        .par_iter()
        .map(|c| {
            let dist: Vec<f64> = station_pos
                .iter()
                .map(|&(lat, lon)| haversine_km(c.centroid_lat, c.centroid_lon, lat, lon))
                .collect();
            let mut series: BTreeMap<EnvFactor, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
            let mut points = Vec::new();
            for (&(factor, date), group) in &groups {
                points.clear();
                points.extend(group.iter().map(|&(s, v)| (dist[s], v)));
                if let Some(v) = idw(&points, k) {
                    series.entry(factor).or_default().insert(date, v);
                }
            }
            let mut stats = Vec::with_capacity(96);
            let empty = BTreeMap::new();
            for factor in EnvFactor::ALL {
                let daily = series.get(&factor).unwrap_or(&empty);
                stats.extend(county_monthly_stats(factor, daily, years.clone())?);
            }
            Ok((c.county_fips.clone(), stats))
        })
        .collect::<Result<Vec<_>, SpatialError>>()
        .map(|v| v.into_iter().collect())
}
