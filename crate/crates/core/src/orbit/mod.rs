//! Orbit elements, propagation and per-slot visibility.

mod propagate;
mod tle;

use std::path::Path;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{ConstellationScenario, GroundStationSpec, Slot};

pub use propagate::{
    elevation_deg, gmst_rad, inertial_to_earth_fixed, propagate, propagate_inertial, semi_major_axis_m,
    slant_range_from_elevation, slant_range_m, station_position_m, GeoState, Vec3, EARTH_RADIUS_M,
    MAX_ELEMENT_AGE_DAYS, MU_EARTH,
};
pub use tle::{format_tle, parse_tle, tle_checksum, TleElements, MAX_ECCENTRICITY};

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("tle line {line} checksum mismatch: expected {expected}, found {found}")]
    BadChecksum { line: u8, expected: u8, found: u8 },
    #[error("malformed tle: {0}")]
    BadLayout(String),
    #[error("invalid orbital elements: {0}")]
    InvalidElements(String),
    #[error("elements from {epoch} are too far from {at}")]
    StaleElements { epoch: DateTime<Utc>, at: DateTime<Utc> },
    #[error("satellite `{satellite}`: {source}")]
    Satellite {
        satellite: String,
        #[source]
        source: Box<OrbitError>,
    },
    #[error("windows csv: {0}")]
    Parse(String),
    #[error("window slot {0} outside horizon")]
    OutOfHorizon(Slot),
    #[error("window validation: {0}")]
    Validation(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A satellite above a station's elevation mask during one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactWindow {
    pub slot: Slot,
    pub satellite_id: String,
    pub station_id: String,
    /// Elevation at slot midpoint, rounded to 6 significant digits.
    pub elevation_deg: f64,
}

/// Rounds to `digits` significant decimal digits.
pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = digits - 1 - magnitude;
    // round through the decimal string so the result prints back identically
    format!("{:.*}", decimals.max(0) as usize, x).parse().unwrap_or(x)
}

/// Samples every satellite at each slot midpoint against every station.
/// Output is sorted by (slot, satellite_id, station_id).
pub fn compute_contact_windows(scenario: &ConstellationScenario) -> Result<Vec<ContactWindow>, OrbitError> {
    let grid = &scenario.time;
    let stations: Vec<(&GroundStationSpec, Vec3)> =
        scenario.stations.iter().map(|s| (s, station_position_m(s))).collect();

    let per_sat: Result<Vec<Vec<ContactWindow>>, OrbitError> = scenario
        .satellites
        .par_iter()
        .map(|sat| {
            let mut out = Vec::new();
            for slot in 0..=grid.last_slot() {
                let at = grid.slot_midpoint(slot);
                let state = propagate(&sat.orbit, at).map_err(|e| OrbitError::Satellite {
                    satellite: sat.id.clone(),
                    source: Box::new(e),
                })?;
                for (st, st_pos) in &stations {
                    let el = propagate::elevation_from(state.position_m, *st_pos);
                    if el >= st.min_elevation_deg {
                        out.push(ContactWindow {
                            slot,
                            satellite_id: sat.id.clone(),
                            station_id: st.id.clone(),
                            elevation_deg: round_significant(el, 6),
                        });
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut windows: Vec<ContactWindow> = per_sat?.into_iter().flatten().collect();
    sort_windows(&mut windows);
    Ok(windows)
}

pub fn sort_windows(windows: &mut [ContactWindow]) {
    windows.sort_by(|a, b| (a.slot, &a.satellite_id, &a.station_id).cmp(&(b.slot, &b.satellite_id, &b.station_id)));
}

/// Precomputed windows if the scenario carries them, otherwise propagated.
pub fn scenario_windows(scenario: &ConstellationScenario) -> Result<Vec<ContactWindow>, OrbitError> {
    match &scenario.windows {
        Some(w) => {
            let mut w = w.clone();
            sort_windows(&mut w);
            Ok(w)
        }
        None => compute_contact_windows(scenario),
    }
}

/// Checks that every window lies within the horizon and names known
/// satellites and stations.
pub fn validate_windows(scenario: &ConstellationScenario, windows: &[ContactWindow]) -> Result<(), OrbitError> {
    for w in windows {
        if !scenario.time.contains(w.slot) {
            return Err(OrbitError::OutOfHorizon(w.slot));
        }
        if scenario.satellite(&w.satellite_id).is_none() {
            return Err(OrbitError::Validation(format!(
                "unknown satellite `{}`",
                w.satellite_id
            )));
        }
        if scenario.station(&w.station_id).is_none() {
            return Err(OrbitError::Validation(format!("unknown station `{}`", w.station_id)));
        }
        if !w.elevation_deg.is_finite() {
            return Err(OrbitError::Validation(format!(
                "non-finite elevation at slot {}",
                w.slot
            )));
        }
    }
    Ok(())
}

pub const WINDOWS_CSV_HEADER: [&str; 4] = ["slot", "satellite_id", "station_id", "elevation_deg"];

pub fn windows_to_csv(windows: &[ContactWindow]) -> String {
    let mut out = WINDOWS_CSV_HEADER.join(",");
    out.push('\n');
    for w in windows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            w.slot, w.satellite_id, w.station_id, w.elevation_deg
        ));
    }
    out
}

pub fn parse_windows_csv(text: &str, scenario: &ConstellationScenario) -> Result<Vec<ContactWindow>, OrbitError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| OrbitError::Parse(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != WINDOWS_CSV_HEADER {
        return Err(OrbitError::Parse(format!(
            "header must be `{}`",
            WINDOWS_CSV_HEADER.join(",")
        )));
    }
    let mut windows = Vec::new();
    for (i, row) in reader.deserialize::<ContactWindow>().enumerate() {
        windows.push(row.map_err(|e| OrbitError::Parse(format!("row {}: {e}", i + 2)))?);
    }
    if windows.windows(2).any(|p| p[1].slot < p[0].slot) {
        return Err(OrbitError::Parse("slots must be ascending".into()));
    }
    validate_windows(scenario, &windows)?;
    Ok(windows)
}

pub fn load_contact_windows(
    path: impl AsRef<Path>,
    scenario: &ConstellationScenario,
) -> Result<Vec<ContactWindow>, OrbitError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| OrbitError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_windows_csv(&text, scenario)
}
