//! Fixed-column two-line element sets.

use chrono::{DateTime, Datelike, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::OrbitError;

/// Largest eccentricity accepted by the circular propagation model.
pub const MAX_ECCENTRICITY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TleElements {
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub eccentricity: f64,
    pub arg_perigee_deg: f64,
    pub mean_anomaly_deg: f64,
    pub mean_motion_rev_per_day: f64,
    pub epoch: DateTime<Utc>,
}

impl TleElements {
    pub fn validate(&self) -> Result<(), OrbitError> {
        let finite = [
            self.inclination_deg,
            self.raan_deg,
            self.eccentricity,
            self.arg_perigee_deg,
            self.mean_anomaly_deg,
            self.mean_motion_rev_per_day,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(OrbitError::InvalidElements("non-finite element".into()));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return Err(OrbitError::InvalidElements(format!(
                "inclination {} outside [0, 180]",
                self.inclination_deg
            )));
        }
        if self.mean_motion_rev_per_day <= 0.0 {
            return Err(OrbitError::InvalidElements("mean motion must be positive".into()));
        }
        if !(0.0..=MAX_ECCENTRICITY).contains(&self.eccentricity) {
            return Err(OrbitError::InvalidElements(format!(
                "eccentricity {} outside [0, {MAX_ECCENTRICITY}]",
                self.eccentricity
            )));
        }
        Ok(())
    }

    /// Orbital period in seconds, `86400 / n`.
    pub fn period_seconds(&self) -> f64 {
        86_400.0 / self.mean_motion_rev_per_day
    }
}

/// NORAD checksum: digits count their value, `-` counts one, modulo 10.
pub fn tle_checksum(line: &str) -> u8 {
    let sum: u32 = line
        .chars()
        .take(68)
        .map(|c| match c {
            '0'..='9' => c as u32 - '0' as u32,
            '-' => 1,
            _ => 0,
        })
        .sum();
    (sum % 10) as u8
}

/// Parses two element lines, optionally preceded by a name line.
pub fn parse_tle(lines: &[&str]) -> Result<TleElements, OrbitError> {
    let (l1, l2) = match lines {
        [l1, l2] => (*l1, *l2),
        [_name, l1, l2] => (*l1, *l2),
        _ => {
            return Err(OrbitError::BadLayout(format!(
                "expected 2 or 3 lines, got {}",
                lines.len()
            )))
        }
    };
    let l1 = l1.trim_end();
    let l2 = l2.trim_end();
    for (n, line) in [(1u8, l1), (2, l2)] {
        if !line.is_ascii() || line.len() != 69 {
            return Err(OrbitError::BadLayout(format!("line {n} must be 69 ASCII characters")));
        }
        if !line.starts_with(&format!("{n} ")) {
            return Err(OrbitError::BadLayout(format!("line {n} must start with `{n} `")));
        }
        let found = line.as_bytes()[68];
        if !found.is_ascii_digit() {
            return Err(OrbitError::BadLayout(format!("line {n} checksum is not a digit")));
        }
        let expected = tle_checksum(line);
        if found - b'0' != expected {
            return Err(OrbitError::BadChecksum {
                line: n,
                expected,
                found: found - b'0',
            });
        }
    }
    if l1[2..7] != l2[2..7] {
        return Err(OrbitError::BadLayout("catalog numbers differ between lines".into()));
    }

    let year: i32 = field(l1, 18, 20, "epoch year")?;
    let day: f64 = field(l1, 20, 32, "epoch day")?;
    let year = if year < 57 { 2000 + year } else { 1900 + year };
    if !(1.0..367.0).contains(&day) {
        return Err(OrbitError::BadLayout(format!("epoch day {day} out of range")));
    }
    let jan1 = Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap();
    let micros = ((day - 1.0) * 86_400e6).round() as i64;
    let epoch = jan1 + Duration::microseconds(micros);

    let ecc_digits = l2[26..33].trim();
    if ecc_digits.is_empty() || !ecc_digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(OrbitError::BadLayout("eccentricity field".into()));
    }
    let eccentricity: f64 = format!("0.{ecc_digits}").parse().expect("digits parse as float");

    let elements = TleElements {
        inclination_deg: field(l2, 8, 16, "inclination")?,
        raan_deg: field(l2, 17, 25, "raan")?,
        eccentricity,
        arg_perigee_deg: field(l2, 34, 42, "argument of perigee")?,
        mean_anomaly_deg: field(l2, 43, 51, "mean anomaly")?,
        mean_motion_rev_per_day: field(l2, 52, 63, "mean motion")?,
        epoch,
    };
    elements.validate()?;
    Ok(elements)
}

fn field<T: std::str::FromStr>(line: &str, start: usize, end: usize, name: &str) -> Result<T, OrbitError> {
    line[start..end]
        .trim()
        .parse()
        .map_err(|_| OrbitError::BadLayout(format!("cannot parse {name} from `{}`", &line[start..end])))
}

/// Renders elements as a checksummed line pair. Drag terms are zero.
pub fn format_tle(elements: &TleElements, catalog_number: u32) -> [String; 2] {
    let e = elements;
    let yy = e.epoch.year() % 100;
    let jan1 = Utc.with_ymd_and_hms(e.epoch.year(), 1, 1, 0, 0, 0).unwrap();
    let day = 1.0 + (e.epoch - jan1).num_microseconds().unwrap_or(0) as f64 / 86_400e6;
    let catalog = catalog_number % 100_000;
    let l1 = format!(
        "1 {catalog:05}U {:<8} {yy:02}{day:012.8}  .00000000  00000-0  00000-0 0  999",
        "24001A"
    );
    let ecc = format!("{:.7}", e.eccentricity.clamp(0.0, 0.999_999_9));
    let l2 = format!(
        "2 {catalog:05} {:8.4} {:8.4} {} {:8.4} {:8.4} {:11.8}{:5}",
        e.inclination_deg,
        e.raan_deg.rem_euclid(360.0),
        &ecc[2..],
        e.arg_perigee_deg.rem_euclid(360.0),
        e.mean_anomaly_deg.rem_euclid(360.0),
        e.mean_motion_rev_per_day,
        1
    );
    [with_checksum(l1), with_checksum(l2)]
}

fn with_checksum(mut line: String) -> String {
    debug_assert_eq!(line.len(), 68, "tle body must be 68 columns: `{line}`");
    let c = tle_checksum(&line);
    line.push(char::from(b'0' + c));
    line
}
