//! JSON scenario file format.
//!
//! The raw structs below mirror the on-disk layout and carry the defaults;
//! [`ConstellationScenario`] is what the rest of the crate sees.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::*;
use crate::orbit::{parse_tle, ContactWindow, TleElements};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    time: RawTime,
    satellites: Vec<RawSatellite>,
    stations: Vec<RawStation>,
    #[serde(default)]
    trace: Option<RawTrace>,
    target: TargetSpec,
    #[serde(default)]
    costs: RawCosts,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    windows: Option<Vec<ContactWindow>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    epoch: DateTime<Utc>,
    #[serde(default = "default_slot_seconds")]
    slot_seconds: u32,
    horizon_slots: u32,
}

fn default_slot_seconds() -> u32 {
    DEFAULT_SLOT_SECONDS
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSatellite {
    id: String,
    priority: Priority,
    #[serde(default)]
    tle: Option<Vec<String>>,
    #[serde(default)]
    orbit: Option<TleElements>,
    #[serde(default)]
    capacity_bytes: Option<u64>,
    #[serde(default)]
    downlink_rate_bps: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStation {
    id: String,
    latitude_deg: f64,
    longitude_deg: f64,
    #[serde(default)]
    altitude_m: f64,
    #[serde(default = "default_antennas")]
    antenna_count: u32,
    #[serde(default = "default_min_elevation")]
    min_elevation_deg: f64,
}

fn default_antennas() -> u32 {
    DEFAULT_ANTENNA_COUNT
}

fn default_min_elevation() -> f64 {
    DEFAULT_MIN_ELEVATION_DEG
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawTrace {
    Csv {
        csv: String,
        #[serde(default)]
        initial_queue: BTreeMap<String, RawInitialQueue>,
    },
    Inline(BTreeMap<String, RawSatelliteTrace>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSatelliteTrace {
    #[serde(default)]
    initial_queue: Option<RawInitialQueue>,
    #[serde(default)]
    units: Vec<DataUnit>,
    #[serde(default)]
    periodic: Option<RawPeriodic>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitialQueue {
    #[serde(default = "default_initial_count")]
    count: u32,
    #[serde(default = "default_image_bytes")]
    size_bytes: u64,
}

impl From<RawInitialQueue> for InitialQueue {
    fn from(raw: RawInitialQueue) -> Self {
        InitialQueue {
            count: raw.count,
            size_bytes: raw.size_bytes,
        }
    }
}

fn default_initial_count() -> u32 {
    DEFAULT_INITIAL_QUEUE_UNITS
}

fn default_image_bytes() -> u64 {
    DEFAULT_IMAGE_BYTES
}

/// Regular capture pattern, expanded into explicit units at load time.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPeriodic {
    every_slots: usize,
    #[serde(default)]
    start_slot: Slot,
    #[serde(default)]
    end_slot: Option<Slot>,
    #[serde(default = "default_image_bytes")]
    size_bytes: u64,
    #[serde(default = "one")]
    units_per_capture: u32,
    #[serde(default = "default_prefix")]
    id_prefix: String,
}

fn one() -> u32 {
    1
}

fn default_prefix() -> String {
    "img-".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCosts {
    #[serde(default = "default_price")]
    unit_task_price: u64,
}

impl Default for RawCosts {
    fn default() -> Self {
        RawCosts {
            unit_task_price: DEFAULT_UNIT_TASK_PRICE,
        }
    }
}

fn default_price() -> u64 {
    DEFAULT_UNIT_TASK_PRICE
}

/// Reads and validates a scenario file. Relative CSV paths inside the file
/// resolve against the file's directory.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ConstellationScenario, ScenarioError> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, Some(&base))
}

/// Parses scenario JSON text. `base_dir` resolves relative trace CSV paths.
pub fn parse_scenario(text: &str, base_dir: Option<&Path>) -> Result<ConstellationScenario, ScenarioError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let time = TimeGrid::new(raw.time.epoch, raw.time.slot_seconds, raw.time.horizon_slots)?;

    let mut satellites = Vec::with_capacity(raw.satellites.len());
    for (i, s) in raw.satellites.into_iter().enumerate() {
        let orbit = match (s.tle, s.orbit) {
            (Some(lines), None) => {
                let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
                parse_tle(&refs).map_err(|e| ScenarioError::invalid(format!("satellites[{i}].tle"), e.to_string()))?
            }
            (None, Some(orbit)) => orbit,
            (Some(_), Some(_)) => {
                return Err(ScenarioError::invalid(
                    format!("satellites[{i}]"),
                    "give either `tle` or `orbit`, not both",
                ))
            }
            (None, None) => {
                return Err(ScenarioError::invalid(
                    format!("satellites[{i}]"),
                    "missing `tle` or `orbit`",
                ))
            }
        };
        let capacity_bytes = s.capacity_bytes.unwrap_or(match s.priority {
            Priority::Low => DEFAULT_CAPACITY_BYTES,
            Priority::High => 0,
        });
        satellites.push(SatelliteSpec {
            id: s.id,
            priority: s.priority,
            orbit,
            capacity_bytes,
            downlink_rate_bps: s.downlink_rate_bps.unwrap_or(DEFAULT_DOWNLINK_RATE_BPS),
        });
    }

    let stations = raw
        .stations
        .into_iter()
        .map(|s| GroundStationSpec {
            id: s.id,
            latitude_deg: s.latitude_deg,
            longitude_deg: s.longitude_deg,
            altitude_m: s.altitude_m,
            antenna_count: s.antenna_count,
            min_elevation_deg: s.min_elevation_deg,
        })
        .collect();

    let trace = match raw.trace {
        None => CaptureTrace::default(),
        Some(RawTrace::Inline(map)) => {
            let mut out = BTreeMap::new();
            for (sat_id, t) in map {
                out.insert(sat_id.clone(), expand_trace(&sat_id, t, &time)?);
            }
            CaptureTrace { satellites: out }
        }
        Some(RawTrace::Csv { csv, initial_queue }) => {
            let mut csv_path = PathBuf::from(&csv);
            if csv_path.is_relative() {
                if let Some(base) = base_dir {
                    csv_path = base.join(csv_path);
                }
            }
            let text = read_to_string(&csv_path)?;
            let mut trace = parse_trace_csv(&text, &time)?;
            for (sat_id, q) in initial_queue {
                trace
                    .satellites
                    .entry(sat_id)
                    .or_insert_with(|| SatelliteTrace {
                        initial_queue: InitialQueue::empty(),
                        units: Vec::new(),
                    })
                    .initial_queue = q.into();
            }
            trace
        }
    };

    let scenario = ConstellationScenario {
        time,
        satellites,
        stations,
        trace,
        target: raw.target,
        costs: CostModel {
            unit_task_price: raw.costs.unit_task_price,
        },
        seed: raw.seed,
        windows: raw.windows,
    };
    scenario.validate()?;
    Ok(scenario)
}

fn expand_trace(sat_id: &str, raw: RawSatelliteTrace, time: &TimeGrid) -> Result<SatelliteTrace, ScenarioError> {
    let mut units = raw.units;
    if let Some(p) = raw.periodic {
        if p.every_slots == 0 {
            return Err(ScenarioError::invalid(
                format!("trace.{sat_id}.periodic.every_slots"),
                "must be positive",
            ));
        }
        let end = p.end_slot.unwrap_or(time.last_slot()).min(time.last_slot());
        let mut n = 0u64;
        for slot in (p.start_slot..=end).step_by(p.every_slots) {
            for _ in 0..p.units_per_capture {
                n += 1;
                units.push(DataUnit {
                    unit_id: format!("{}{n}", p.id_prefix),
                    capture_slot: slot,
                    size_bytes: p.size_bytes,
                });
            }
        }
        // stable: explicit units keep their relative order within a slot
        units.sort_by_key(|u| u.capture_slot);
    }
    Ok(SatelliteTrace {
        initial_queue: raw.initial_queue.map(Into::into).unwrap_or_default(),
        units,
    })
}

/// Canonical JSON form; reloading it yields an equal scenario.
pub fn scenario_to_json(scenario: &ConstellationScenario) -> String {
    let mut s = serde_json::to_string_pretty(scenario).expect("scenario is always serializable");
    s.push('\n');
    s
}

pub fn save_scenario(scenario: &ConstellationScenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    std::fs::write(path, scenario_to_json(scenario)).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}
