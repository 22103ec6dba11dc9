//! World description: time grid, satellites, stations, capture traces and
//! the attack target.
//!
//! A [`ConstellationScenario`] is immutable once loaded. Everything the
//! scheduler, queue and planners need is derived from it.

mod file;
mod trace_csv;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orbit::{ContactWindow, TleElements};

pub use file::{load_scenario, parse_scenario, save_scenario, scenario_to_json};
pub use trace_csv::{parse_trace_csv, write_trace_csv};

/// Index of a time slot on the grid, `0..=T`.
pub type Slot = usize;

pub const DEFAULT_SLOT_SECONDS: u32 = 60;
pub const DEFAULT_DOWNLINK_RATE_BPS: u64 = 160_000_000;
pub const DEFAULT_CAPACITY_BYTES: u64 = 2_000_000_000_000;
pub const DEFAULT_IMAGE_BYTES: u64 = 200_000_000;
pub const DEFAULT_INITIAL_QUEUE_UNITS: u32 = 500;
pub const DEFAULT_ANTENNA_COUNT: u32 = 4;
pub const DEFAULT_MIN_ELEVATION_DEG: f64 = 5.0;
pub const DEFAULT_UNIT_TASK_PRICE: u64 = 1;

/// Prefix of the synthesized ids for units already queued at the attack
/// start slot.
pub const INITIAL_UNIT_PREFIX: &str = "init-";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("timestamp {0} is outside the scenario horizon")]
    OutOfHorizon(DateTime<Utc>),
}

impl ScenarioError {
    pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Uniform slot discretization of the simulated interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub epoch: DateTime<Utc>,
    pub slot_seconds: u32,
    /// Number of slots; the last slot index is `horizon_slots - 1`.
    pub horizon_slots: u32,
}

impl TimeGrid {
    pub fn new(epoch: DateTime<Utc>, slot_seconds: u32, horizon_slots: u32) -> Result<Self, ScenarioError> {
        if slot_seconds == 0 {
            return Err(ScenarioError::invalid("time.slot_seconds", "must be positive"));
        }
        if horizon_slots == 0 {
            return Err(ScenarioError::invalid("time.horizon_slots", "must be at least 1"));
        }
        Ok(TimeGrid {
            epoch,
            slot_seconds,
            horizon_slots,
        })
    }

    /// Index of the last slot (`T`).
    pub fn last_slot(&self) -> Slot {
        self.horizon_slots as Slot - 1
    }

    pub fn slot_start(&self, slot: Slot) -> DateTime<Utc> {
        self.epoch + Duration::seconds(slot as i64 * self.slot_seconds as i64)
    }

    /// Midpoint of a slot, the instant at which visibility is sampled.
    pub fn slot_midpoint(&self, slot: Slot) -> DateTime<Utc> {
        self.slot_start(slot) + Duration::milliseconds(self.slot_seconds as i64 * 500)
    }

    pub fn slot_of(&self, at: DateTime<Utc>) -> Result<Slot, ScenarioError> {
        let offset_ms = (at - self.epoch).num_milliseconds();
        let slot_ms = self.slot_seconds as i64 * 1000;
        if offset_ms < 0 || offset_ms >= slot_ms * self.horizon_slots as i64 {
            return Err(ScenarioError::OutOfHorizon(at));
        }
        Ok((offset_ms / slot_ms) as Slot)
    }

    /// Whole slots needed to cover `seconds` (rounded up).
    pub fn slots_for_seconds(&self, seconds: u64) -> usize {
        seconds.div_ceil(self.slot_seconds as u64) as usize
    }

    pub fn contains(&self, slot: Slot) -> bool {
        slot <= self.last_slot()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Priority {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteSpec {
    pub id: String,
    pub priority: Priority,
    pub orbit: TleElements,
    /// Onboard storage. High-priority satellites carry 0.
    pub capacity_bytes: u64,
    pub downlink_rate_bps: u64,
}

impl SatelliteSpec {
    pub fn is_low_priority(&self) -> bool {
        self.priority == Priority::Low
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStationSpec {
    pub id: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
    pub antenna_count: u32,
    pub min_elevation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataUnit {
    pub unit_id: String,
    pub capture_slot: Slot,
    pub size_bytes: u64,
}

/// Pre-existing queue content at the attack start slot, expressed as a count
/// of equally sized units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialQueue {
    pub count: u32,
    pub size_bytes: u64,
}

impl Default for InitialQueue {
    fn default() -> Self {
        InitialQueue {
            count: DEFAULT_INITIAL_QUEUE_UNITS,
            size_bytes: DEFAULT_IMAGE_BYTES,
        }
    }
}

impl InitialQueue {
    pub fn empty() -> Self {
        InitialQueue {
            count: 0,
            size_bytes: DEFAULT_IMAGE_BYTES,
        }
    }

    pub fn total_bytes(&self) -> u64 {
        self.count as u64 * self.size_bytes
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatelliteTrace {
    pub initial_queue: InitialQueue,
    /// Captured units in FIFO arrival order.
    pub units: Vec<DataUnit>,
}

impl SatelliteTrace {
    /// Units queued at the attack start slot, with synthesized ids
    /// `init-1 ..= init-N` (head first).
    pub fn initial_units(&self, t0: Slot) -> Vec<DataUnit> {
        (1..=self.initial_queue.count)
            .map(|k| DataUnit {
                unit_id: format!("{INITIAL_UNIT_PREFIX}{k}"),
                capture_slot: t0,
                size_bytes: self.initial_queue.size_bytes,
            })
            .collect()
    }

    /// Units captured at or after `t0`, in arrival order.
    pub fn arrivals_from(&self, t0: Slot) -> impl Iterator<Item = &DataUnit> {
        self.units.iter().filter(move |u| u.capture_slot >= t0)
    }

    /// Full FIFO sequence as seen from `t0`: queued units then arrivals.
    pub fn fifo_from(&self, t0: Slot) -> Vec<DataUnit> {
        let mut all = self.initial_units(t0);
        all.extend(self.arrivals_from(t0).cloned());
        all
    }

    /// Aggregate input `I(t)` in bytes.
    pub fn input_at(&self, slot: Slot) -> u64 {
        self.units
            .iter()
            .filter(|u| u.capture_slot == slot)
            .map(|u| u.size_bytes)
            .sum()
    }
}

/// Per low-priority satellite capture records, keyed by satellite id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaptureTrace {
    pub satellites: BTreeMap<String, SatelliteTrace>,
}

impl CaptureTrace {
    pub fn get(&self, satellite_id: &str) -> Option<&SatelliteTrace> {
        self.satellites.get(satellite_id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub satellite_id: String,
    /// Ordered by capture time; the last entry is the delay reference unit.
    pub target_unit_ids: Vec<String>,
    pub attack_start_slot: Slot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_downlink_slot: Option<Slot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub unit_task_price: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            unit_task_price: DEFAULT_UNIT_TASK_PRICE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationScenario {
    pub time: TimeGrid,
    pub satellites: Vec<SatelliteSpec>,
    pub stations: Vec<GroundStationSpec>,
    pub trace: CaptureTrace,
    pub target: TargetSpec,
    pub costs: CostModel,
    pub seed: u64,
    /// Precomputed contact windows; when present, propagation is bypassed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<ContactWindow>>,
}

impl ConstellationScenario {
    pub fn satellite(&self, id: &str) -> Option<&SatelliteSpec> {
        self.satellites.iter().find(|s| s.id == id)
    }

    pub fn station(&self, id: &str) -> Option<&GroundStationSpec> {
        self.stations.iter().find(|s| s.id == id)
    }

    pub fn target_satellite(&self) -> &SatelliteSpec {
        self.satellite(&self.target.satellite_id)
            .expect("validated scenario has its target satellite")
    }

    pub fn target_trace(&self) -> SatelliteTrace {
        self.trace
            .get(&self.target.satellite_id)
            .cloned()
            .unwrap_or(SatelliteTrace {
                initial_queue: InitialQueue::empty(),
                units: Vec::new(),
            })
    }

    pub fn low_priority(&self) -> impl Iterator<Item = &SatelliteSpec> {
        self.satellites.iter().filter(|s| s.priority == Priority::Low)
    }

    pub fn high_priority(&self) -> impl Iterator<Item = &SatelliteSpec> {
        self.satellites.iter().filter(|s| s.priority == Priority::High)
    }

    /// Checks every structural invariant. Called by the loader; callers that
    /// build scenarios in code should call it too.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        TimeGrid::new(self.time.epoch, self.time.slot_seconds, self.time.horizon_slots)?;

        let mut ids = BTreeSet::new();
        for (i, sat) in self.satellites.iter().enumerate() {
            let path = format!("satellites[{i}]");
            if sat.id.is_empty() {
                return Err(ScenarioError::invalid(format!("{path}.id"), "empty id"));
            }
            if !ids.insert(sat.id.as_str()) {
                return Err(ScenarioError::invalid(
                    format!("{path}.id"),
                    format!("duplicate satellite id `{}`", sat.id),
                ));
            }
            if sat.priority == Priority::Low && sat.capacity_bytes == 0 {
                return Err(ScenarioError::invalid(
                    format!("{path}.capacity_bytes"),
                    "low-priority satellites need a positive capacity",
                ));
            }
            if sat.downlink_rate_bps == 0 {
                return Err(ScenarioError::invalid(
                    format!("{path}.downlink_rate_bps"),
                    "must be positive",
                ));
            }
            sat.orbit
                .validate()
                .map_err(|e| ScenarioError::invalid(format!("{path}.orbit"), e.to_string()))?;
        }

        let mut station_ids = BTreeSet::new();
        for (i, st) in self.stations.iter().enumerate() {
            let path = format!("stations[{i}]");
            if !station_ids.insert(st.id.as_str()) {
                return Err(ScenarioError::invalid(
                    format!("{path}.id"),
                    format!("duplicate station id `{}`", st.id),
                ));
            }
            if st.antenna_count == 0 {
                return Err(ScenarioError::invalid(
                    format!("{path}.antenna_count"),
                    "must be at least 1",
                ));
            }
            if !(-90.0..=90.0).contains(&st.latitude_deg) {
                return Err(ScenarioError::invalid(
                    format!("{path}.latitude_deg"),
                    "outside [-90, 90]",
                ));
            }
            if !(-180.0..=360.0).contains(&st.longitude_deg) {
                return Err(ScenarioError::invalid(
                    format!("{path}.longitude_deg"),
                    "outside [-180, 360]",
                ));
            }
            if !(0.0..90.0).contains(&st.min_elevation_deg) && st.min_elevation_deg != 90.0 {
                return Err(ScenarioError::invalid(
                    format!("{path}.min_elevation_deg"),
                    "outside [0, 90]",
                ));
            }
        }

        for (sat_id, trace) in &self.trace.satellites {
            let path = format!("trace.{sat_id}");
            match self.satellite(sat_id) {
                None => {
                    return Err(ScenarioError::invalid(path, format!("unknown satellite `{sat_id}`")));
                }
                Some(s) if s.priority != Priority::Low => {
                    return Err(ScenarioError::invalid(
                        path,
                        "capture traces belong to low-priority satellites",
                    ));
                }
                _ => {}
            }
            if trace.initial_queue.count > 0 && trace.initial_queue.size_bytes == 0 {
                return Err(ScenarioError::invalid(
                    format!("{path}.initial_queue.size_bytes"),
                    "must be positive",
                ));
            }
            let mut unit_ids = BTreeSet::new();
            let mut last_slot = 0;
            for (k, unit) in trace.units.iter().enumerate() {
                let upath = format!("{path}.units[{k}]");
                if unit.size_bytes == 0 {
                    return Err(ScenarioError::invalid(
                        format!("{upath}.size_bytes"),
                        "must be positive",
                    ));
                }
                if !self.time.contains(unit.capture_slot) {
                    return Err(ScenarioError::invalid(
                        format!("{upath}.capture_slot"),
                        format!("slot {} outside horizon", unit.capture_slot),
                    ));
                }
                if unit.capture_slot < last_slot {
                    return Err(ScenarioError::invalid(upath, "units must be ordered by capture slot"));
                }
                last_slot = unit.capture_slot;
                if unit.unit_id.starts_with(INITIAL_UNIT_PREFIX) {
                    return Err(ScenarioError::invalid(
                        format!("{upath}.unit_id"),
                        format!("prefix `{INITIAL_UNIT_PREFIX}` is reserved for queued units"),
                    ));
                }
                if !unit_ids.insert(unit.unit_id.as_str()) {
                    return Err(ScenarioError::invalid(
                        format!("{upath}.unit_id"),
                        format!("duplicate unit id `{}`", unit.unit_id),
                    ));
                }
            }
        }

        self.validate_target()?;

        if let Some(windows) = &self.windows {
            crate::orbit::validate_windows(self, windows)
                .map_err(|e| ScenarioError::invalid("windows", e.to_string()))?;
        }
        Ok(())
    }

    fn validate_target(&self) -> Result<(), ScenarioError> {
        let target = &self.target;
        let sat = self.satellite(&target.satellite_id).ok_or_else(|| {
            ScenarioError::invalid(
                "target.satellite_id",
                format!("unknown satellite `{}`", target.satellite_id),
            )
        })?;
        if sat.priority != Priority::Low {
            return Err(ScenarioError::invalid(
                "target.satellite_id",
                "target must be a low-priority satellite",
            ));
        }
        if !self.time.contains(target.attack_start_slot) {
            return Err(ScenarioError::invalid("target.attack_start_slot", "outside horizon"));
        }
        if target.target_unit_ids.is_empty() {
            return Err(ScenarioError::invalid(
                "target.target_unit_ids",
                "at least one target unit required",
            ));
        }
        if let Some(t) = target.target_downlink_slot {
            if !self.time.contains(t) {
                return Err(ScenarioError::invalid("target.target_downlink_slot", "outside horizon"));
            }
        }
        let trace = self.target_trace();
        let fifo = trace.fifo_from(target.attack_start_slot);
        let mut previous: Option<usize> = None;
        for (i, id) in target.target_unit_ids.iter().enumerate() {
            let pos = fifo.iter().position(|u| &u.unit_id == id).ok_or_else(|| {
                ScenarioError::invalid(
                    format!("target.target_unit_ids[{i}]"),
                    format!(
                        "unit `{id}` not in the capture trace of `{}` from slot {}",
                        target.satellite_id, target.attack_start_slot
                    ),
                )
            })?;
            if previous.is_some_and(|p| pos <= p) {
                return Err(ScenarioError::invalid(
                    format!("target.target_unit_ids[{i}]"),
                    "targets must be listed in capture order without repeats",
                ));
            }
            previous = Some(pos);
        }
        Ok(())
    }
}

/// Convenience wrapper mapping I/O failures onto [`ScenarioError::Io`].
pub(crate) fn read_to_string(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn grid() -> TimeGrid {
        TimeGrid::new(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(), 60, 10).unwrap()
    }

    #[test]
    fn slot_of_floor_and_boundaries() {
        let g = grid();
        assert_eq!(g.slot_of(g.epoch).unwrap(), 0);
        assert_eq!(g.slot_of(g.epoch + Duration::seconds(60)).unwrap(), 1);
        assert_eq!(g.slot_of(g.epoch + Duration::seconds(150)).unwrap(), 2);
        assert_eq!(g.slot_of(g.epoch + Duration::seconds(599)).unwrap(), 9);
        assert!(matches!(
            g.slot_of(g.epoch + Duration::seconds(600)),
            Err(ScenarioError::OutOfHorizon(_))
        ));
        assert!(g.slot_of(g.epoch - Duration::seconds(1)).is_err());
    }

    #[test]
    fn grid_rejects_zero_lengths() {
        let epoch = grid().epoch;
        assert!(TimeGrid::new(epoch, 0, 10).is_err());
        assert!(TimeGrid::new(epoch, 60, 0).is_err());
        assert_eq!(grid().last_slot(), 9);
    }

    #[test]
    fn initial_units_are_synthesized_head_first() {
        let trace = SatelliteTrace {
            initial_queue: InitialQueue {
                count: 3,
                size_bytes: 7,
            },
            units: vec![DataUnit {
                unit_id: "a".into(),
                capture_slot: 4,
                size_bytes: 2,
            }],
        };
        let fifo = trace.fifo_from(2);
        let ids: Vec<_> = fifo.iter().map(|u| u.unit_id.as_str()).collect();
        assert_eq!(ids, ["init-1", "init-2", "init-3", "a"]);
        assert_eq!(trace.fifo_from(5).len(), 3);
        assert_eq!(trace.input_at(4), 2);
    }
}
