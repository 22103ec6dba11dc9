//! Per-slot antenna assignment and the attacker's view of the target:
//! which slots are transmissible, which are attackable, and at what cost.

mod hungarian;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orbit::{semi_major_axis_m, slant_range_from_elevation, ContactWindow, EARTH_RADIUS_M};
use crate::scenario::{ConstellationScenario, Priority, Slot};

pub use hungarian::{hungarian, max_cardinality_assignment, Assignment};

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("no assignment covers min(rows, cols) pairs under the mask")]
    Infeasible,
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntennaAssignment {
    pub station_id: String,
    pub antenna: u32,
}

/// Low-priority antenna assignment for one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotSchedule {
    pub slot: Slot,
    pub assignments: BTreeMap<String, AntennaAssignment>,
    /// Idle antennas per station visible to at least one low-priority satellite.
    pub idle_antennas: BTreeMap<String, u32>,
    /// Slant range (m) of each assigned satellite to its station.
    pub proximity_cost_m: BTreeMap<String, f64>,
}

impl SlotSchedule {
    pub fn empty(slot: Slot) -> Self {
        SlotSchedule {
            slot,
            assignments: BTreeMap::new(),
            idle_antennas: BTreeMap::new(),
            proximity_cost_m: BTreeMap::new(),
        }
    }
}

/// Assigns visible low-priority satellites to antennas for a single slot.
/// Rows are satellites (by id), columns every antenna of every station seen
/// by some low-priority satellite; the cost is slant range, forbidden when
/// the satellite does not see that station.
pub fn assign_slot(scenario: &ConstellationScenario, slot: Slot, windows: &[ContactWindow]) -> SlotSchedule {
    let mut visible: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for w in windows.iter().filter(|w| w.slot == slot) {
        if scenario
            .satellite(&w.satellite_id)
            .is_some_and(|s| s.priority == Priority::Low)
        {
            visible
                .entry(w.satellite_id.as_str())
                .or_default()
                .insert(w.station_id.as_str(), w.elevation_deg);
        }
    }
    if visible.is_empty() {
        return SlotSchedule::empty(slot);
    }
    let stations: BTreeSet<&str> = visible.values().flat_map(|m| m.keys().copied()).collect();
    let columns: Vec<(&str, u32)> = stations
        .iter()
        .flat_map(|&st| {
            let count = scenario.station(st).map_or(0, |s| s.antenna_count);
            (0..count).map(move |k| (st, k))
        })
        .collect();
    let rows: Vec<&str> = visible.keys().copied().collect();

    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|&sat_id| {
            let sat = scenario.satellite(sat_id).expect("window satellite exists");
            let sat_radius = semi_major_axis_m(&sat.orbit);
            columns
                .iter()
                .map(|&(st_id, _)| match visible[sat_id].get(st_id) {
                    Some(&el) => {
                        let st = scenario.station(st_id).expect("window station exists");
                        slant_range_from_elevation(el, sat_radius, EARTH_RADIUS_M + st.altitude_m)
                    }
                    None => f64::INFINITY,
                })
                .collect()
        })
        .collect();

    let assignment = max_cardinality_assignment(&cost).expect("slant ranges are finite and non-negative");
    let mut schedule = SlotSchedule::empty(slot);
    for &st in &stations {
        let count = scenario.station(st).map_or(0, |s| s.antenna_count);
        schedule.idle_antennas.insert(st.to_string(), count);
    }
    for &(r, c) in &assignment.pairs {
        let (st, antenna) = columns[c];
        schedule.assignments.insert(
            rows[r].to_string(),
            AntennaAssignment {
                station_id: st.to_string(),
                antenna,
            },
        );
        schedule.proximity_cost_m.insert(rows[r].to_string(), cost[r][c]);
        *schedule.idle_antennas.get_mut(st).expect("column station listed") -= 1;
    }
    schedule
}

/// Schedules for every slot of the horizon, in slot order.
pub fn schedule_all(scenario: &ConstellationScenario, windows: &[ContactWindow]) -> Vec<SlotSchedule> {
    let mut by_slot: Vec<Vec<ContactWindow>> = vec![Vec::new(); scenario.time.last_slot() + 1];
    for w in windows {
        if w.slot < by_slot.len() {
            by_slot[w.slot].push(w.clone());
        }
    }
    by_slot
        .par_iter()
        .enumerate()
        .map(|(slot, ws)| assign_slot(scenario, slot, ws))
        .collect()
}

/// Target-satellite status for one slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackabilityRecord {
    pub slot: Slot,
    pub transmissible: bool,
    pub attackable: bool,
    /// High-priority satellites needed to deny the slot: idle antennas on
    /// the target's visible stations plus the target's own antenna.
    pub required_high_priority: u32,
    /// Attack cost; present exactly when the slot is attackable.
    pub cost: Option<u64>,
}

/// Derives transmissible/attackable status and cost for `target_id` at
/// every slot covered by `schedules`.
pub fn attackability(
    scenario: &ConstellationScenario,
    windows: &[ContactWindow],
    schedules: &[SlotSchedule],
    target_id: &str,
) -> Vec<AttackabilityRecord> {
    let mut target_stations: BTreeMap<Slot, BTreeSet<&str>> = BTreeMap::new();
    let mut high_by_station: BTreeMap<(Slot, &str), BTreeSet<&str>> = BTreeMap::new();
    for w in windows {
        if w.satellite_id == target_id {
            target_stations.entry(w.slot).or_default().insert(&w.station_id);
        } else if scenario
            .satellite(&w.satellite_id)
            .is_some_and(|s| s.priority == Priority::High)
        {
            high_by_station
                .entry((w.slot, w.station_id.as_str()))
                .or_default()
                .insert(&w.satellite_id);
        }
    }

    schedules
        .iter()
        .map(|sched| {
            let t = sched.slot;
            let transmissible = sched.assignments.contains_key(target_id);
            if !transmissible {
                return AttackabilityRecord {
                    slot: t,
                    transmissible: false,
                    attackable: false,
                    required_high_priority: 0,
                    cost: None,
                };
            }
            let stations = target_stations.get(&t).cloned().unwrap_or_default();
            let idle: u32 = stations
                .iter()
                .map(|st| sched.idle_antennas.get(*st).copied().unwrap_or(0))
                .sum();
            let required = idle + 1;
            let contenders: BTreeSet<&str> = stations
                .iter()
                .filter_map(|st| high_by_station.get(&(t, *st)))
                .flatten()
                .copied()
                .collect();
            let attackable = contenders.len() as u64 >= required as u64;
            AttackabilityRecord {
                slot: t,
                transmissible,
                attackable,
                required_high_priority: required,
                cost: attackable.then(|| scenario.costs.unit_task_price * required as u64),
            }
        })
        .collect()
}

pub const ATTACKABILITY_CSV_HEADER: &str = "slot,transmissible,attackable,required_high,cost";

pub fn attackability_to_csv(records: &[AttackabilityRecord]) -> String {
    let mut out = String::from(ATTACKABILITY_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.slot,
            u8::from(r.transmissible),
            u8::from(r.attackable),
            r.required_high_priority,
            r.cost.map(|c| c.to_string()).unwrap_or_default()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{high_sat, low_sat, station, tiny_scenario};

    fn window(slot: Slot, sat: &str, st: &str, el: f64) -> ContactWindow {
        ContactWindow {
            slot,
            satellite_id: sat.into(),
            station_id: st.into(),
            elevation_deg: el,
        }
    }

    #[test]
    fn single_satellite_takes_antenna_zero() {
        let s = tiny_scenario(vec![low_sat("a")], vec![station("gs", 2)]);
        let sched = assign_slot(&s, 0, &[window(0, "a", "gs", 30.0)]);
        assert_eq!(sched.assignments["a"].antenna, 0);
        assert_eq!(sched.idle_antennas["gs"], 1);
    }

    #[test]
    fn nearest_two_of_three_win_two_antennas() {
        let s = tiny_scenario(vec![low_sat("a"), low_sat("b"), low_sat("c")], vec![station("gs", 2)]);
        let ws = [
            window(0, "a", "gs", 10.0),
            window(0, "b", "gs", 60.0),
            window(0, "c", "gs", 35.0),
        ];
        // brute force over the 3x2 range matrix: choose the pair of rows and
        // column order with least total slant range
        let radius = semi_major_axis_m(&s.satellites[0].orbit);
        let range = |el: f64| slant_range_from_elevation(el, radius, EARTH_RADIUS_M);
        let rng = [range(10.0), range(60.0), range(35.0)];
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..3 {
            for j in 0..3 {
                if i != j && rng[i] + rng[j] < best.0 {
                    best = (rng[i] + rng[j], i.min(j), i.max(j));
                }
            }
        }
        assert_eq!((best.1, best.2), (1, 2));
        let sched = assign_slot(&s, 0, &ws);
        assert!(!sched.assignments.contains_key("a"));
        assert_eq!(sched.assignments["b"].antenna, 0);
        assert_eq!(sched.assignments["c"].antenna, 1);
        assert_eq!(sched.idle_antennas["gs"], 0);
    }

    #[test]
    fn nothing_visible_is_empty() {
        let s = tiny_scenario(vec![low_sat("a")], vec![station("gs", 2)]);
        let sched = assign_slot(&s, 3, &[]);
        assert!(sched.assignments.is_empty());
    }

    fn records(n_antennas: u32, high_visible: usize, target_visible: bool) -> AttackabilityRecord {
        let mut sats = vec![low_sat("target")];
        let mut ws = Vec::new();
        if target_visible {
            ws.push(window(0, "target", "gs", 40.0));
        }
        for k in 0..high_visible {
            let id = format!("hp{k}");
            sats.push(high_sat(&id));
            ws.push(window(0, &id, "gs", 20.0));
        }
        let s = tiny_scenario(sats, vec![station("gs", n_antennas)]);
        let schedules = schedule_all(&s, &ws);
        attackability(&s, &ws, &schedules, "target").remove(0)
    }

    #[test]
    fn preemption_needs_idle_plus_one() {
        // no idle antenna, one high-priority satellite: attackable at unit cost
        let r = records(1, 1, true);
        assert!(r.transmissible && r.attackable);
        assert_eq!(r.required_high_priority, 1);
        assert_eq!(r.cost, Some(1));
        // one idle antenna: a single high-priority satellite is not enough
        let r = records(2, 1, true);
        assert!(r.transmissible && !r.attackable);
        assert_eq!(r.required_high_priority, 2);
        assert_eq!(r.cost, None);
        assert!(records(2, 2, true).attackable);
        // target not visible at all
        let r = records(1, 3, false);
        assert!(!r.transmissible && !r.attackable);
    }
}
