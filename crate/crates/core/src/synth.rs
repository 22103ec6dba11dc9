//! Built-in scenarios: the two hand-checkable queue examples, a 24-hour
//! two-constellation desk scenario, and random queue instances for property
//! tests.

use chrono::{DateTime, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::orbit::{ContactWindow, TleElements};
use crate::planner::AttackSurface;
use crate::queue::QueueModel;
use crate::scenario::{
    CaptureTrace, ConstellationScenario, CostModel, DataUnit, GroundStationSpec, InitialQueue, Priority, SatelliteSpec,
    SatelliteTrace, Slot, TargetSpec, TimeGrid, DEFAULT_DOWNLINK_RATE_BPS, DEFAULT_IMAGE_BYTES,
    DEFAULT_MIN_ELEVATION_DEG,
};

fn small_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
}

fn sun_synchronous(raan_deg: f64, mean_anomaly_deg: f64, epoch: DateTime<Utc>) -> TleElements {
    TleElements {
        inclination_deg: 97.4,
        raan_deg,
        eccentricity: 0.0001,
        arg_perigee_deg: 0.0,
        mean_anomaly_deg: mean_anomaly_deg.rem_euclid(360.0),
        mean_motion_rev_per_day: 15.2,
        epoch,
    }
}

/// Ten-slot example in units of 60 bytes: a downlink of two units per slot
/// in even slots, one arrival per slot from slot 1, five queued units ahead
/// of the arrivals and the third of them as the target.
fn small_example(capacity_units: u64) -> ConstellationScenario {
    const UNIT: u64 = 60;
    let epoch = small_epoch();
    let satellites = vec![
        SatelliteSpec {
            id: "lp-1".into(),
            priority: Priority::Low,
            orbit: sun_synchronous(0.0, 0.0, epoch),
            capacity_bytes: capacity_units * UNIT,
            // 2 units per 60 s slot
            downlink_rate_bps: 2 * UNIT * 8 / 60,
        },
        SatelliteSpec {
            id: "hp-1".into(),
            priority: Priority::High,
            orbit: sun_synchronous(0.0, 5.0, epoch),
            capacity_bytes: 0,
            downlink_rate_bps: DEFAULT_DOWNLINK_RATE_BPS,
        },
    ];
    let stations = vec![GroundStationSpec {
        id: "gs-1".into(),
        latitude_deg: 78.23,
        longitude_deg: 15.39,
        altitude_m: 0.0,
        antenna_count: 1,
        min_elevation_deg: DEFAULT_MIN_ELEVATION_DEG,
    }];
    let mut windows = Vec::new();
    for slot in (2..=10).step_by(2) {
        for (sat, el) in [("hp-1", 30.0), ("lp-1", 45.0)] {
            windows.push(ContactWindow {
                slot,
                satellite_id: sat.into(),
                station_id: "gs-1".into(),
                elevation_deg: el,
            });
        }
    }
    crate::orbit::sort_windows(&mut windows);
    let units = (1..=10)
        .map(|k| DataUnit {
            unit_id: format!("img-{k}"),
            capture_slot: k,
            size_bytes: UNIT,
        })
        .collect();
    let mut trace = CaptureTrace::default();
    trace.satellites.insert(
        "lp-1".into(),
        SatelliteTrace {
            initial_queue: InitialQueue {
                count: 5,
                size_bytes: UNIT,
            },
            units,
        },
    );
    ConstellationScenario {
        time: TimeGrid::new(epoch, 60, 11).expect("valid grid"),
        satellites,
        stations,
        trace,
        target: TargetSpec {
            satellite_id: "lp-1".into(),
            target_unit_ids: vec!["init-3".into()],
            attack_start_slot: 0,
            target_downlink_slot: Some(5),
            cost_budget: None,
        },
        costs: CostModel::default(),
        seed: 0,
        windows: Some(windows),
    }
}

/// Delay example: capacity ten units, never reached without attacks.
pub fn s0_scenario() -> ConstellationScenario {
    small_example(10)
}

/// Overflow example: identical except for a capacity of eight units.
pub fn s0_overflow_scenario() -> ConstellationScenario {
    let mut s = small_example(8);
    s.target.target_downlink_slot = None;
    s
}

/// Knobs of the desk-scale two-constellation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeskParams {
    pub horizon_slots: u32,
    pub n_low: usize,
    pub n_high: usize,
    pub image_bytes: u64,
    pub downlink_rate_bps: u64,
    pub capacity_bytes: u64,
    pub capture_every_slots: usize,
    pub initial_queue_units: u32,
    pub antennas_per_station: u32,
    /// Largest along-track offset of a high-priority satellite from the
    /// low-priority satellite sharing its plane.
    pub high_offset_deg: f64,
    pub seed: u64,
}

impl Default for DeskParams {
    fn default() -> Self {
        DeskParams {
            horizon_slots: 1440,
            n_low: 4,
            n_high: 20,
            image_bytes: DEFAULT_IMAGE_BYTES,
            downlink_rate_bps: DEFAULT_DOWNLINK_RATE_BPS,
            capacity_bytes: 30_000_000_000,
            capture_every_slots: 3,
            initial_queue_units: 100,
            antennas_per_station: 1,
            high_offset_deg: 20.0,
            seed: 7,
        }
    }
}

pub const DESK_STATIONS: [(&str, f64, f64); 3] = [
    ("svalbard", 78.23, 15.39),
    ("fairbanks", 64.86, -147.85),
    ("troll", -72.01, 2.53),
];

/// Desk scenario: low-priority satellites in two sun-synchronous planes,
/// high-priority satellites trailing or leading them in the same planes,
/// three polar stations. The high-priority list is nested: the first `k`
/// satellites are the same for every `n_high >= k`.
pub fn desk_scenario(params: &DeskParams) -> ConstellationScenario {
    let epoch = Utc.with_ymd_and_hms(2024, 3, 20, 0, 0, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let planes = [0.0, 90.0];
    let mut satellites = Vec::new();
    let mut low = Vec::new();
    for k in 0..params.n_low {
        let raan = planes[k % planes.len()];
        let anomaly = (k / planes.len()) as f64 * 180.0 + 30.0 * (k % planes.len()) as f64;
        let orbit = sun_synchronous(raan, anomaly, epoch);
        low.push((raan, anomaly));
        satellites.push(SatelliteSpec {
            id: format!("lp-{}", k + 1),
            priority: Priority::Low,
            orbit,
            capacity_bytes: params.capacity_bytes,
            downlink_rate_bps: params.downlink_rate_bps,
        });
    }
    // draw all offsets up front so a smaller fleet is a prefix of a larger one
    let offsets: Vec<f64> = (0..20.max(params.n_high))
        .map(|_| rng.random_range(-params.high_offset_deg..=params.high_offset_deg))
        .collect();
    for k in 0..params.n_high {
        let (raan, anomaly) = low[k % low.len().max(1)];
        satellites.push(SatelliteSpec {
            id: format!("hp-{}", k + 1),
            priority: Priority::High,
            orbit: sun_synchronous(raan, anomaly + offsets[k], epoch),
            capacity_bytes: 0,
            downlink_rate_bps: DEFAULT_DOWNLINK_RATE_BPS,
        });
    }
    let stations = DESK_STATIONS
        .iter()
        .map(|&(id, lat, lon)| GroundStationSpec {
            id: id.into(),
            latitude_deg: lat,
            longitude_deg: lon,
            altitude_m: 0.0,
            antenna_count: params.antennas_per_station,
            min_elevation_deg: DEFAULT_MIN_ELEVATION_DEG,
        })
        .collect();

    let mut trace = CaptureTrace::default();
    for (k, sat) in satellites.iter().filter(|s| s.priority == Priority::Low).enumerate() {
        let phase = k % params.capture_every_slots.max(1);
        let units = (phase..params.horizon_slots as usize)
            .step_by(params.capture_every_slots.max(1))
            .enumerate()
            .map(|(i, slot)| DataUnit {
                unit_id: format!("img-{}", i + 1),
                capture_slot: slot,
                size_bytes: params.image_bytes,
            })
            .collect();
        trace.satellites.insert(
            sat.id.clone(),
            SatelliteTrace {
                initial_queue: InitialQueue {
                    count: params.initial_queue_units,
                    size_bytes: params.image_bytes,
                },
                units,
            },
        );
    }
    ConstellationScenario {
        time: TimeGrid::new(epoch, 60, params.horizon_slots).expect("valid grid"),
        satellites,
        stations,
        trace,
        target: TargetSpec {
            satellite_id: "lp-1".into(),
            target_unit_ids: vec!["img-1".into()],
            attack_start_slot: 0,
            target_downlink_slot: None,
            cost_budget: None,
        },
        costs: CostModel::default(),
        seed: params.seed,
        windows: None,
    }
}

/// Shape of random queue instances.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSurfaceParams {
    pub max_slots: usize,
    pub max_units: usize,
    pub max_attackable: usize,
    pub max_cost: u64,
}

impl Default for RandomSurfaceParams {
    fn default() -> Self {
        RandomSurfaceParams {
            max_slots: 50,
            max_units: 30,
            max_attackable: usize::MAX,
            max_cost: 5,
        }
    }
}

/// Random queue and attack surface: units of 1..=4 size steps, a per-slot
/// volume of 2..=6 steps, capacity between one and several slots' worth.
pub fn random_surface<R: Rng>(rng: &mut R, params: &RandomSurfaceParams) -> AttackSurface {
    let n_slots = rng.random_range(4..=params.max_slots.max(4));
    let last_slot = n_slots - 1;
    let t0 = rng.random_range(0..=last_slot.min(3));
    let step = rng.random_range(1..=3u64);
    let per_slot = step * rng.random_range(2..=6u64);
    let n_units = rng.random_range(1..=params.max_units.max(1));
    let n_initial = rng.random_range(0..=n_units);
    let mut sizes: Vec<u64> = (0..n_units).map(|_| step * rng.random_range(1..=4u64)).collect();
    if rng.random_bool(0.3) {
        sizes.iter_mut().for_each(|s| *s = per_slot / 2);
    }
    let total: u64 = sizes.iter().sum();
    let capacity = rng.random_range(per_slot..=(total + per_slot).max(per_slot + 1));

    let initial = (0..n_initial)
        .map(|i| DataUnit {
            unit_id: format!("u-{}", i + 1),
            capture_slot: t0,
            size_bytes: sizes[i],
        })
        .collect();
    let mut slots: Vec<Slot> = (0..n_units - n_initial)
        .map(|_| rng.random_range(t0..=last_slot))
        .collect();
    slots.sort_unstable();
    let arrivals = slots
        .iter()
        .enumerate()
        .map(|(k, &slot)| DataUnit {
            unit_id: format!("u-{}", n_initial + k + 1),
            capture_slot: slot,
            size_bytes: sizes[n_initial + k],
        })
        .collect();
    let p_tx = rng.random_range(0.2..0.9);
    let transmissible: Vec<bool> = (0..=last_slot).map(|_| rng.random_bool(p_tx)).collect();
    let model = QueueModel::new(
        t0,
        last_slot,
        capacity,
        per_slot,
        initial,
        arrivals,
        transmissible.clone(),
    )
    .expect("generated model is valid");

    let p_attack = rng.random_range(0.2..1.0);
    let mut candidates: Vec<Slot> = (t0 + 1..=last_slot).filter(|&t| transmissible[t]).collect();
    candidates.shuffle(rng);
    let mut attackable = vec![false; last_slot + 1];
    let mut cost = vec![None; last_slot + 1];
    let mut count = 0;
    for t in candidates {
        if count < params.max_attackable && rng.random_bool(p_attack) {
            attackable[t] = true;
            cost[t] = Some(rng.random_range(1..=params.max_cost.max(1)));
            count += 1;
        }
    }
    AttackSurface::new(model, attackable, cost).expect("generated surface is valid")
}
