use chrono::{TimeZone, Utc};

use crate::orbit::TleElements;
use crate::scenario::{
    CaptureTrace, ConstellationScenario, CostModel, DataUnit, GroundStationSpec, InitialQueue, Priority, SatelliteSpec,
    SatelliteTrace, TargetSpec, TimeGrid,
};

pub fn elements() -> TleElements {
    TleElements {
        inclination_deg: 97.5,
        raan_deg: 0.0,
        eccentricity: 0.0,
        arg_perigee_deg: 0.0,
        mean_anomaly_deg: 0.0,
        mean_motion_rev_per_day: 15.2,
        epoch: Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(),
    }
}

pub fn low_sat(id: &str) -> SatelliteSpec {
    SatelliteSpec {
        id: id.into(),
        priority: Priority::Low,
        orbit: elements(),
        capacity_bytes: 1_000,
        downlink_rate_bps: 16,
    }
}

pub fn high_sat(id: &str) -> SatelliteSpec {
    SatelliteSpec {
        priority: Priority::High,
        capacity_bytes: 0,
        ..low_sat(id)
    }
}

pub fn station(id: &str, antennas: u32) -> GroundStationSpec {
    GroundStationSpec {
        id: id.into(),
        latitude_deg: 60.0,
        longitude_deg: 10.0,
        altitude_m: 0.0,
        antenna_count: antennas,
        min_elevation_deg: 5.0,
    }
}

/// Ten-slot scenario targeting the first satellite, one queued unit.
pub fn tiny_scenario(satellites: Vec<SatelliteSpec>, stations: Vec<GroundStationSpec>) -> ConstellationScenario {
    let target = satellites[0].id.clone();
    let mut trace = CaptureTrace::default();
    trace.satellites.insert(
        target.clone(),
        SatelliteTrace {
            initial_queue: InitialQueue {
                count: 1,
                size_bytes: 60,
            },
            units: vec![DataUnit {
                unit_id: "img-1".into(),
                capture_slot: 1,
                size_bytes: 60,
            }],
        },
    );
    ConstellationScenario {
        time: TimeGrid::new(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap(), 60, 10).unwrap(),
        satellites,
        stations,
        trace,
        target: TargetSpec {
            satellite_id: target,
            target_unit_ids: vec!["init-1".into()],
            attack_start_slot: 0,
            target_downlink_slot: None,
            cost_budget: None,
        },
        costs: CostModel::default(),
        seed: 0,
        windows: None,
    }
}
