use crate::orbit::{scenario_windows, ContactWindow};
use crate::planner::AttackSurface;
use crate::queue::QueueModel;
use crate::scenario::ConstellationScenario;
use crate::scheduler::{attackability, schedule_all, AttackabilityRecord, SlotSchedule};

/// Everything derived from a scenario up to the attacker's view of the
/// target queue.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub windows: Vec<ContactWindow>,
    pub schedules: Vec<SlotSchedule>,
    pub records: Vec<AttackabilityRecord>,
    pub surface: AttackSurface,
}

/// Windows (inline or propagated), schedules, attackability and the target
/// queue model.
pub fn analyze(scenario: &ConstellationScenario) -> crate::Result<Analysis> {
    let windows = scenario_windows(scenario)?;
    analyze_with_windows(scenario, windows)
}

pub fn analyze_with_windows(scenario: &ConstellationScenario, windows: Vec<ContactWindow>) -> crate::Result<Analysis> {
    let schedules = schedule_all(scenario, &windows);
    let records = attackability(scenario, &windows, &schedules, &scenario.target.satellite_id);
    let model = QueueModel::from_scenario(scenario, &records)?;
    let surface = AttackSurface::from_records(model, &records)?;
    Ok(Analysis {
        windows,
        schedules,
        records,
        surface,
    })
}
