//! Monte-Carlo evaluation.
//!
//! A trial draws a target on the nominal scenario, plans there, then runs
//! the plan against a perturbed copy standing in for the true world. A sweep
//! repeats trials over one varied parameter, across several replicate seeds.

mod noise;
mod report;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::orbit::{scenario_windows, ContactWindow};
use crate::planner::{plan_delay, plan_overflow, AttackSurface, DelayPlanRequest, OverflowPlanRequest, PlanError};
use crate::queue::{simulate, Evacuation, QueueModel};
use crate::scenario::{ConstellationScenario, Priority, Slot};
use crate::scheduler::{attackability, schedule_all, AttackabilityRecord};

pub use noise::{perturb, sample_truncated, NoiseModel};
pub use report::{
    aggregate_to_csv, box_stats, report_to_csv, target_trials_to_csv, BoxStats, EvalReport, PointError, PointSummary,
    TrialRow, AGGREGATE_CSV_HEADER, REPORT_CSV_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Delay,
    Overflow,
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackKind::Delay => "delay",
            AttackKind::Overflow => "overflow",
        })
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delay" => Ok(AttackKind::Delay),
            "overflow" => Ok(AttackKind::Overflow),
            _ => Err(format!("unknown attack kind `{s}` (expected delay or overflow)")),
        }
    }
}

/// Parameter varied by a sweep. Value units: image size in MB, data rate in
/// Mbit/s, target duration in hours; the rest are plain counts or ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    ImageSize,
    DataRate,
    NHigh,
    Budget,
    TargetDuration,
    NoiseRatio,
    ExtraM,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 7] = [
        SweepAxis::ImageSize,
        SweepAxis::DataRate,
        SweepAxis::NHigh,
        SweepAxis::Budget,
        SweepAxis::TargetDuration,
        SweepAxis::NoiseRatio,
        SweepAxis::ExtraM,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::ImageSize => "image_size",
            SweepAxis::DataRate => "data_rate",
            SweepAxis::NHigh => "n_high",
            SweepAxis::Budget => "budget",
            SweepAxis::TargetDuration => "target_duration",
            SweepAxis::NoiseRatio => "noise_ratio",
            SweepAxis::ExtraM => "extra_m",
        }
    }

    fn check(&self, value: f64) -> Result<(), String> {
        let integral = value.fract() == 0.0;
        let ok = match self {
            SweepAxis::ImageSize | SweepAxis::DataRate | SweepAxis::TargetDuration => value > 0.0,
            SweepAxis::NoiseRatio => (0.0..=1.0).contains(&value),
            SweepAxis::NHigh | SweepAxis::Budget | SweepAxis::ExtraM => value >= 0.0 && integral,
        };
        if ok && value.is_finite() {
            Ok(())
        } else {
            Err(format!("{} value {value} out of range", self.name()))
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| format!("unknown sweep axis `{s}`"))
    }
}

/// Per-trial knobs that do not change the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSettings {
    pub kind: AttackKind,
    pub noise: NoiseModel,
    pub cost_budget: Option<u64>,
    pub extra_m: usize,
    /// Delay goal: slots past the target's unattacked downlink.
    pub duration_slots: usize,
    pub targets_per_trial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: usize,
    /// Independent master seeds per point; box statistics run over them.
    pub replicates: usize,
    pub kind: AttackKind,
    pub cost_budget: Option<u64>,
    pub extra_m: usize,
    pub noise: NoiseModel,
    pub target_duration_hours: f64,
    pub targets_per_trial: usize,
    pub master_seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            axis: SweepAxis::NHigh,
            values: vec![],
            trials: 200,
            replicates: 10,
            kind: AttackKind::Delay,
            cost_budget: None,
            extra_m: 0,
            noise: NoiseModel::default(),
            target_duration_hours: 1.0,
            targets_per_trial: 4,
            master_seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.trials == 0 || self.replicates == 0 {
            return Err("trials and replicates must be at least 1".into());
        }
        if self.targets_per_trial == 0 {
            return Err("targets_per_trial must be at least 1".into());
        }
        if self.target_duration_hours.is_nan() || self.target_duration_hours <= 0.0 {
            return Err("target duration must be positive".into());
        }
        self.noise.validate()?;
        self.values.iter().try_for_each(|&v| self.axis.check(v))
    }

    fn base_settings(&self, slot_seconds: u32) -> TrialSettings {
        TrialSettings {
            kind: self.kind,
            noise: self.noise,
            cost_budget: self.cost_budget,
            extra_m: self.extra_m,
            duration_slots: hours_to_slots(self.target_duration_hours, slot_seconds),
            targets_per_trial: self.targets_per_trial,
        }
    }
}

fn hours_to_slots(hours: f64, slot_seconds: u32) -> usize {
    ((hours * 3600.0) / slot_seconds as f64).round().max(1.0) as usize
}

/// Outcome of one trial. Failures of the planner are data, not errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub satellite_id: String,
    pub targets: Vec<String>,
    pub success: bool,
    /// The goal already holds in the true world without any attack.
    pub natural: bool,
    /// Cost of the planned strategy; `None` when planning failed.
    pub cost: Option<u64>,
    pub planned_slots: Vec<Slot>,
    /// Fate of the reference target (last for delay, first for overflow)
    /// under the plan, in the nominal and the true world.
    pub planned_outcome: Option<Evacuation>,
    pub true_outcome: Option<Evacuation>,
    pub failure: Option<String>,
}

/// Units `M` places before and after `targets` in FIFO order, clipped at
/// both ends of `fifo`. Unknown ids leave the set unchanged.
pub fn extend_targets(targets: &[String], fifo: &[String], m: usize) -> Vec<String> {
    let (Some(first), Some(last)) = (targets.first(), targets.last()) else {
        return targets.to_vec();
    };
    let (Some(i), Some(j)) = (
        fifo.iter().position(|u| u == first),
        fifo.iter().position(|u| u == last),
    ) else {
        return targets.to_vec();
    };
    if m == 0 {
        return targets.to_vec();
    }
    fifo[i.saturating_sub(m)..=(j + m).min(fifo.len() - 1)].to_vec()
}

fn fate_of(model: &QueueModel, slots: &BTreeSet<Slot>, id: &str) -> Option<Evacuation> {
    let i = model.unit_index(id).ok()?;
    Some(simulate(model, slots).fate(model, i))
}

fn goal_met(
    kind: AttackKind,
    model: &QueueModel,
    slots: &BTreeSet<Slot>,
    targets: &[String],
    t_star: Option<Slot>,
) -> bool {
    let ev = simulate(model, slots);
    let fates: Option<Vec<Evacuation>> = targets
        .iter()
        .map(|id| model.unit_index(id).ok().map(|i| ev.fate(model, i)))
        .collect();
    let Some(fates) = fates else { return false };
    match kind {
        AttackKind::Delay => match (fates.last(), t_star) {
            (Some(f), Some(t)) => f.later_than(t),
            _ => false,
        },
        AttackKind::Overflow => !fates.is_empty() && fates.iter().all(Evacuation::is_dropped),
    }
}

/// Delay goal for the extended set: the unit `M` places ahead of the
/// reference target must also stay onboard past `t_star`, which the delay
/// planner sees as a later deadline for the extended set's last unit.
fn extended_deadline(model: &QueueModel, extended: &[String], reference: &str, m: usize, t_star: Slot) -> Slot {
    if m == 0 {
        return t_star;
    }
    let base = simulate(model, &BTreeSet::new());
    let last = model.last_slot();
    let value = |id: &str| {
        model
            .unit_index(id)
            .ok()
            .and_then(|i| base.fate(model, i).slot_value(last))
    };
    let Some(r) = extended.iter().position(|u| u == reference) else {
        return t_star;
    };
    let lead = &extended[r.saturating_sub(m)];
    match (value(extended.last().unwrap()), value(lead)) {
        (Some(tail), Some(head)) if tail >= head => (t_star + (tail - head) as usize).min(last),
        _ => t_star,
    }
}

/// One trial on a scenario whose target spec names the satellite, the
/// target units, the attack start and (for delay) the deadline.
pub fn run_trial<R: Rng + ?Sized>(
    nominal: &ConstellationScenario,
    records: &[AttackabilityRecord],
    settings: &TrialSettings,
    rng: &mut R,
) -> TrialRecord {
    let targets = nominal.target.target_unit_ids.clone();
    let mut record = TrialRecord {
        satellite_id: nominal.target.satellite_id.clone(),
        targets: targets.clone(),
        success: false,
        natural: false,
        cost: None,
        planned_slots: vec![],
        planned_outcome: None,
        true_outcome: None,
        failure: None,
    };
    let t_star = nominal.target.target_downlink_slot;
    let reference = match settings.kind {
        AttackKind::Delay => targets.last(),
        AttackKind::Overflow => targets.first(),
    }
    .cloned()
    .unwrap_or_default();

    let surface = match QueueModel::from_scenario(nominal, records)
        .map_err(PlanError::from)
        .and_then(|m| AttackSurface::from_records(m, records))
    {
        Ok(s) => s,
        Err(e) => {
            record.failure = Some(e.to_string());
            return record;
        }
    };
    let model = &surface.model;
    let fifo: Vec<String> = model.units().iter().map(|u| u.unit_id.clone()).collect();
    let extended = extend_targets(&targets, &fifo, settings.extra_m);

    let plan = match settings.kind {
        AttackKind::Delay => match t_star {
            None => Err("delay trial without a target downlink slot".to_string()),
            Some(t) => {
                let deadline = extended_deadline(model, &extended, &reference, settings.extra_m, t);
                if goal_met(AttackKind::Delay, model, &BTreeSet::new(), &extended, Some(deadline)) {
                    Ok(BTreeSet::new())
                } else {
                    let request = DelayPlanRequest {
                        targets: extended.clone(),
                        target_downlink_slot: deadline,
                    };
                    plan_delay(&surface, &request)
                        .map(|s| s.slots)
                        .map_err(|e| e.to_string())
                }
            }
        },
        AttackKind::Overflow => {
            if goal_met(AttackKind::Overflow, model, &BTreeSet::new(), &extended, None) {
                Ok(BTreeSet::new())
            } else {
                plan_overflow(
                    &surface,
                    &OverflowPlanRequest {
                        targets: extended.clone(),
                    },
                )
                .map(|s| s.slots)
                .map_err(|e| e.to_string())
            }
        }
    };
    let slots = match plan {
        Ok(s) => s,
        Err(e) => {
            record.failure = Some(e);
            return record;
        }
    };
    let cost = surface.strategy_cost(&slots).expect("planned slots are attackable");
    record.cost = Some(cost);
    record.planned_slots = slots.iter().copied().collect();
    record.planned_outcome = fate_of(model, &slots, &reference);
    if settings.cost_budget.is_some_and(|b| cost > b) {
        record.failure = Some(format!("cost {cost} exceeds budget"));
        return record;
    }

    let truth = perturb(nominal, &settings.noise, rng);
    let true_model = match QueueModel::from_scenario(&truth, records) {
        Ok(m) => m,
        Err(e) => {
            record.failure = Some(e.to_string());
            return record;
        }
    };
    record.true_outcome = fate_of(&true_model, &slots, &reference);
    record.natural = goal_met(settings.kind, &true_model, &BTreeSet::new(), &targets, t_star);
    record.success = goal_met(settings.kind, &true_model, &slots, &targets, t_star);
    if targets.iter().any(|id| true_model.unit_index(id).is_err()) {
        // jitter can remove queued units the attacker expected
        record.failure = Some("target absent from the true world".into());
    } else if !record.success {
        record.failure = Some("goal missed in the true world".into());
    }
    record
}

/// A scenario with its schedules resolved: attackability of every
/// low-priority satellite that carries a capture trace.
#[derive(Debug, Clone)]
pub struct PreparedWorld {
    pub scenario: ConstellationScenario,
    pub targets: Vec<(String, Vec<AttackabilityRecord>)>,
}

impl PreparedWorld {
    pub fn new(scenario: ConstellationScenario, windows: &[ContactWindow]) -> Self {
        let schedules = schedule_all(&scenario, windows);
        let targets = scenario
            .low_priority()
            .filter(|s| scenario.trace.get(&s.id).is_some())
            .map(|s| (s.id.clone(), attackability(&scenario, windows, &schedules, &s.id)))
            .collect();
        PreparedWorld { scenario, targets }
    }

    /// Random target: a low-priority satellite, an attack start in the
    /// first half of the horizon, `targets_per_trial` consecutive captures
    /// shortly after it, and for delay a deadline `duration_slots` past the
    /// last target's unattacked downlink.
    pub fn draw_target<R: Rng + ?Sized>(
        &self,
        settings: &TrialSettings,
        rng: &mut R,
    ) -> Option<(ConstellationScenario, usize)> {
        if self.targets.is_empty() {
            return None;
        }
        let k = rng.random_range(0..self.targets.len());
        let (sat_id, records) = &self.targets[k];
        let last = self.scenario.time.last_slot();
        let t0 = rng.random_range(0..=last / 2);
        let offset = rng.random_range(0..5usize);
        let trace = self.scenario.trace.get(sat_id)?;
        let arrivals: Vec<&str> = trace.arrivals_from(t0).map(|u| u.unit_id.as_str()).collect();
        let start = offset.min(arrivals.len().saturating_sub(settings.targets_per_trial));
        let chosen: Vec<String> = arrivals
            .get(start..start + settings.targets_per_trial)?
            .iter()
            .map(|s| s.to_string())
            .collect();

        let mut scenario = self.scenario.clone();
        scenario.target.satellite_id = sat_id.clone();
        scenario.target.attack_start_slot = t0;
        scenario.target.target_unit_ids = chosen;
        scenario.target.target_downlink_slot = None;
        if settings.kind == AttackKind::Delay {
            let model = QueueModel::from_scenario(&scenario, records).ok()?;
            let fate = fate_of(&model, &BTreeSet::new(), scenario.target.target_unit_ids.last()?)?;
            let base = fate.slot_value(last).unwrap_or(last as i64 + 1) as usize;
            scenario.target.target_downlink_slot = Some(base + settings.duration_slots);
        }
        Some((scenario, k))
    }

    /// Draws a target and runs one trial. Target draw and world noise use
    /// separate streams so that the same seed picks the same target at
    /// every noise level.
    pub fn trial(&self, settings: &TrialSettings, seed: u64) -> TrialRecord {
        let mut pick = ChaCha8Rng::seed_from_u64(seed);
        let mut world = ChaCha8Rng::seed_from_u64(seed);
        world.set_stream(1);
        match self.draw_target(settings, &mut pick) {
            Some((scenario, k)) => run_trial(&scenario, &self.targets[k].1, settings, &mut world),
            None => TrialRecord {
                satellite_id: String::new(),
                targets: vec![],
                success: false,
                natural: false,
                cost: None,
                planned_slots: vec![],
                planned_outcome: None,
                true_outcome: None,
                failure: Some("no target available".into()),
            },
        }
    }
}

/// Repeats [`run_trial`] on the scenario's own target with fresh noise per
/// trial.
pub fn evaluate_target(
    nominal: &ConstellationScenario,
    records: &[AttackabilityRecord],
    settings: &TrialSettings,
    trials: usize,
    master_seed: u64,
) -> Vec<TrialRecord> {
    (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(master_seed ^ mix(k as u64)));
            run_trial(nominal, records, settings, &mut rng)
        })
        .collect()
}

pub const TARGET_TRIALS_CSV_HEADER: [&str; 6] =
    ["trial", "success", "natural", "cost", "planned_slots", "true_outcome"];

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial. It does not depend on the axis value, so every point
/// of a sweep sees the same targets and noise draws.
pub fn trial_seed(master: u64, axis: SweepAxis, replicate: usize, trial: usize) -> u64 {
    let axis_tag = SweepAxis::ALL.iter().position(|a| *a == axis).unwrap_or(0) as u64;
    mix(mix(mix(master ^ axis_tag.wrapping_mul(0xA24B_AED4_963E_E407)) ^ replicate as u64) ^ trial as u64)
}

/// The base scenario and trial settings at one axis value.
pub fn apply_axis(
    base: &ConstellationScenario,
    windows: &[ContactWindow],
    settings: &TrialSettings,
    axis: SweepAxis,
    value: f64,
) -> Result<(ConstellationScenario, Vec<ContactWindow>, TrialSettings), String> {
    axis.check(value)?;
    let mut scenario = base.clone();
    let mut windows = windows.to_vec();
    let mut settings = *settings;
    match axis {
        SweepAxis::ImageSize => {
            let bytes = (value * 1e6).round() as u64;
            for trace in scenario.trace.satellites.values_mut() {
                trace.initial_queue.size_bytes = bytes;
                trace.units.iter_mut().for_each(|u| u.size_bytes = bytes);
            }
        }
        SweepAxis::DataRate => {
            let bps = (value * 1e6).round() as u64;
            for sat in scenario.satellites.iter_mut().filter(|s| s.priority == Priority::Low) {
                sat.downlink_rate_bps = bps;
            }
        }
        SweepAxis::NHigh => {
            let n = value as usize;
            let high: Vec<String> = scenario.high_priority().map(|s| s.id.clone()).collect();
            if n > high.len() {
                return Err(format!(
                    "n_high {n} exceeds the {} high-priority satellites available",
                    high.len()
                ));
            }
            let removed: BTreeSet<&str> = high[n..].iter().map(String::as_str).collect();
            scenario.satellites.retain(|s| !removed.contains(s.id.as_str()));
            windows.retain(|w| !removed.contains(w.satellite_id.as_str()));
            if let Some(w) = scenario.windows.as_mut() {
                w.retain(|w| !removed.contains(w.satellite_id.as_str()));
            }
        }
        SweepAxis::Budget => settings.cost_budget = Some(value as u64),
        SweepAxis::TargetDuration => settings.duration_slots = hours_to_slots(value, scenario.time.slot_seconds),
        SweepAxis::NoiseRatio => settings.noise = NoiseModel::with_ratio(value),
        SweepAxis::ExtraM => settings.extra_m = value as usize,
    }
    Ok((scenario, windows, settings))
}

/// Runs `config.trials × config.replicates` trials at every axis value.
/// A value that cannot be applied is reported and skipped.
pub fn sweep(config: &EvalConfig, base: &ConstellationScenario) -> crate::Result<EvalReport> {
    let windows = scenario_windows(base)?;
    sweep_with_windows(config, base, &windows)
}

pub fn sweep_with_windows(
    config: &EvalConfig,
    base: &ConstellationScenario,
    windows: &[ContactWindow],
) -> crate::Result<EvalReport> {
    config.validate().map_err(crate::Error::Config)?;
    let settings = config.base_settings(base.time.slot_seconds);
    let mut report = EvalReport {
        axis: config.axis,
        kind: config.kind,
        trials: vec![],
        points: vec![],
        errors: vec![],
    };
    for &value in &config.values {
        let (scenario, windows, point_settings) = match apply_axis(base, windows, &settings, config.axis, value) {
            Ok(x) => x,
            Err(message) => {
                report.errors.push(PointError { value, message });
                continue;
            }
        };
        let world = PreparedWorld::new(scenario, &windows);
        let jobs: Vec<(usize, usize)> = (0..config.replicates)
            .flat_map(|r| (0..config.trials).map(move |t| (r, t)))
            .collect();
        let rows: Vec<TrialRow> = jobs
            .par_iter()
            .map(|&(r, t)| TrialRow {
                value,
                replicate: r,
                trial: r * config.trials + t,
                record: world.trial(&point_settings, trial_seed(config.master_seed, config.axis, r, t)),
            })
            .collect();
        report
            .points
            .push(PointSummary::from_rows(value, config.replicates, &rows));
        report.trials.extend(rows);
    }
    Ok(report)
}
