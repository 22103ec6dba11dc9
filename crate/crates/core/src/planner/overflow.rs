//! Overflow attack: keep the target onboard until a capacity drop takes it.
//!
//! Per target, attackable slots at or after its evacuation are consumed in
//! ascending order while they can still postpone it; otherwise slots before
//! evacuation are consumed in descending order, as long as they lie after
//! the last full-queue slot.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{AttackFail, AttackStrategy, AttackSurface, PlanError, UnitResult};
use crate::queue::{simulate, strength_between};
use crate::scenario::Slot;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverflowPlanRequest {
    /// Target units in capture order.
    pub targets: Vec<String>,
}

pub fn plan_overflow(surface: &AttackSurface, request: &OverflowPlanRequest) -> Result<AttackStrategy, PlanError> {
    let model = &surface.model;
    let last_slot = model.last_slot();
    let targets = surface.resolve_targets(&request.targets)?;
    let baseline = simulate(model, &BTreeSet::new());
    let attackable = surface.attackable_slots();

    let mut slots = BTreeSet::new();
    let mut motivating = BTreeMap::new();

    for &unit in &targets {
        let unit_id = &model.units()[unit].unit_id;
        let mut ev = simulate(model, &slots);
        let mut fate = ev.fate(model, unit);
        if fate.is_dropped() {
            continue;
        }
        let mut last_full = baseline.last_full(model, unit);
        let start = fate.bound(last_slot);
        let mut after: VecDeque<Slot> = attackable
            .iter()
            .copied()
            .filter(|t| *t >= start && !slots.contains(t))
            .collect();
        let mut before: VecDeque<Slot> = attackable
            .iter()
            .rev()
            .copied()
            .filter(|t| *t < start && !slots.contains(t))
            .collect();
        let mut next_after = after.pop_front();
        let mut next_before = before.pop_front();

        while !fate.is_dropped() {
            let evac = fate.slot_value(last_slot).expect("not dropped");
            let fail = |reason: String, partial: &BTreeSet<Slot>| -> PlanError {
                AttackFail {
                    unit_id: unit_id.clone(),
                    reason,
                    partial: partial.clone(),
                }
                .into()
            };
            if let Some(t) = next_after.filter(|&t| t as i64 <= evac) {
                slots.insert(t);
                motivating.insert(t, unit_id.clone());
                ev = simulate(model, &slots);
                fate = ev.fate(model, unit);
                next_after = after.pop_front();
            } else if let Some(t) = next_before.filter(|&t| t > last_full) {
                let mut trial = slots.clone();
                trial.insert(t);
                let trial_ev = simulate(model, &trial);
                let trial_fate = trial_ev.fate(model, unit);
                if strength_between(fate, trial_fate, last_slot).is_zero() {
                    return Err(fail(
                        format!("attacking slot {t} triggers an overflow that absorbs it"),
                        &slots,
                    ));
                }
                slots = trial;
                motivating.insert(t, unit_id.clone());
                ev = trial_ev;
                fate = trial_fate;
                last_full = ev.last_full_before(fate.bound(last_slot));
                next_before = before.pop_front();
            } else {
                return Err(fail(
                    format!("unit evacuates at {fate} before it can be dropped"),
                    &slots,
                ));
            }
        }
    }
    Ok(AttackStrategy::finish(surface, &targets, slots, motivating))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverflowVerification {
    pub success: bool,
    pub units: Vec<UnitResult>,
}

/// Independent check: every target loses bytes to an overflow drop.
pub fn verify_overflow(
    surface: &AttackSurface,
    slots: &BTreeSet<Slot>,
    targets: &[String],
) -> Result<OverflowVerification, PlanError> {
    let ids = surface.resolve_targets(targets)?;
    let ev = simulate(&surface.model, slots);
    let units: Vec<UnitResult> = ids
        .iter()
        .zip(targets)
        .map(|(&i, id)| UnitResult {
            unit_id: id.clone(),
            evacuation: ev.fate(&surface.model, i),
        })
        .collect();
    Ok(OverflowVerification {
        success: units.iter().all(UnitResult::dropped),
        units,
    })
}
