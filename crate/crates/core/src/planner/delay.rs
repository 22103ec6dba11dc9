//! Minimum-cost delay attack.
//!
//! Targets are processed in capture order. For each one, slots are added
//! greedily by cost (earliest slot on ties) from the window between the last
//! full-queue slot and the unit's current evacuation slot: attacks at or
//! before the last full slot are absorbed by the overflow and never delay
//! the unit, and attacks after evacuation come too late.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AttackFail, AttackStrategy, AttackSurface, PlanError};
use crate::queue::{simulate, Evacuation};
use crate::scenario::Slot;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayPlanRequest {
    /// Target units in capture order.
    pub targets: Vec<String>,
    /// The last target must still be onboard after this slot.
    pub target_downlink_slot: Slot,
}

pub fn plan_delay(surface: &AttackSurface, request: &DelayPlanRequest) -> Result<AttackStrategy, PlanError> {
    let model = &surface.model;
    let last_slot = model.last_slot();
    let targets = surface.resolve_targets(&request.targets)?;
    let target_slot = request.target_downlink_slot;
    if target_slot > last_slot {
        return Err(PlanError::InvalidRequest(format!(
            "target downlink slot {target_slot} beyond horizon {last_slot}"
        )));
    }

    let baseline = simulate(model, &BTreeSet::new());
    let last = *targets.last().expect("non-empty targets");
    let last_baseline = match baseline.fate(model, last).slot_value(last_slot) {
        Some(t) if t < target_slot as i64 => t,
        _ => {
            return Err(PlanError::InvalidRequest(format!(
                "target downlink slot {target_slot} must come after the unattacked evacuation of `{}` ({})",
                request.targets.last().unwrap(),
                baseline.fate(model, last)
            )))
        }
    };
    let required_delay = target_slot as i64 - last_baseline;

    let mut slots = BTreeSet::new();
    let mut motivating = BTreeMap::new();
    let done = |slots: BTreeSet<Slot>, motivating| Ok(AttackStrategy::finish(surface, &targets, slots, motivating));

    for &unit in &targets {
        let unit_id = &model.units()[unit].unit_id;
        let Some(unit_baseline) = baseline.fate(model, unit).slot_value(last_slot) else {
            return done(slots, motivating);
        };
        let mut ev = simulate(model, &slots);
        let mut fate = ev.fate(model, unit);
        if fate.is_dropped() {
            return done(slots, motivating);
        }
        let mut last_full = ev.last_full_before(fate.bound(last_slot));

        loop {
            let evac = fate.slot_value(last_slot).expect("not dropped");
            if evac - unit_baseline > required_delay {
                break;
            }
            let upper = (evac.max(0) as Slot).min(last_slot);
            let choice = (last_full + 1..=upper)
                .filter(|&t| surface.is_attackable(t) && !slots.contains(&t))
                .min_by_key(|&t| (surface.cost_of(t).expect("attackable slots have a cost"), t));
            let Some(t) = choice else {
                return Err(AttackFail {
                    unit_id: unit_id.clone(),
                    reason: format!("no attackable slot in ({last_full}, {evac}]"),
                    partial: slots,
                }
                .into());
            };
            slots.insert(t);
            motivating.insert(t, unit_id.clone());
            ev = simulate(model, &slots);
            fate = ev.fate(model, unit);
            if fate.is_dropped() {
                return done(slots, motivating);
            }
            last_full = ev.last_full_before(fate.bound(last_slot));
        }
    }
    done(slots, motivating)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayVerification {
    pub success: bool,
    pub unit_id: String,
    pub evacuation: Evacuation,
    pub target_downlink_slot: Slot,
}

/// Independent check: the last target is still undelivered after
/// `target_downlink_slot` under `slots`.
pub fn verify_delay(
    surface: &AttackSurface,
    slots: &BTreeSet<Slot>,
    targets: &[String],
    target_downlink_slot: Slot,
) -> Result<DelayVerification, PlanError> {
    let ids = surface.resolve_targets(targets)?;
    let last = *ids.last().expect("non-empty targets");
    let evacuation = simulate(&surface.model, slots).fate(&surface.model, last);
    Ok(DelayVerification {
        success: evacuation.later_than(target_downlink_slot),
        unit_id: targets.last().unwrap().clone(),
        evacuation,
        target_downlink_slot,
    })
}
