//! Attack planning against the target satellite's queue.

mod delay;
mod overflow;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::queue::{simulate, Evacuation, QueueError, QueueModel};
use crate::scenario::Slot;
use crate::scheduler::AttackabilityRecord;

pub use delay::{plan_delay, verify_delay, DelayPlanRequest, DelayVerification};
pub use overflow::{plan_overflow, verify_overflow, OverflowPlanRequest, OverflowVerification};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    AttackFail(#[from] AttackFail),
    #[error("invalid plan request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Queue(#[from] QueueError),
}

/// No remaining attackable slot can achieve the goal for `unit_id`.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("attack failed on `{unit_id}`: {reason}")]
pub struct AttackFail {
    pub unit_id: String,
    pub reason: String,
    /// Slots chosen before the failure.
    pub partial: BTreeSet<Slot>,
}

/// The attacker's view of the target: queue model, attackable slots and the
/// price of attacking each.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSurface {
    pub model: QueueModel,
    attackable: Vec<bool>,
    cost: Vec<Option<u64>>,
}

impl AttackSurface {
    /// `attackable` and `cost` are indexed by slot over the whole horizon.
    /// Attackable slots must be transmissible and carry a cost.
    pub fn new(model: QueueModel, attackable: Vec<bool>, cost: Vec<Option<u64>>) -> Result<Self, PlanError> {
        let n = model.last_slot() + 1;
        if attackable.len() != n || cost.len() != n {
            return Err(PlanError::InvalidRequest(format!(
                "attackable/cost vectors must cover {n} slots"
            )));
        }
        for t in 0..n {
            if attackable[t] && !model.is_transmissible(t) {
                return Err(PlanError::InvalidRequest(format!(
                    "slot {t} attackable but not transmissible"
                )));
            }
            if attackable[t] != cost[t].is_some() {
                return Err(PlanError::InvalidRequest(format!(
                    "slot {t}: cost present iff attackable"
                )));
            }
        }
        Ok(AttackSurface {
            model,
            attackable,
            cost,
        })
    }

    pub fn from_records(model: QueueModel, records: &[AttackabilityRecord]) -> Result<Self, PlanError> {
        let n = model.last_slot() + 1;
        let mut attackable = vec![false; n];
        let mut cost = vec![None; n];
        for r in records.iter().filter(|r| r.slot < n) {
            attackable[r.slot] = r.attackable;
            cost[r.slot] = r.cost;
        }
        AttackSurface::new(model, attackable, cost)
    }

    /// Attackable slots the attacker can still act on: strictly after `t0`.
    pub fn attackable_slots(&self) -> Vec<Slot> {
        (self.model.t0() + 1..=self.model.last_slot())
            .filter(|&t| self.attackable[t])
            .collect()
    }

    pub fn is_attackable(&self, t: Slot) -> bool {
        t > self.model.t0() && self.attackable.get(t).copied().unwrap_or(false)
    }

    pub fn cost_of(&self, t: Slot) -> Option<u64> {
        self.cost.get(t).copied().flatten()
    }

    /// Total cost of a strategy, `None` if any slot is not attackable.
    pub fn strategy_cost(&self, slots: &BTreeSet<Slot>) -> Option<u64> {
        slots
            .iter()
            .map(|&t| if self.is_attackable(t) { self.cost_of(t) } else { None })
            .sum()
    }

    pub(crate) fn resolve_targets(&self, ids: &[String]) -> Result<Vec<usize>, PlanError> {
        if ids.is_empty() {
            return Err(PlanError::InvalidRequest("empty target set".into()));
        }
        let mut out = Vec::with_capacity(ids.len());
        for id in ids {
            let i = self.model.unit_index(id)?;
            if out.last().is_some_and(|&p| i <= p) {
                return Err(PlanError::InvalidRequest("targets must be in capture order".into()));
            }
            out.push(i);
        }
        Ok(out)
    }

    pub fn with_model(&self, model: QueueModel) -> Result<Self, PlanError> {
        AttackSurface::new(model, self.attackable.clone(), self.cost.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitResult {
    pub unit_id: String,
    pub evacuation: Evacuation,
}

impl UnitResult {
    pub fn dropped(&self) -> bool {
        self.evacuation.is_dropped()
    }

    pub fn drop_slot(&self) -> Option<Slot> {
        match self.evacuation {
            Evacuation::Dropped(t) => Some(t),
            _ => None,
        }
    }
}

/// Attacked slots with their total cost and the target unit that motivated
/// each one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackStrategy {
    pub slots: BTreeSet<Slot>,
    pub total_cost: u64,
    pub motivating_unit: BTreeMap<Slot, String>,
    /// Final fate of each target unit under the strategy.
    pub outcomes: Vec<UnitResult>,
}

impl AttackStrategy {
    pub(crate) fn finish(
        surface: &AttackSurface,
        targets: &[usize],
        slots: BTreeSet<Slot>,
        motivating_unit: BTreeMap<Slot, String>,
    ) -> Self {
        let ev = simulate(&surface.model, &slots);
        let outcomes = targets
            .iter()
            .map(|&i| UnitResult {
                unit_id: surface.model.units()[i].unit_id.clone(),
                evacuation: ev.fate(&surface.model, i),
            })
            .collect();
        let total_cost = surface
            .strategy_cost(&slots)
            .expect("planners only pick attackable slots");
        AttackStrategy {
            slots,
            total_cost,
            motivating_unit,
            outcomes,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

pub const STRATEGY_CSV_HEADER: &str = "slot,cost,motivating_unit";

/// `slot,cost,motivating_unit` rows in slot order.
pub fn strategy_to_csv(strategy: &AttackStrategy, surface: &AttackSurface) -> String {
    let mut out = String::from(STRATEGY_CSV_HEADER);
    out.push('\n');
    for &t in &strategy.slots {
        out.push_str(&format!(
            "{t},{},{}\n",
            surface.cost_of(t).unwrap_or(0),
            strategy.motivating_unit.get(&t).map(String::as_str).unwrap_or("")
        ));
    }
    out
}

/// Reads the slot column of a strategy CSV.
pub fn parse_strategy_csv(text: &str) -> Result<BTreeSet<Slot>, PlanError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| PlanError::InvalidRequest(format!("strategy csv: {e}")))?;
    if headers.get(0) != Some("slot") {
        return Err(PlanError::InvalidRequest(format!(
            "strategy csv header must start with `slot` (`{STRATEGY_CSV_HEADER}`)"
        )));
    }
    let mut slots = BTreeSet::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| PlanError::InvalidRequest(format!("strategy csv row {}: {e}", i + 2)))?;
        let slot = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| PlanError::InvalidRequest(format!("strategy csv row {}: bad slot", i + 2)))?;
        slots.insert(slot);
    }
    Ok(slots)
}

/// Checks `Y ⊆ A` for a strategy supplied from outside.
pub fn check_attackable(surface: &AttackSurface, slots: &BTreeSet<Slot>) -> Result<(), PlanError> {
    match slots.iter().find(|&&t| !surface.is_attackable(t)) {
        Some(t) => Err(PlanError::InvalidRequest(format!("slot {t} is not attackable"))),
        None => Ok(()),
    }
}
