//! Onboard FIFO queue evolution of the target satellite.
//!
//! Within a slot the order is fixed: arrivals are appended, then up to one
//! slot's worth of bytes is downlinked from the head (unless the slot is not
//! transmissible or is attacked), then anything above capacity is dropped
//! from the head. A nonzero drop smaller than one slot's downlink volume is
//! rounded up to that volume, so an attack costs the target exactly one slot
//! of progress even when it triggers an overflow.
//!
//! Two implementations are provided. [`simulate`] works on aggregate byte
//! counts and cumulative offsets and is what the planners use.
//! [`fifo::simulate_units`] moves individual units through a `VecDeque` and is
//! kept as the reference the aggregate path is checked against.

pub mod fifo;
mod trace;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{ConstellationScenario, DataUnit, SatelliteSpec, Slot};
use crate::scheduler::AttackabilityRecord;

pub use fifo::{OnboardQueueState, SlotOutcome};
pub use trace::{evolve, trace_events_csv, trace_to_csv, QueueTrace, TargetOutcome};

#[derive(Debug, Error)]
pub enum QueueError {
    #[error("invalid queue model: {0}")]
    InvalidModel(String),
    #[error("unknown data unit `{0}`")]
    UnknownUnit(String),
}

/// Bytes a satellite can downlink in one slot, `floor(rate * seconds / 8)`.
pub fn per_slot_capacity_of(sat: &SatelliteSpec, slot_seconds: u32) -> u64 {
    ((sat.downlink_rate_bps as u128 * slot_seconds as u128) / 8) as u64
}

/// Per-slot downlink volume of the scenario's target satellite.
pub fn per_slot_capacity(scenario: &ConstellationScenario) -> u64 {
    per_slot_capacity_of(scenario.target_satellite(), scenario.time.slot_seconds)
}

/// When a unit leaves the queue. Ordered so that `Downlinked(a) <
/// Downlinked(b)` for `a < b`, and every downlink precedes `Pending`
/// (still queued at the horizon) which precedes `Dropped` (never arrives).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Evacuation {
    Downlinked(Slot),
    Pending,
    Dropped(Slot),
}

impl Evacuation {
    pub fn is_dropped(&self) -> bool {
        matches!(self, Evacuation::Dropped(_))
    }

    /// Numeric evacuation slot: `Pending` counts as `last_slot + 1`,
    /// dropped is infinite (`None`).
    pub fn slot_value(&self, last_slot: Slot) -> Option<i64> {
        match *self {
            Evacuation::Downlinked(t) => Some(t as i64),
            Evacuation::Pending => Some(last_slot as i64 + 1),
            Evacuation::Dropped(_) => None,
        }
    }

    /// Exclusive upper bound for searches "before evacuation", clipped to
    /// the horizon.
    pub fn bound(&self, last_slot: Slot) -> Slot {
        match *self {
            Evacuation::Downlinked(t) => t,
            Evacuation::Pending | Evacuation::Dropped(_) => last_slot + 1,
        }
    }

    /// True when the unit is still onboard after slot `t`.
    pub fn later_than(&self, t: Slot) -> bool {
        match *self {
            Evacuation::Downlinked(e) => e > t,
            Evacuation::Pending | Evacuation::Dropped(_) => true,
        }
    }
}

impl std::fmt::Display for Evacuation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Evacuation::Downlinked(t) => write!(f, "{t}"),
            Evacuation::Pending => write!(f, "pending"),
            Evacuation::Dropped(t) => write!(f, "dropped@{t}"),
        }
    }
}

/// Additional delay from attacking one more slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strength {
    Slots(i64),
    /// The added attack makes the unit drop.
    Infinite,
}

impl Strength {
    pub fn is_zero(&self) -> bool {
        *self == Strength::Slots(0)
    }
}

/// Everything the queue evolution of one satellite depends on, viewed from
/// the attack start slot `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueModel {
    t0: Slot,
    last_slot: Slot,
    capacity: u64,
    per_slot_capacity: u64,
    units: Vec<DataUnit>,
    /// Number of leading units already queued at `t0`.
    initial_count: usize,
    transmissible: Vec<bool>,
    /// Cumulative end offset of each unit in FIFO order.
    end_offsets: Vec<u64>,
    initial_bytes: u64,
    /// Arrival bytes per slot, indexed by `slot - t0`.
    arrivals: Vec<u64>,
    index: HashMap<String, usize>,
}

impl QueueModel {
    /// `initial` is the queue content at `t0` (head first); `arrivals` must
    /// be ordered by capture slot within `[t0, last_slot]`.
    pub fn new(
        t0: Slot,
        last_slot: Slot,
        capacity: u64,
        per_slot_capacity: u64,
        initial: Vec<DataUnit>,
        arrivals: Vec<DataUnit>,
        transmissible: Vec<bool>,
    ) -> Result<Self, QueueError> {
        if t0 > last_slot {
            return Err(QueueError::InvalidModel(format!(
                "t0 {t0} beyond last slot {last_slot}"
            )));
        }
        if capacity == 0 {
            return Err(QueueError::InvalidModel("capacity must be positive".into()));
        }
        if per_slot_capacity == 0 {
            return Err(QueueError::InvalidModel("per-slot capacity must be positive".into()));
        }
        if transmissible.len() != last_slot + 1 {
            return Err(QueueError::InvalidModel(format!(
                "transmissible mask has {} slots, expected {}",
                transmissible.len(),
                last_slot + 1
            )));
        }
        let mut prev = t0;
        for u in &arrivals {
            if u.capture_slot < prev || u.capture_slot > last_slot {
                return Err(QueueError::InvalidModel(format!(
                    "arrival `{}` at slot {} out of order or outside [{t0}, {last_slot}]",
                    u.unit_id, u.capture_slot
                )));
            }
            prev = u.capture_slot;
        }
        let initial_count = initial.len();
        let mut units = initial;
        units.extend(arrivals);
        if units.iter().any(|u| u.size_bytes == 0) {
            return Err(QueueError::InvalidModel("zero-sized unit".into()));
        }
        let mut end_offsets = Vec::with_capacity(units.len());
        let mut acc = 0u64;
        let mut index = HashMap::with_capacity(units.len());
        for (i, u) in units.iter().enumerate() {
            acc += u.size_bytes;
            end_offsets.push(acc);
            if index.insert(u.unit_id.clone(), i).is_some() {
                return Err(QueueError::InvalidModel(format!("duplicate unit id `{}`", u.unit_id)));
            }
        }
        let initial_bytes = units[..initial_count].iter().map(|u| u.size_bytes).sum();
        let mut per_slot = vec![0u64; last_slot - t0 + 1];
        for u in &units[initial_count..] {
            per_slot[u.capture_slot - t0] += u.size_bytes;
        }
        Ok(QueueModel {
            t0,
            last_slot,
            capacity,
            per_slot_capacity,
            units,
            initial_count,
            transmissible,
            end_offsets,
            initial_bytes,
            arrivals: per_slot,
            index,
        })
    }

    /// Queue model of the scenario's target satellite, using the
    /// transmissible flags from `records`.
    pub fn from_scenario(
        scenario: &ConstellationScenario,
        records: &[AttackabilityRecord],
    ) -> Result<Self, QueueError> {
        let t0 = scenario.target.attack_start_slot;
        let trace = scenario.target_trace();
        let sat = scenario.target_satellite();
        let mut transmissible = vec![false; scenario.time.last_slot() + 1];
        for r in records {
            if r.slot < transmissible.len() {
                transmissible[r.slot] = r.transmissible;
            }
        }
        QueueModel::new(
            t0,
            scenario.time.last_slot(),
            sat.capacity_bytes,
            per_slot_capacity(scenario),
            trace.initial_units(t0),
            trace.arrivals_from(t0).cloned().collect(),
            transmissible,
        )
    }

    pub fn t0(&self) -> Slot {
        self.t0
    }

    pub fn last_slot(&self) -> Slot {
        self.last_slot
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn per_slot_capacity(&self) -> u64 {
        self.per_slot_capacity
    }

    pub fn units(&self) -> &[DataUnit] {
        &self.units
    }

    pub fn initial_units(&self) -> &[DataUnit] {
        &self.units[..self.initial_count]
    }

    pub fn arriving_units(&self) -> &[DataUnit] {
        &self.units[self.initial_count..]
    }

    pub fn initial_bytes(&self) -> u64 {
        self.initial_bytes
    }

    pub fn arrival_bytes(&self, slot: Slot) -> u64 {
        if slot < self.t0 || slot > self.last_slot {
            0
        } else {
            self.arrivals[slot - self.t0]
        }
    }

    pub fn is_transmissible(&self, slot: Slot) -> bool {
        self.transmissible.get(slot).copied().unwrap_or(false)
    }

    pub fn transmissible_mask(&self) -> &[bool] {
        &self.transmissible
    }

    pub fn unit_index(&self, unit_id: &str) -> Result<usize, QueueError> {
        self.index
            .get(unit_id)
            .copied()
            .ok_or_else(|| QueueError::UnknownUnit(unit_id.to_string()))
    }

    /// Byte span `[start, end)` of a unit in the global FIFO order.
    pub fn span(&self, unit: usize) -> (u64, u64) {
        let end = self.end_offsets[unit];
        (end - self.units[unit].size_bytes, end)
    }

    /// Sub-queue length at `t0` before any slot is processed: bytes up to and
    /// including the unit.
    pub fn initial_sub_queue(&self, unit: usize) -> u64 {
        self.end_offsets[unit]
    }

    /// Same model with a different transmissible mask.
    pub fn with_transmissible(&self, transmissible: Vec<bool>) -> Result<Self, QueueError> {
        QueueModel::new(
            self.t0,
            self.last_slot,
            self.capacity,
            self.per_slot_capacity,
            self.initial_units().to_vec(),
            self.arriving_units().to_vec(),
            transmissible,
        )
    }

    pub(crate) fn attack_mask(&self, attacked: &BTreeSet<Slot>) -> Vec<bool> {
        let mut mask = vec![false; self.last_slot + 1];
        for &t in attacked {
            if t <= self.last_slot {
                mask[t] = true;
            }
        }
        mask
    }
}

/// Aggregate per-slot evolution over `[t0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    t0: Slot,
    last_slot: Slot,
    /// Queue length after each slot.
    pub queue_bytes: Vec<u64>,
    pub tx_bytes: Vec<u64>,
    pub drop_bytes: Vec<u64>,
    /// Pre-drop length reached capacity in the slot.
    pub full: Vec<bool>,
    /// Cumulative bytes consumed (downlinked or dropped) before each slot.
    pub consumed_before: Vec<u64>,
}

/// Applies the drop rule to a pre-drop queue length.
pub(crate) fn drop_amount(length: u64, capacity: u64, per_slot_capacity: u64) -> u64 {
    if length <= capacity {
        return 0;
    }
    let raw = length - capacity;
    raw.max(per_slot_capacity).min(length)
}

/// Aggregate fast path.
pub fn simulate(model: &QueueModel, attacked: &BTreeSet<Slot>) -> Evolution {
    simulate_mask(model, &model.attack_mask(attacked))
}

pub(crate) fn simulate_mask(model: &QueueModel, attacked: &[bool]) -> Evolution {
    let n = model.last_slot - model.t0 + 1;
    let mut ev = Evolution {
        t0: model.t0,
        last_slot: model.last_slot,
        queue_bytes: Vec::with_capacity(n),
        tx_bytes: Vec::with_capacity(n),
        drop_bytes: Vec::with_capacity(n),
        full: Vec::with_capacity(n),
        consumed_before: Vec::with_capacity(n),
    };
    let mut queue = model.initial_bytes;
    let mut consumed = 0u64;
    for (k, t) in (model.t0..=model.last_slot).enumerate() {
        let mut length = queue + model.arrivals[k];
        let tx = if model.transmissible[t] && !attacked[t] {
            length.min(model.per_slot_capacity)
        } else {
            0
        };
        length -= tx;
        let full = length >= model.capacity;
        let dropped = drop_amount(length, model.capacity, model.per_slot_capacity);
        queue = length - dropped;
        ev.consumed_before.push(consumed);
        consumed += tx + dropped;
        ev.queue_bytes.push(queue);
        ev.tx_bytes.push(tx);
        ev.drop_bytes.push(dropped);
        ev.full.push(full);
    }
    ev
}

impl Evolution {
    pub fn t0(&self) -> Slot {
        self.t0
    }

    pub fn last_slot(&self) -> Slot {
        self.last_slot
    }

    pub fn slots(&self) -> std::ops::RangeInclusive<Slot> {
        self.t0..=self.last_slot
    }

    fn consumed_after(&self, k: usize) -> u64 {
        self.consumed_before[k] + self.tx_bytes[k] + self.drop_bytes[k]
    }

    /// Fate of a unit: downlinked at the slot its last byte is sent, dropped
    /// at the first slot any of its bytes is dropped, or still pending.
    pub fn fate(&self, model: &QueueModel, unit: usize) -> Evacuation {
        let (start, end) = model.span(unit);
        let n = self.tx_bytes.len();
        // first slot that consumes past the unit's start
        let mut k = self.consumed_before.partition_point(|&c| c <= start).saturating_sub(1);
        while k < n && self.consumed_after(k) <= start {
            k += 1;
        }
        while k < n {
            let tx_end = self.consumed_before[k] + self.tx_bytes[k];
            if tx_end >= end {
                return Evacuation::Downlinked(self.t0 + k);
            }
            if self.drop_bytes[k] > 0 && self.consumed_after(k) > start {
                return Evacuation::Dropped(self.t0 + k);
            }
            k += 1;
        }
        Evacuation::Pending
    }

    /// `max(t0, max{t : full(t), t0 <= t < bound})`.
    pub fn last_full_before(&self, bound: Slot) -> Slot {
        let upto = bound.saturating_sub(self.t0).min(self.full.len());
        self.full[..upto]
            .iter()
            .rposition(|&f| f)
            .map_or(self.t0, |k| self.t0 + k)
    }

    /// Last-full slot before the unit's evacuation.
    pub fn last_full(&self, model: &QueueModel, unit: usize) -> Slot {
        let bound = self.fate(model, unit).bound(self.last_slot);
        self.last_full_before(bound)
    }

    /// Bytes at or ahead of the unit after slot `t`.
    pub fn sub_queue(&self, model: &QueueModel, unit: usize, t: Slot) -> u64 {
        let k = t - self.t0;
        model.end_offsets[unit].saturating_sub(self.consumed_after(k))
    }

    pub fn total_tx(&self) -> u64 {
        self.tx_bytes.iter().sum()
    }

    pub fn total_drop(&self) -> u64 {
        self.drop_bytes.iter().sum()
    }

    pub fn final_queue(&self) -> u64 {
        *self.queue_bytes.last().expect("at least one slot")
    }
}

/// Evacuation slot of one unit under an attack set.
pub fn expected_downlink(model: &QueueModel, attacked: &BTreeSet<Slot>, unit: usize) -> Evacuation {
    simulate(model, attacked).fate(model, unit)
}

/// Difference in evacuation slot from attacking `extra` on top of `attacked`.
pub fn attack_strength(model: &QueueModel, attacked: &BTreeSet<Slot>, extra: Slot, unit: usize) -> Strength {
    let before = expected_downlink(model, attacked, unit);
    let mut with = attacked.clone();
    with.insert(extra);
    let after = expected_downlink(model, &with, unit);
    strength_between(before, after, model.last_slot)
}

pub(crate) fn strength_between(before: Evacuation, after: Evacuation, last_slot: Slot) -> Strength {
    match (before.slot_value(last_slot), after.slot_value(last_slot)) {
        (Some(b), Some(a)) => Strength::Slots(a - b),
        (Some(_), None) => Strength::Infinite,
        (None, None) => Strength::Slots(0),
        (None, Some(a)) => Strength::Slots(a - last_slot as i64 - 2),
    }
}

#[cfg(test)]
mod tests;
