//! Unit-by-unit FIFO queue. Slower than the aggregate path but carries unit
//! identities through every slot, so it doubles as the reference model.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{drop_amount, Evacuation, QueueModel};
use crate::scenario::{DataUnit, Slot};

#[derive(Debug, Clone, PartialEq, Eq)]
struct QueuedUnit {
    unit_id: String,
    remaining_bytes: u64,
    /// Some bytes of this unit were dropped; it can no longer be delivered.
    damaged: bool,
}

/// FIFO content of one satellite after some slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OnboardQueueState {
    units: VecDeque<QueuedUnit>,
    queue_bytes: u64,
}

/// What happened to the queue during one slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotOutcome {
    pub slot: Slot,
    pub transmitted_bytes: u64,
    pub dropped_bytes: u64,
    /// Queue length after the slot.
    pub queue_bytes: u64,
    /// Pre-drop length reached capacity.
    pub full: bool,
    /// Units whose last byte was downlinked this slot.
    pub transmitted_unit_ids: Vec<String>,
    /// Units that lost bytes to overflow this slot.
    pub dropped_unit_ids: Vec<String>,
}

impl SlotOutcome {
    /// Total consumption `O + D`.
    pub fn delta(&self) -> u64 {
        self.transmitted_bytes + self.dropped_bytes
    }
}

impl OnboardQueueState {
    pub fn new(initial: &[DataUnit]) -> Self {
        let mut s = OnboardQueueState::default();
        s.push(initial);
        s
    }

    fn push(&mut self, arrivals: &[DataUnit]) {
        for u in arrivals {
            self.queue_bytes += u.size_bytes;
            self.units.push_back(QueuedUnit {
                unit_id: u.unit_id.clone(),
                remaining_bytes: u.size_bytes,
                damaged: false,
            });
        }
    }

    pub fn queue_bytes(&self) -> u64 {
        self.queue_bytes
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Bytes at or ahead of `unit_id`, or `None` if it is not queued.
    pub fn sub_queue_bytes(&self, unit_id: &str) -> Option<u64> {
        let mut acc = 0;
        for u in &self.units {
            acc += u.remaining_bytes;
            if u.unit_id == unit_id {
                return Some(acc);
            }
        }
        None
    }

    /// Head-first `(unit_id, remaining_bytes)` pairs.
    pub fn contents(&self) -> impl Iterator<Item = (&str, u64)> {
        self.units.iter().map(|u| (u.unit_id.as_str(), u.remaining_bytes))
    }

    /// Advances one slot: arrivals, transmission, then overflow drop.
    pub fn step(
        &mut self,
        slot: Slot,
        arrivals: &[DataUnit],
        transmissible: bool,
        attacked: bool,
        capacity: u64,
        per_slot_capacity: u64,
    ) -> SlotOutcome {
        self.push(arrivals);
        let mut out = SlotOutcome {
            slot,
            transmitted_bytes: 0,
            dropped_bytes: 0,
            queue_bytes: 0,
            full: false,
            transmitted_unit_ids: Vec::new(),
            dropped_unit_ids: Vec::new(),
        };

        if transmissible && !attacked {
            let mut budget = per_slot_capacity;
            while budget > 0 {
                let Some(head) = self.units.front_mut() else { break };
                let take = head.remaining_bytes.min(budget);
                head.remaining_bytes -= take;
                budget -= take;
                out.transmitted_bytes += take;
                if head.remaining_bytes == 0 {
                    let done = self.units.pop_front().expect("head exists");
                    if !done.damaged {
                        out.transmitted_unit_ids.push(done.unit_id);
                    }
                }
            }
            self.queue_bytes -= out.transmitted_bytes;
        }

        out.full = self.queue_bytes >= capacity;
        let mut to_drop = drop_amount(self.queue_bytes, capacity, per_slot_capacity);
        out.dropped_bytes = to_drop;
        while to_drop > 0 {
            let head = self.units.front_mut().expect("drop never exceeds queue length");
            let take = head.remaining_bytes.min(to_drop);
            head.remaining_bytes -= take;
            to_drop -= take;
            if !head.damaged {
                head.damaged = true;
                out.dropped_unit_ids.push(head.unit_id.clone());
            }
            if head.remaining_bytes == 0 {
                self.units.pop_front();
            }
        }
        self.queue_bytes -= out.dropped_bytes;
        out.queue_bytes = self.queue_bytes;
        out
    }
}

/// Result of running the unit-level queue over the whole horizon.
#[derive(Debug, Clone)]
pub struct FifoRun {
    pub outcomes: Vec<SlotOutcome>,
    pub fates: HashMap<String, Evacuation>,
}

impl FifoRun {
    pub fn fate(&self, unit_id: &str) -> Evacuation {
        self.fates.get(unit_id).copied().unwrap_or(Evacuation::Pending)
    }

    pub fn last_full_before(&self, bound: Slot) -> Slot {
        let t0 = self.outcomes[0].slot;
        self.outcomes
            .iter()
            .filter(|o| o.full && o.slot < bound)
            .map(|o| o.slot)
            .max()
            .unwrap_or(t0)
    }
}

/// Unit-level evolution of `model` under `attacked`.
pub fn simulate_units(model: &QueueModel, attacked: &BTreeSet<Slot>) -> FifoRun {
    let mut state = OnboardQueueState::new(model.initial_units());
    let arrivals = model.arriving_units();
    let mut next = 0;
    let mut outcomes = Vec::new();
    let mut fates = HashMap::new();
    for t in model.t0()..=model.last_slot() {
        let start = next;
        while next < arrivals.len() && arrivals[next].capture_slot == t {
            next += 1;
        }
        let o = state.step(
            t,
            &arrivals[start..next],
            model.is_transmissible(t),
            attacked.contains(&t),
            model.capacity(),
            model.per_slot_capacity(),
        );
        for id in &o.dropped_unit_ids {
            fates.entry(id.clone()).or_insert(Evacuation::Dropped(t));
        }
        for id in &o.transmitted_unit_ids {
            fates.entry(id.clone()).or_insert(Evacuation::Downlinked(t));
        }
        outcomes.push(o);
    }
    FifoRun { outcomes, fates }
}
