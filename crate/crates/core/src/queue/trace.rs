use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{simulate, Evacuation, QueueError, QueueModel, SlotOutcome};
use crate::scenario::Slot;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetOutcome {
    pub unit_id: String,
    pub evacuation: Evacuation,
    /// Last slot before evacuation at which the queue was full (or `t0`).
    pub last_full: Slot,
    /// Sub-queue length after each slot of the trace.
    pub sub_queue_bytes: Vec<u64>,
}

impl TargetOutcome {
    pub fn dropped(&self) -> bool {
        self.evacuation.is_dropped()
    }
}

/// Slot-by-slot record of an evolution plus per-target results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueTrace {
    pub t0: Slot,
    pub attacked: BTreeSet<Slot>,
    pub outcomes: Vec<SlotOutcome>,
    pub targets: Vec<TargetOutcome>,
}

impl QueueTrace {
    pub fn target(&self, unit_id: &str) -> Option<&TargetOutcome> {
        self.targets.iter().find(|t| t.unit_id == unit_id)
    }
}

/// Runs the queue over `[t0, T]` with the given attacked slots and reports
/// the listed targets. Unit events are derived from byte offsets, so the
/// trace agrees with the unit-level model by construction of the offsets.
pub fn evolve(model: &QueueModel, attacked: &BTreeSet<Slot>, targets: &[&str]) -> Result<QueueTrace, QueueError> {
    let ev = simulate(model, attacked);
    let mut outcomes: Vec<SlotOutcome> = ev
        .slots()
        .enumerate()
        .map(|(k, t)| SlotOutcome {
            slot: t,
            transmitted_bytes: ev.tx_bytes[k],
            dropped_bytes: ev.drop_bytes[k],
            queue_bytes: ev.queue_bytes[k],
            full: ev.full[k],
            transmitted_unit_ids: Vec::new(),
            dropped_unit_ids: Vec::new(),
        })
        .collect();
    for (i, unit) in model.units().iter().enumerate() {
        match ev.fate(model, i) {
            Evacuation::Downlinked(t) => outcomes[t - model.t0()].transmitted_unit_ids.push(unit.unit_id.clone()),
            Evacuation::Dropped(t) => outcomes[t - model.t0()].dropped_unit_ids.push(unit.unit_id.clone()),
            Evacuation::Pending => {}
        }
    }
    let mut out_targets = Vec::with_capacity(targets.len());
    for id in targets {
        let i = model.unit_index(id)?;
        let evacuation = ev.fate(model, i);
        out_targets.push(TargetOutcome {
            unit_id: id.to_string(),
            evacuation,
            last_full: ev.last_full_before(evacuation.bound(model.last_slot())),
            sub_queue_bytes: ev.slots().map(|t| ev.sub_queue(model, i, t)).collect(),
        });
    }
    Ok(QueueTrace {
        t0: model.t0(),
        attacked: attacked.clone(),
        outcomes,
        targets: out_targets,
    })
}

/// `slot,queue_bytes,tx_bytes,drop_bytes,subq_<unit_id>_bytes...`
pub fn trace_to_csv(trace: &QueueTrace) -> String {
    let mut out = String::from("slot,queue_bytes,tx_bytes,drop_bytes");
    for t in &trace.targets {
        out.push_str(&format!(",subq_{}_bytes", t.unit_id));
    }
    out.push('\n');
    for (k, o) in trace.outcomes.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}",
            o.slot, o.queue_bytes, o.transmitted_bytes, o.dropped_bytes
        ));
        for t in &trace.targets {
            out.push_str(&format!(",{}", t.sub_queue_bytes[k]));
        }
        out.push('\n');
    }
    out
}

/// Unit event log: `slot,event,unit_id` with `transmitted` or `dropped`.
pub fn trace_events_csv(trace: &QueueTrace) -> String {
    let mut out = String::from("slot,event,unit_id\n");
    for o in &trace.outcomes {
        for id in &o.transmitted_unit_ids {
            out.push_str(&format!("{},transmitted,{id}\n", o.slot));
        }
        for id in &o.dropped_unit_ids {
            out.push_str(&format!("{},dropped,{id}\n", o.slot));
        }
    }
    out
}
