use serde::{Deserialize, Serialize};

use super::{AttackKind, SweepAxis, TrialRecord, TARGET_TRIALS_CSV_HEADER};
use crate::orbit::round_significant;

pub const REPORT_CSV_HEADER: [&str; 7] = ["axis", "value", "trial", "success", "natural", "cost", "planned_slots"];
pub const AGGREGATE_CSV_HEADER: [&str; 8] = ["axis", "value", "q1", "median", "q3", "min", "max", "success_ratio"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub value: f64,
    pub replicate: usize,
    /// Index across all replicates of the point.
    pub trial: usize,
    pub record: TrialRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quartiles by linear interpolation between order statistics.
pub fn box_stats(values: &[f64]) -> Option<BoxStats> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Some(BoxStats {
        min: v[0],
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: v[v.len() - 1],
    })
}

/// Aggregate of one axis value: box statistics over per-replicate success
/// ratios, plus the pooled ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub value: f64,
    pub trials: usize,
    pub successes: usize,
    pub natural: usize,
    pub success_ratio: f64,
    pub replicate_ratios: Vec<f64>,
    pub stats: BoxStats,
}

impl PointSummary {
    pub fn from_rows(value: f64, replicates: usize, rows: &[TrialRow]) -> Self {
        let mut hits = vec![(0usize, 0usize); replicates];
        for r in rows {
            hits[r.replicate].1 += 1;
            if r.record.success {
                hits[r.replicate].0 += 1;
            }
        }
        let replicate_ratios: Vec<f64> = hits
            .iter()
            .map(|&(s, n)| if n == 0 { 0.0 } else { s as f64 / n as f64 })
            .collect();
        let successes = rows.iter().filter(|r| r.record.success).count();
        PointSummary {
            value,
            trials: rows.len(),
            successes,
            natural: rows.iter().filter(|r| r.record.natural).count(),
            success_ratio: if rows.is_empty() {
                0.0
            } else {
                successes as f64 / rows.len() as f64
            },
            stats: box_stats(&replicate_ratios).expect("at least one replicate"),
            replicate_ratios,
        }
    }
}

/// An axis value the sweep could not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointError {
    pub value: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub axis: SweepAxis,
    pub kind: AttackKind,
    pub trials: Vec<TrialRow>,
    pub points: Vec<PointSummary>,
    pub errors: Vec<PointError>,
}

impl EvalReport {
    pub fn point(&self, value: f64) -> Option<&PointSummary> {
        self.points.iter().find(|p| p.value == value)
    }

    pub fn medians(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.stats.median).collect()
    }
}

fn number(x: f64) -> String {
    round_significant(x, 6).to_string()
}

fn to_csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// One row per trial, ordered by axis value then trial index.
pub fn report_to_csv(report: &EvalReport) -> String {
    let mut rows: Vec<&TrialRow> = report.trials.iter().collect();
    rows.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.trial.cmp(&b.trial)));
    to_csv(
        REPORT_CSV_HEADER,
        rows.into_iter().map(|r| {
            [
                report.axis.to_string(),
                number(r.value),
                r.trial.to_string(),
                u8::from(r.record.success).to_string(),
                u8::from(r.record.natural).to_string(),
                r.record.cost.map(|c| c.to_string()).unwrap_or_default(),
                slot_list(&r.record.planned_slots),
            ]
        }),
    )
}

/// One row per axis value, in sweep order.
pub fn aggregate_to_csv(report: &EvalReport) -> String {
    to_csv(
        AGGREGATE_CSV_HEADER,
        report.points.iter().map(|p| {
            [
                report.axis.to_string(),
                number(p.value),
                number(p.stats.q1),
                number(p.stats.median),
                number(p.stats.q3),
                number(p.stats.min),
                number(p.stats.max),
                number(p.success_ratio),
            ]
        }),
    )
}

fn slot_list(slots: &[crate::scenario::Slot]) -> String {
    slots.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";")
}

/// One row per trial of [`super::evaluate_target`].
pub fn target_trials_to_csv(records: &[TrialRecord]) -> String {
    to_csv(
        TARGET_TRIALS_CSV_HEADER,
        records.iter().enumerate().map(|(k, r)| {
            [
                k.to_string(),
                u8::from(r.success).to_string(),
                u8::from(r.natural).to_string(),
                r.cost.map(|c| c.to_string()).unwrap_or_default(),
                slot_list(&r.planned_slots),
                r.true_outcome.map(|e| e.to_string()).unwrap_or_default(),
            ]
        }),
    )
}
