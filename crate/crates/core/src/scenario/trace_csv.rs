//! Capture trace CSV: `unit_id,satellite_id,capture_iso8601,size_bytes`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::*;

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    unit_id: String,
    satellite_id: String,
    capture_iso8601: DateTime<Utc>,
    size_bytes: u64,
}

/// Parses a trace CSV, mapping capture timestamps onto the grid. Rows are
/// kept in file order within each satellite and then stably sorted by slot.
/// Initial queues are left empty; the scenario file supplies them.
pub fn parse_trace_csv(text: &str, time: &TimeGrid) -> Result<CaptureTrace, ScenarioError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| ScenarioError::Parse(e.to_string()))?
        .clone();
    let expected = ["unit_id", "satellite_id", "capture_iso8601", "size_bytes"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(ScenarioError::Parse(format!(
            "trace csv header must be `{}`",
            expected.join(",")
        )));
    }
    let mut sats: BTreeMap<String, SatelliteTrace> = BTreeMap::new();
    for (line, row) in reader.deserialize::<TraceRow>().enumerate() {
        let row = row.map_err(|e| ScenarioError::Parse(format!("trace csv row {}: {e}", line + 2)))?;
        let capture_slot = time.slot_of(row.capture_iso8601)?;
        sats.entry(row.satellite_id)
            .or_insert_with(|| SatelliteTrace {
                initial_queue: InitialQueue::empty(),
                units: Vec::new(),
            })
            .units
            .push(DataUnit {
                unit_id: row.unit_id,
                capture_slot,
                size_bytes: row.size_bytes,
            });
    }
    for t in sats.values_mut() {
        t.units.sort_by_key(|u| u.capture_slot);
    }
    Ok(CaptureTrace { satellites: sats })
}

/// Writes captured units (not the synthesized initial queue) as trace CSV,
/// stamping each with its slot start time.
pub fn write_trace_csv(trace: &CaptureTrace, time: &TimeGrid) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["unit_id", "satellite_id", "capture_iso8601", "size_bytes"])
        .expect("in-memory write");
    for (sat_id, t) in &trace.satellites {
        for u in &t.units {
            w.write_record([
                u.unit_id.as_str(),
                sat_id.as_str(),
                &time
                    .slot_start(u.capture_slot)
                    .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
                &u.size_bytes.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}
