//! CSV and JSON serialisation of runs.

use std::io::{Read, Write};

use super::{RunSummary, TrialRecord};
use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

/// Columns: trial_index, arrival_time_s, detector, phase_rad, origin.
pub fn write_records_csv<W: Write>(writer: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if records.is_empty() {
        w.write_record(["trial_index", "arrival_time_s", "detector", "phase_rad", "origin"])
            .map_err(csv_err)?;
    }
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(csv_err))
        .collect()
}

pub fn write_summary_json<W: Write>(mut writer: W, summary: &RunSummary) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, summary)?;
    writer.write_all(b"\n")?;
    Ok(())
}
