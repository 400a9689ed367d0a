//! CSV serialization of experiment results.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so the
//! bytes depend only on the values and parsing them back is exact.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{ExperimentId, ExperimentResult, ResultRow};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "experiment",
    "series",
    "sweep_value",
    "metric",
    "estimate",
    "std_error",
    "trials",
    "closed_form",
];

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `result` as CSV to any sink, header first.
pub fn write_csv<W: Write>(result: &ExperimentResult, sink: W) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::Empty("write_csv"));
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for r in &result.rows {
        w.write_record([
            result.experiment.name().to_string(),
            r.series.clone(),
            r.sweep_value.to_string(),
            r.metric.clone(),
            r.estimate.to_string(),
            r.std_error.to_string(),
            r.trials.to_string(),
            r.closed_form.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `result` to `path`, header first.
pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::Empty("emit_csv"));
    }
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    write_csv(result, file)
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {what} `{field}`")))
}

/// Reads a file written by [`emit_csv`].
pub fn read_csv(path: &Path) -> Result<ExperimentResult> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let mut rd = csv::Reader::from_reader(file);
    let header = rd.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!("unexpected CSV header in {}", path.display())));
    }
    let mut experiment = None;
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let id: ExperimentId = rec[0].parse()?;
        if *experiment.get_or_insert(id) != id {
            return Err(Error::Config("mixed experiments in one file".into()));
        }
        rows.push(ResultRow {
            series: rec[1].to_string(),
            sweep_value: parse(&rec[2], "sweep value")?,
            metric: rec[3].to_string(),
            estimate: parse(&rec[4], "estimate")?,
            std_error: parse(&rec[5], "standard error")?,
            trials: parse(&rec[6], "trial count")?,
            closed_form: if rec[7].is_empty() {
                None
            } else {
                Some(parse(&rec[7], "closed form")?)
            },
        });
    }
    let experiment = experiment.ok_or(Error::Empty("read_csv"))?;
    Ok(ExperimentResult { experiment, rows })
}
