//! CSV and JSON writers. Files are written to a sibling temporary path and
//! renamed into place once complete.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;
use crate::experiment::{ReplicationResult, SweepRow};

pub const RUN_COLUMNS: [&str; 6] = [
    "replication",
    "k",
    "avg_error",
    "regular_avg_error",
    "bound_paper",
    "bound_geometric",
];

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes).map_err(|e| CliError::io(path, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn csv_bytes(header: Vec<String>, rows: Vec<Vec<String>>, origin: &Path) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let to_err = |e: csv::Error| CliError::validation(origin, e);
    writer.write_record(&header).map_err(to_err)?;
    for row in rows {
        writer.write_record(&row).map_err(to_err)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::validation(origin, e.to_string()))
}

/// One row per `(replication, k)`.
pub fn write_run_csv(path: &Path, results: &[ReplicationResult], n: usize) -> Result<(), CliError> {
    let header = RUN_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain((1..=n).map(|i| format!("per_agent_error_{i}")))
        .collect();
    let mut rows = Vec::new();
    for r in results {
        let s = &r.series;
        for k in 0..s.len() {
            let mut row = vec![
                r.summary.replication.to_string(),
                k.to_string(),
                fmt_f64(s.avg_error[k]),
                fmt_opt(s.regular_avg_error.as_ref().map(|v| v[k])),
                fmt_opt(r.bound_paper.as_ref().map(|b| b.values[k])),
                fmt_opt(r.bound_geometric.as_ref().map(|b| b.values[k])),
            ];
            row.extend(s.per_agent_error.iter().map(|agent| fmt_f64(agent[k])));
            rows.push(row);
        }
    }
    write_atomic(path, &csv_bytes(header, rows, path)?)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), CliError> {
    let header = ["m", "replication", "final_avg_error", "steady_state_error"]
        .iter()
        .map(|c| c.to_string())
        .collect();
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.replication.to_string(),
                fmt_f64(r.final_avg_error),
                fmt_f64(r.steady_state_error),
            ]
        })
        .collect();
    write_atomic(path, &csv_bytes(header, rows, path)?)
}
