//! CSV emission.

use std::fs;
use std::path::Path;

use super::experiment::ExperimentResult;
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 7] = ["trial", "slot", "algorithm", "beam", "reward", "ber", "cum_regret"];
pub const SUMMARY_HEADER: [&str; 6] = [
    "sweep_value",
    "algorithm",
    "mean_throughput_bps",
    "se_throughput",
    "mean_regret",
    "se_regret",
];

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn sweep_cell(value: Option<f64>) -> String {
    value.map_or(String::new(), |v| v.to_string())
}

/// Writes all traces, ordered by sweep value, algorithm, trial and slot.
/// Radar processing slots carry beam `-1`.
pub fn write_trace_csv(results: &[ExperimentResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    for result in results {
        for trace in &result.traces {
            for (rec, regret) in trace.records.iter().zip(&trace.cum_regret) {
                let beam = rec.arm.map_or_else(|| "-1".to_string(), |a| a.to_string());
                w.write_record([
                    trace.trial.to_string(),
                    rec.slot.to_string(),
                    rec.algorithm.name().to_string(),
                    beam,
                    rec.reward.to_string(),
                    rec.ber.to_string(),
                    regret.to_string(),
                ])
                .map_err(csv_err(path))?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes one end-of-horizon row per (sweep value, algorithm).
pub fn write_summary_csv(results: &[ExperimentResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(path))?;
    for result in results {
        for row in &result.rows {
            w.write_record([
                sweep_cell(row.sweep_value),
                row.algorithm.name().to_string(),
                row.mean_throughput_bps.to_string(),
                row.se_throughput.to_string(),
                row.mean_regret.to_string(),
                row.se_regret.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `trace.csv` and `summary.csv` into `dir`, creating it if needed.
pub fn emit_csv(results: &[ExperimentResult], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_trace_csv(results, &dir.join("trace.csv"))?;
    write_summary_csv(results, &dir.join("summary.csv"))
}
