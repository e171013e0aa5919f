use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Method, TrialOutcome, TrialRecord, TrialStatus};
use crate::error::{Error, Result};
use crate::gsbf::ConvergenceTrace;

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRACE_DIR: &str = "traces";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<TrialRecord>, _>>()
        .map_err(csv_err(path))
}

/// One row per iterate, starting with the initial point whose
/// per-step columns are empty.
pub fn write_trace(path: &Path, trace: &ConvergenceTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let err = csv_err(path);
    let mut rows = vec![[
        "iteration".to_string(),
        "omega".into(),
        "delta_g".into(),
        "displacement".into(),
        "residual_bound".into(),
    ]];
    rows.push(["0".into(), trace.initial_omega.to_string(), String::new(), String::new(), String::new()]);
    for rec in &trace.records {
        rows.push([
            rec.iteration.to_string(),
            rec.omega.to_string(),
            rec.model_reduction.to_string(),
            rec.displacement.to_string(),
            rec.residual_bound.to_string(),
        ]);
    }
    rows.iter()
        .try_for_each(|row| w.write_record(row))
        .map_err(err)?;
    w.flush().map_err(io_err(path))
}

pub fn trace_file_name(record: &TrialRecord) -> String {
    format!("{}_sinr{}_seed{}.csv", record.method, record.sinr_db, record.seed)
}

/// Writes `records.csv` and one trace file per Stage-1 trace under `dir`.
pub fn export(outcomes: &[TrialOutcome], dir: &Path) -> Result<()> {
    let trace_dir = dir.join(TRACE_DIR);
    fs::create_dir_all(&trace_dir).map_err(io_err(&trace_dir))?;
    let records: Vec<TrialRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    write_records(&dir.join(RECORDS_FILE), &records)?;
    for o in outcomes {
        if let Some(trace) = &o.trace {
            write_trace(&trace_dir.join(trace_file_name(&o.record)), trace)?;
        }
    }
    Ok(())
}

/// Statistics over the `ok` trials of one (SINR, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sinr_db: f64,
    pub method: Method,
    pub ok_trials: usize,
    pub trials: usize,
    pub mean_total_w: f64,
    pub std_total_w: f64,
    pub mean_transmit_w: f64,
    pub std_transmit_w: f64,
    pub mean_task_count: f64,
    pub std_task_count: f64,
}

/// Mean and sample standard deviation. Values are sorted before summing
/// so the result does not depend on record order.
fn mean_std(mut xs: Vec<f64>) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, (dev.iter().sum::<f64>() / (n - 1.0)).sqrt())
}

/// One row per (SINR, method), ordered by SINR then method.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, Method)> = records.iter().map(|r| (r.sinr_db, r.method)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keys.dedup();
    keys.into_iter()
        .map(|(sinr_db, method)| {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.sinr_db == sinr_db && r.method == method)
                .collect();
            let ok: Vec<&TrialRecord> = cell
                .iter()
                .copied()
                .filter(|r| r.status == TrialStatus::Ok)
                .collect();
            let column = |f: fn(&TrialRecord) -> Option<f64>| ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>();
            let (mean_total_w, std_total_w) = mean_std(column(|r| r.total_w));
            let (mean_transmit_w, std_transmit_w) = mean_std(column(|r| r.transmit_w));
            let (mean_task_count, std_task_count) = mean_std(column(|r| r.task_count.map(|c| c as f64)));
            SummaryRow {
                sinr_db,
                method,
                ok_trials: ok.len(),
                trials: cell.len(),
                mean_total_w,
                std_total_w,
                mean_transmit_w,
                std_transmit_w,
                mean_task_count,
                std_task_count,
            }
        })
        .collect()
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Fixed-width text table.
pub fn format_summary(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>8}  {:<10} {:>7}  {:>22}  {:>22}  {:>16}",
        "SINR dB", "method", "ok/all", "total W (std)", "transmit W (std)", "tasks (std)"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>8.2}  {:<10} {:>7}  {:>11.4} ({:>8.4})  {:>11.4} ({:>8.4})  {:>7.2} ({:>6.2})",
            r.sinr_db,
            r.method.as_str(),
            format!("{}/{}", r.ok_trials, r.trials),
            r.mean_total_w,
            r.std_total_w,
            r.mean_transmit_w,
            r.std_transmit_w,
            r.mean_task_count,
            r.std_task_count,
        );
    }
    out
}
