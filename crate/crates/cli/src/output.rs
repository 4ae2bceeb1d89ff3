//! JSON and CSV report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::checks::{CheckOutcome, Row};
use crate::error::{CliError, Result};

pub const REPORT_SCHEMA: &str = "carre.report/1";
pub const SUMMARY_SCHEMA: &str = "carre.summary/1";

/// Geometry metadata shared by every report of a run.
#[derive(Debug, Clone)]
pub struct RunInfo {
    pub seed: u64,
    pub geometry: Value,
    pub conventions: Vec<String>,
}

fn write(path: PathBuf, contents: &str) -> Result<()> {
    std::fs::write(&path, contents).map_err(|source| CliError::Write { path, source })
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s
}

pub fn report_value(info: &RunInfo, outcome: &CheckOutcome) -> Value {
    json!({
        "schema": REPORT_SCHEMA,
        "check": outcome.check,
        "seed": info.seed,
        "geometry": info.geometry,
        "conventions": info.conventions,
        "status": outcome.status.as_str(),
        "summary": outcome.summary,
        "report": outcome.report,
    })
}

pub fn csv(check: &str, rows: &[Row]) -> String {
    let n = rows.first().map_or(0, |r| r.point.len());
    let mut out = String::new();
    for i in 1..=n {
        let _ = write!(out, "x{i},");
    }
    out.push_str("margin,check\n");
    for r in rows {
        for x in &r.point {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{},{check}", r.margin);
    }
    out
}

/// Writes `<check>.json`, `<check>.csv` (when rows exist) and `summary.json`.
pub fn write_reports(dir: &Path, info: &RunInfo, outcomes: &[CheckOutcome], csv_enabled: bool, exit: u8) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.into(), source })?;
    let mut checks = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        write(dir.join(format!("{}.json", o.check)), &pretty(&report_value(info, o)))?;
        let csv_file = if csv_enabled && !o.rows.is_empty() {
            let name = format!("{}.csv", o.check);
            write(dir.join(&name), &csv(&o.check, &o.rows))?;
            Some(name)
        } else {
            None
        };
        checks.push(json!({
            "check": o.check,
            "status": o.status.as_str(),
            "summary": o.summary,
            "json": format!("{}.json", o.check),
            "csv": csv_file,
        }));
    }
    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "seed": info.seed,
        "geometry": info.geometry,
        "exit_code": exit,
        "checks": checks,
    });
    write(dir.join("summary.json"), &pretty(&summary))
}

/// Summary written when the configuration could not be used.
pub fn write_error(dir: &Path, error: &CliError) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.into(), source })?;
    let summary = json!({ "schema": SUMMARY_SCHEMA, "exit_code": 1, "error": error.to_string(), "checks": [] });
    write(dir.join("summary.json"), &pretty(&summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = vec![Row { point: vec![0.5, -1.0], margin: 2.0 }, Row { point: vec![0.25, 3.0], margin: -0.125 }];
        assert_eq!(csv("cd", &rows), "x1,x2,margin,check\n0.5,-1,2,cd\n0.25,3,-0.125,cd\n");
    }
}
