//! Rendering, writing, manifests and reading specs back.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use pushasep::verify::CheckReport;
use pushasep::Error;
use serde::Serialize;
use serde_json::Value;

use crate::run::{execute, Outcome, Table};
use crate::runspec::{Format, RunSpec, SpecError};

pub enum RunError {
    Spec(String),
    Other(String),
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidRates(_)
            | Error::NonDistinctRates
            | Error::ChamberMismatch(_)
            | Error::Invalid(_)
            | Error::InterlacingViolation(_)
            | Error::Dimension { .. }
            | Error::Parse(_)
            | Error::NotApplicable(_) => RunError::Spec(e.to_string()),
            other => RunError::Other(other.to_string()),
        }
    }
}

impl From<SpecError> for RunError {
    fn from(e: SpecError) -> Self {
        RunError::Spec(e.to_string())
    }
}

#[derive(Serialize)]
struct JsonTable<'a> {
    runspec: &'a RunSpec,
    columns: &'a [String],
    rows: &'a [Vec<crate::run::Cell>],
}

#[derive(Serialize)]
struct JsonReports<'a> {
    runspec: &'a RunSpec,
    reports: &'a [CheckReport],
}

#[derive(Serialize)]
struct Manifest<'a> {
    runspec: &'a RunSpec,
    git_describe: &'a str,
    output: &'a Path,
    rows: usize,
    started_unix: u64,
    wall_clock_secs: f64,
}

/// CSV: a `# runspec` line, a header, then one row per line.
pub fn render_table(spec: &RunSpec, t: &Table) -> String {
    match spec.format {
        Format::Csv => {
            let mut s = format!("# runspec {}\n{}\n", spec.to_json(), t.columns.join(","));
            for row in &t.rows {
                let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                s.push_str(&line.join(","));
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let j = JsonTable { runspec: spec, columns: &t.columns, rows: &t.rows };
            serde_json::to_string_pretty(&j).expect("table serializes") + "\n"
        }
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_out(spec: &RunSpec, body: &str, rows: usize, started: (u64, Instant)) -> Result<(), RunError> {
    match &spec.out {
        None => {
            std::io::stdout().write_all(body.as_bytes()).map_err(|e| RunError::Other(e.to_string()))?;
        }
        Some(path) => {
            fs::write(path, body).map_err(|e| RunError::Other(format!("{}: {e}", path.display())))?;
            let m = Manifest {
                runspec: spec,
                git_describe: env!("GIT_DESCRIBE"),
                output: path,
                rows,
                started_unix: started.0,
                wall_clock_secs: started.1.elapsed().as_secs_f64(),
            };
            let mp = manifest_path(path);
            let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
            fs::write(&mp, text).map_err(|e| RunError::Other(format!("{}: {e}", mp.display())))?;
        }
    }
    Ok(())
}

/// Runs the spec and writes its outputs. `Ok(false)` means a check failed.
pub fn run_and_write(spec: &RunSpec) -> Result<bool, RunError> {
    let unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let started = (unix, Instant::now());
    match execute(spec)? {
        Outcome::Table(t) => {
            write_out(spec, &render_table(spec, &t), t.rows.len(), started)?;
            Ok(true)
        }
        Outcome::Reports(reports) => {
            for r in &reports {
                println!("{r}");
            }
            let failed = reports.iter().filter(|r| !r.pass).count();
            println!("{} checks, {} failed", reports.len(), failed);
            if spec.out.is_some() {
                let j = JsonReports { runspec: spec, reports: &reports };
                let body = serde_json::to_string_pretty(&j).expect("reports serialize") + "\n";
                write_out(spec, &body, reports.len(), started)?;
            }
            Ok(failed == 0)
        }
    }
}

/// The spec from a manifest, a JSON output, a bare spec, or a CSV output.
pub fn read_spec(path: &Path) -> Result<RunSpec, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(rest) = text.strip_prefix("# runspec ") {
        let line = rest.lines().next().unwrap_or("");
        return serde_json::from_str(line).map_err(|e| e.to_string());
    }
    let v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let inner = v.get("runspec").cloned().unwrap_or(v);
    serde_json::from_value(inner).map_err(|e| e.to_string())
}
