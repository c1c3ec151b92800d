//! `result.json`, `data.csv`, `trace.csv` and grid files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::run::{ResultRecord, RunOutput};
use crate::CliError;

pub const DATA_CSV_HEADER: &str = "parameter,quantity,mean,stderr,ci95_lo,ci95_hi,ci99_lo,ci99_hi,m";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per estimate; floats carry 17 significant digits and an empty
/// `parameter` means the quantity has none.
pub fn data_csv(record: &ResultRecord) -> String {
    let mut s = String::from(DATA_CSV_HEADER);
    s.push('\n');
    for r in &record.estimates {
        let p = r.parameter.map(num).unwrap_or_default();
        let _ = writeln!(
            s,
            "{p},{},{},{},{},{},{},{},{}",
            r.quantity,
            num(r.mean),
            num(r.stderr),
            num(r.ci95.0),
            num(r.ci95.1),
            num(r.ci99.0),
            num(r.ci99.1),
            r.m
        );
    }
    s
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf, CliError> {
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Writes every output file into `dir` (created if needed) and returns the
/// paths written.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let json = serde_json::to_string_pretty(&out.record).expect("record serialises");
    let mut written = vec![
        write(dir.join("result.json"), &(json + "\n"))?,
        write(dir.join("data.csv"), &data_csv(&out.record))?,
    ];
    if let Some(trace) = &out.trace_csv {
        written.push(write(dir.join("trace.csv"), trace)?);
    }
    for (name, text) in &out.files {
        written.push(write(dir.join(name), text)?);
    }
    Ok(written)
}
