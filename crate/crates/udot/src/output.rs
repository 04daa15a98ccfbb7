//! File emission: CSV tables and the JSON report.
//!
//! Everything written here is deterministic for a fixed config and seed —
//! no timestamps, no absolute paths, no map iteration over unordered
//! containers — so repeated runs produce byte-identical artifacts and can
//! be diffed directly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

/// Floating-point cell format: 17 significant digits, enough for exact
/// round-tripping through `str::parse::<f64>`.
pub fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

/// Finite numbers pass through; NaN/infinity become strings so report
/// assembly never panics on a degenerate diagnostic.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else {
        Value::from(format!("{v}"))
    }
}

/// Write a CSV file from a header and preformatted rows.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> io::Result<()> {
    let mut out = String::with_capacity(rows.len() * 96 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    fs::write(path, out)
}

/// Write the report as pretty JSON with a trailing newline.
pub fn write_report(path: &Path, report: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    text.push('\n');
    fs::write(path, text)
}

/// Read and parse an existing report (for `verify`, which appends to it).
pub fn read_report(path: &Path) -> io::Result<Value> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

/// Parse one float cell, with file/line context in the error message.
pub fn parse_cell(cell: &str, path: &Path, line: usize) -> Result<f64, String> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| format!("{}:{line}: not a number: {cell:?}", path.display()))
}

/// Stderr convenience that never fails the command over a broken pipe.
pub fn warn(msg: &str) {
    let _ = writeln!(io::stderr(), "udot: {msg}");
}
