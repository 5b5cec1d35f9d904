//! File parsing and report emission.
//!
//! Matrices arrive as headerless CSV (one row per line) or as a JSON array
//! of rows; the format is chosen by content, so any extension works.
//! Reports leave as pretty-printed JSON or as CSV time series, to a file
//! or to stdout.

use std::fs;
use std::io::Write;

use mcmclab_core::markov::{StochasticMatrix, DEFAULT_ROW_TOL};
use mcmclab_core::{Error, Result};

fn read_text(path: &str) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::ParameterOutOfRange(format!("cannot read {path}: {e}")))
}

fn parse_number(token: &str, row: usize, col: usize) -> Result<f64> {
    token.trim().parse::<f64>().map_err(|_| {
        Error::ParameterOutOfRange(format!(
            "row {row} column {col}: not a number: {:?}",
            token.trim()
        ))
    })
}

/// Parses numeric rows from CSV text; blank lines and `#` comments are
/// skipped.
fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(col, token)| parse_number(token, lineno, col))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::ParameterOutOfRange(
            "input contains no numeric rows".into(),
        ));
    }
    Ok(rows)
}

fn parse_rows(path: &str) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)
            .map_err(|e| Error::ParameterOutOfRange(format!("matrix JSON in {path}: {e}")))
    } else {
        parse_csv_rows(&text)
    }
}

/// Loads a stochastic matrix from a CSV or JSON file and validates it.
pub fn load_matrix(path: &str) -> Result<StochasticMatrix> {
    StochasticMatrix::from_rows(&parse_rows(path)?, DEFAULT_ROW_TOL)
}

/// Loads a vector of floats; the file may lay them out one per line, as a
/// single CSV row, or as a JSON array (flat or nested).
pub fn load_vector(path: &str) -> Result<Vec<f64>> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::ParameterOutOfRange(format!("vector JSON in {path}: {e}")))?;
        let mut out = Vec::new();
        flatten_numbers(&value, &mut out)?;
        return Ok(out);
    }
    Ok(parse_csv_rows(&text)?.into_iter().flatten().collect())
}

fn flatten_numbers(value: &serde_json::Value, out: &mut Vec<f64>) -> Result<()> {
    match value {
        serde_json::Value::Number(x) => {
            out.push(x.as_f64().ok_or_else(|| {
                Error::ParameterOutOfRange(format!("not representable as f64: {x}"))
            })?);
            Ok(())
        }
        serde_json::Value::Array(items) => {
            for item in items {
                flatten_numbers(item, out)?;
            }
            Ok(())
        }
        other => Err(Error::ParameterOutOfRange(format!(
            "expected numbers, found {other}"
        ))),
    }
}

/// Writes `text` to the file at `out`, or to stdout when `out` is `None`.
pub fn emit(out: Option<&str>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::ParameterOutOfRange(format!("cannot write {path}: {e}"))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|e| Error::ParameterOutOfRange(format!("cannot write stdout: {e}")))
        }
    }
}

/// Serializes a report document as pretty JSON with a trailing newline.
pub fn to_json_text<T: serde::Serialize>(doc: &T) -> Result<String> {
    serde_json::to_string_pretty(doc)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::ParameterOutOfRange(format!("cannot serialize report: {e}")))
}
