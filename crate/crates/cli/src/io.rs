//! File formats.
//!
//! Matrices are CSV with a header row `n\m,0,1,...` and one row per signal
//! click number, the first field being that number. Traces are CSV with one
//! pulse per line, no header, every record holding the same number of
//! samples.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const MATRIX_CORNER: &str = "n\\m";

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = fs::File::create(path)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn matrix_text<T, F: Fn(&T) -> String>(rows: &[Vec<T>], fmt: F) -> String {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0).max(rows.len());
    let mut out = String::from(MATRIX_CORNER);
    for m in 0..width {
        out.push_str(&format!(",{m}"));
    }
    out.push('\n');
    for (n, row) in rows.iter().enumerate() {
        out.push_str(&n.to_string());
        for m in 0..width {
            out.push(',');
            match row.get(m) {
                Some(v) => out.push_str(&fmt(v)),
                None => out.push('0'),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_f64(path: &Path, rows: &[Vec<f64>]) -> Result<(), CliError> {
    write_file(path, &matrix_text(rows, |v| fmt_f64(*v)))
}

pub fn write_matrix_u64(path: &Path, rows: &[Vec<u64>]) -> Result<(), CliError> {
    write_file(path, &matrix_text(rows, |v| v.to_string()))
}

/// Columns of equal length under a header.
pub fn write_columns(path: &Path, header: &[&str], columns: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Input(format!("{}: {e}", path.display()));
    w.write_record(header).map_err(csv_err)?;
    let len = columns.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..len {
        w.write_record(columns.iter().map(|c| c.get(i).map(String::as_str).unwrap_or("")))
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    write_file(path, &String::from_utf8_lossy(&bytes))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn parse_matrix<T: FromStr + Default + Clone>(path: &Path, what: &str) -> Result<Vec<Vec<T>>, CliError> {
    let text = read_text(path)?;
    let name = path.display();
    if text.trim().is_empty() {
        return Err(CliError::Input(format!("{name}: file is empty")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{name}: {e}")))?
        .clone();
    if header.get(0) != Some(MATRIX_CORNER) {
        return Err(CliError::Input(format!(
            "{name}: line 1, column 1: expected header cell `{MATRIX_CORNER}`"
        )));
    }
    for (col, cell) in header.iter().enumerate().skip(1) {
        if cell.parse::<usize>().ok() != Some(col - 1) {
            return Err(CliError::Input(format!(
                "{name}: line 1, column {}: expected m = {}, found `{cell}`",
                col + 1,
                col - 1
            )));
        }
    }
    let width = header.len() - 1;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::Input(format!("{name}: line {line}: {e}")))?;
        if record.get(0).and_then(|c| c.parse::<usize>().ok()) != Some(i) {
            return Err(CliError::Input(format!(
                "{name}: line {line}, column 1: expected n = {i}"
            )));
        }
        let mut row = Vec::with_capacity(width);
        for (col, cell) in record.iter().enumerate().skip(1) {
            let v = cell.parse::<T>().map_err(|_| {
                CliError::Input(format!(
                    "{name}: line {line}, column {}: `{cell}` is not {what}",
                    col + 1
                ))
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{name}: no data rows")));
    }
    if rows.len() != width {
        return Err(CliError::Input(format!(
            "{name}: matrix has {} rows but {width} columns",
            rows.len()
        )));
    }
    Ok(rows)
}

pub fn read_matrix_f64(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let rows: Vec<Vec<f64>> = parse_matrix(path, "a real number")?;
    for (n, row) in rows.iter().enumerate() {
        for (m, v) in row.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(CliError::Input(format!(
                    "{}: line {}, column {}: `{v}` is not a probability",
                    path.display(),
                    n + 2,
                    m + 2
                )));
            }
        }
    }
    Ok(rows)
}

pub fn read_matrix_u64(path: &Path) -> Result<Vec<Vec<u64>>, CliError> {
    parse_matrix(path, "a non-negative integer")
}

/// One trace per line; records must share one length.
pub fn read_traces(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = read_text(path)?;
    let name = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut traces: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{name}: record {i}: {e}")))?;
        let samples = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        CliError::Input(format!(
                            "{name}: record {i}, sample {col}: `{cell}` is not a finite number"
                        ))
                    })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if let Some(first) = traces.first() {
            if samples.len() != first.len() {
                return Err(CliError::Input(format!(
                    "{name}: record {i} has {} samples, expected {}",
                    samples.len(),
                    first.len()
                )));
            }
        }
        traces.push(samples);
    }
    if traces.is_empty() {
        return Err(CliError::Input(format!("{name}: no trace records")));
    }
    Ok(traces)
}

pub fn write_traces(path: &Path, traces: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = String::new();
    for t in traces {
        let line: Vec<String> = t.iter().map(|v| format!("{v:.6}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_file(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_file(path, text)
}
