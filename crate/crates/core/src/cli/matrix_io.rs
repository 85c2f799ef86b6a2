//! Square matrix files.
//!
//! Text format: the first non-comment line holds `n`, then `n` lines of `n`
//! whitespace-separated numbers. CSV: `n` lines of `n` comma-separated
//! numbers, no header. Lines starting with `#` are ignored in both.
//! Numbers are written in their shortest round-trip form, which never needs
//! more than 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::psd::{PsdMatrix, TolerancePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Txt,
    Csv,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Txt => "txt",
            MatrixFormat::Csv => "csv",
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: `{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite entry `{tok}`")));
    }
    Ok(v)
}

fn parse_rows<'a>(
    lines: impl Iterator<Item = (usize, &'a str)>,
    split: impl Fn(&'a str) -> Vec<&'a str>,
) -> Result<Vec<Vec<f64>>> {
    lines
        .map(|(no, l)| split(l).into_iter().map(|t| parse_number(t.trim(), no)).collect())
        .collect()
}

fn square(rows: Vec<Vec<f64>>, n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n {
        return Err(Error::Parse(format!("expected {n} rows, found {}", rows.len())));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(Error::Parse(format!("row {} has {} entries, expected {n}", i + 1, r.len())));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(n, n, &flat))
}

pub fn parse_matrix(text: &str, format: MatrixFormat) -> Result<DMatrix<f64>> {
    let mut lines = content_lines(text);
    match format {
        MatrixFormat::Txt => {
            let (no, head) = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
            let n: usize = head
                .parse()
                .map_err(|_| Error::Parse(format!("line {no}: expected the dimension, got `{head}`")))?;
            if n == 0 {
                return Err(Error::Parse("dimension must be positive".into()));
            }
            square(parse_rows(lines, |l| l.split_whitespace().collect())?, n)
        }
        MatrixFormat::Csv => {
            let rows = parse_rows(lines, |l| l.split(',').collect())?;
            if rows.is_empty() {
                return Err(Error::Parse("empty matrix file".into()));
            }
            let n = rows.len();
            square(rows, n)
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
fn number(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn format_matrix(m: &DMatrix<f64>, format: MatrixFormat) -> String {
    let mut out = String::new();
    let sep = match format {
        MatrixFormat::Txt => {
            let _ = writeln!(out, "{}", m.nrows());
            " "
        }
        MatrixFormat::Csv => ",",
    };
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| number(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(sep));
    }
    out
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

/// Reads and validates a PSD matrix, returning it with the raw file bytes.
pub fn read_matrix(path: &Path, format: MatrixFormat, pol: &TolerancePolicy) -> Result<(PsdMatrix, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Parse(format!("{}: not UTF-8", path.display())))?;
    let raw = parse_matrix(text, format).map_err(|e| with_path(path, e))?;
    let m = PsdMatrix::validate(&raw, pol).map_err(|e| with_path(path, e))?;
    Ok((m, bytes))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>, format: MatrixFormat) -> Result<Vec<u8>> {
    let text = format_matrix(m, format);
    std::fs::write(path, &text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(text.into_bytes())
}
