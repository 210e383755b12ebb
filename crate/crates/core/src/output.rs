//! Lossless CSV emission: 17 significant digits, header row, LF line endings.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Formats a float with 17 significant digits in scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders equally long numeric columns as CSV text.
pub fn csv_string(headers: &[&str], columns: &[&[f64]]) -> Result<String> {
    if headers.len() != columns.len() {
        return Err(Error::InvalidInput(format!(
            "{} headers for {} columns",
            headers.len(),
            columns.len()
        )));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::InvalidInput("CSV columns differ in length".into()));
    }
    let mut out = headers.join(",");
    out.push('\n');
    for i in 0..rows {
        for (j, col) in columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{}", format_float(col[i])).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    fs::write(path, csv_string(headers, columns)?)?;
    Ok(())
}

/// Parses a CSV file of numeric columns produced by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let headers: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InvalidInput(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != headers.len() {
            return Err(Error::Parse {
                line: n + 2,
                key: path.display().to_string(),
                message: format!("expected {} fields, found {}", headers.len(), fields.len()),
            });
        }
        for (col, field) in columns.iter_mut().zip(fields) {
            col.push(field.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: n + 2,
                key: path.display().to_string(),
                message: e.to_string(),
            })?);
        }
    }
    Ok((headers, columns))
}
