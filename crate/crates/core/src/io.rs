//! CSV and JSON file formats.
//!
//! Curve files hold one curve per row (`m` values). The grid is either the
//! first row of the file (`grid_header = true`) or the uniform grid implied by
//! the column count. Coefficient files hold an `n x J` matrix, one curve per
//! row. Floats are written with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::basis::{uniform_grid, CoefficientMatrix};
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn input_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Input {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a headerless numeric CSV into rows, checking that every row has the
/// same width.
pub fn read_numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| input_err(path, format!("row {}: {e}", r + 1)))?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        input_err(
                            path,
                            format!(
                                "row {}, column {}: not a finite number: {field:?}",
                                r + 1,
                                c + 1
                            ),
                        )
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(input_err(
                    path,
                    format!(
                        "row {}: has {} columns, expected {}",
                        r + 1,
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(input_err(path, "file contains no data rows"));
    }
    Ok(rows)
}

/// Curves read from a curve file.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    pub grid: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    /// Whether the grid came from a header row.
    pub grid_header: bool,
}

pub fn read_curves(path: &Path, grid_header: bool) -> Result<CurveTable> {
    let mut rows = read_numeric_rows(path)?;
    let grid = if grid_header {
        let grid = rows.remove(0);
        if let Some(k) = grid.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(input_err(
                path,
                format!("row 1 (grid): column {} is not strictly increasing", k + 2),
            ));
        }
        if rows.is_empty() {
            return Err(input_err(path, "file has a grid row but no curves"));
        }
        grid
    } else {
        uniform_grid(rows[0].len())
    };
    Ok(CurveTable {
        grid,
        rows,
        grid_header,
    })
}

fn write_rows<'a>(
    path: &Path,
    header: Option<&[f64]>,
    rows: impl IntoIterator<Item = &'a [f64]>,
) -> Result<()> {
    let mut out = String::new();
    let mut push = |row: &[f64]| {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    };
    if let Some(h) = header {
        push(h);
    }
    for row in rows {
        push(row);
    }
    fs::write(path, out).map_err(io_err(path))
}

pub fn write_curves(path: &Path, grid: Option<&[f64]>, rows: &[Vec<f64>]) -> Result<()> {
    write_rows(path, grid, rows.iter().map(Vec::as_slice))
}

pub fn write_matrix(path: &Path, m: &CoefficientMatrix) -> Result<()> {
    write_rows(path, None, m.to_rows().iter().map(Vec::as_slice))
}

pub fn read_matrix(path: &Path) -> Result<CoefficientMatrix> {
    CoefficientMatrix::from_rows(&read_numeric_rows(path)?)
}

/// Reads a smoothing-operator file: `J` numbers, either on one row or one per
/// row. Every entry must satisfy the positivity condition `alpha_j >= 0`.
pub fn read_alpha_file(path: &Path) -> Result<Vec<f64>> {
    let rows = read_numeric_rows(path)?;
    let values: Vec<f64> = if rows.len() == 1 {
        rows.into_iter().next().unwrap_or_default()
    } else if rows.iter().all(|r| r.len() == 1) {
        rows.into_iter().map(|r| r[0]).collect()
    } else {
        return Err(input_err(
            path,
            "expected a single row or a single column of values",
        ));
    };
    if let Some(j) = values.iter().position(|a| *a < 0.0) {
        return Err(input_err(
            path,
            format!(
                "entry {} = {} violates the positivity condition <h, Bh> >= 0",
                j + 1,
                values[j]
            ),
        ));
    }
    Ok(values)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn ensure_dir(path: &Path) -> Result<PathBuf> {
    fs::create_dir_all(path).map_err(io_err(path))?;
    Ok(path.to_path_buf())
}
