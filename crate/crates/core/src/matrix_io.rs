//! Plain-text dense matrix format shared by affinity and mixture matrices.
//!
//! ```text
//! <rows> <cols>
//! a11 a12 ... a1n
//! ...
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! written matrix re-reads bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{}", m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(hline, format!("bad header `{header}`")))?;
    let [rows, cols] = dims[..] else {
        return Err(Error::parse(hline, "header must be `<rows> <cols>`"));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (line, content) in lines {
        if seen == rows {
            return Err(Error::parse(line, format!("more than {rows} data rows")));
        }
        let row: Vec<f64> = content
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line, format!("bad value `{t}`")))
            })
            .collect::<Result<_>>()?;
        if row.len() != cols {
            return Err(Error::parse(
                line,
                format!("expected {cols} values, found {}", row.len()),
            ));
        }
        data.extend(row);
        seen += 1;
    }
    if seen != rows {
        return Err(Error::parse(hline, format!("expected {rows} data rows, found {seen}")));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn write_matrix_file(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    std::fs::write(path, format_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text)
}
