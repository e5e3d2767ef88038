//! Sweep results as CSV.
//!
//! A single-series result uses exactly [`CSV_HEADER`]. Multi-series results
//! prepend a `series` column. Numbers are written in shortest round-trip
//! form, always with `.` as the decimal point. An absent solve time is an
//! empty field.

use std::path::Path;

use super::{SeriesResult, SweepResult, SweepRow};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "value,p_e,ci,infeasible_frac,solve_ms";

fn multi(result: &SweepResult) -> bool {
    result.series.len() > 1 || result.series.iter().any(|s| !s.label.is_empty())
}

pub fn format_csv(result: &SweepResult) -> String {
    let multi = multi(result);
    let mut out = String::new();
    if multi {
        out.push_str("series,");
    }
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &result.series {
        for r in &s.rows {
            if multi {
                out.push_str(&s.label);
                out.push(',');
            }
            let ms = r.mean_solve_ms.map(|v| format!("{v}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.value, r.p_e, r.ci_halfwidth, r.infeasible_fraction, ms
            ));
        }
    }
    out
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, format_csv(result)).map_err(|e| Error::io(path, e))
}

/// Inverse of [`format_csv`]. The variable name is not stored in the file
/// and is supplied by the caller.
pub fn parse_csv(text: &str, variable: &str) -> Result<SweepResult> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty CSV"))?;
    let multi = if header == CSV_HEADER {
        false
    } else if header.strip_prefix("series,") == Some(CSV_HEADER) {
        true
    } else {
        return Err(Error::parse(1, format!("unexpected header `{header}`")));
    };
    let mut series: Vec<SeriesResult> = Vec::new();
    for (idx, line) in lines {
        let n = idx + 1;
        let mut fields: Vec<&str> = line.split(',').collect();
        let label = if multi {
            if fields.is_empty() {
                return Err(Error::parse(n, "missing series label"));
            }
            fields.remove(0).to_string()
        } else {
            String::new()
        };
        if fields.len() != 5 {
            return Err(Error::parse(n, format!("expected 5 numeric fields, got {}", fields.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::parse(n, format!("`{s}` is not a number")))
        };
        let row = SweepRow {
            value: num(fields[0])?,
            p_e: num(fields[1])?,
            ci_halfwidth: num(fields[2])?,
            infeasible_fraction: num(fields[3])?,
            mean_solve_ms: if fields[4].is_empty() { None } else { Some(num(fields[4])?) },
        };
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.rows.push(row),
            None => series.push(SeriesResult { label, rows: vec![row] }),
        }
    }
    Ok(SweepResult {
        variable: variable.to_string(),
        series,
    })
}
