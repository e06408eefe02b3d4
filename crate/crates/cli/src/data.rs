//! Headerless numeric CSV, one series per row.

use std::path::Path;

use anyhow::Result;
use tscore_core::SeriesPanel;

use crate::InputError;

pub fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| InputError(format!("{}: {e}", path.display())))?;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    InputError(format!(
                        "{}: row {}, column {}: '{cell}' is not a finite number",
                        path.display(),
                        r + 1,
                        c + 1
                    ))
                })
            })
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(InputError(format!(
                    "{}: row {} has {} values, expected {}",
                    path.display(),
                    r + 1,
                    row.len(),
                    first.len()
                ))
                .into());
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(InputError(format!("{}: no data rows", path.display())).into());
    }
    Ok(rows)
}

pub fn read_panel(path: &Path) -> Result<SeriesPanel> {
    let rows = read_rows(path)?;
    SeriesPanel::from_rows(&rows).map_err(|e| InputError(format!("{}: {e}", path.display())).into())
}

/// A single series stored either as one row or as one column.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let mut rows = read_rows(path)?;
    if rows.len() == 1 {
        return Ok(rows.pop().unwrap());
    }
    if rows[0].len() == 1 {
        return Ok(rows.into_iter().map(|r| r[0]).collect());
    }
    Err(InputError(format!(
        "{}: expected one series (a single row or a single column), found {} rows of {}",
        path.display(),
        rows.len(),
        rows[0].len()
    ))
    .into())
}
