//! Shared reader for the pipeline's text tables: comma-separated numeric
//! columns, an optional block of `# key: value` metadata lines ahead of the
//! header, and one header line naming the columns.

use std::collections::BTreeMap;

use crate::{Error, Result};

pub(crate) struct Table {
    pub meta: BTreeMap<String, String>,
    /// Column name -> index into each row.
    pub columns: BTreeMap<String, usize>,
    /// (1-based source line, parsed cells).
    pub rows: Vec<(usize, Vec<f64>)>,
    /// Raw string cells for columns that are not numeric (by column index).
    pub raw_rows: Vec<Vec<String>>,
}

pub(crate) fn parse(
    content: &str,
    required: &[&str],
    optional: &[&str],
    text_columns: &[&str],
) -> Result<Table> {
    let mut meta = BTreeMap::new();
    let mut columns = BTreeMap::new();
    let mut rows = Vec::new();
    let mut raw_rows = Vec::new();
    let mut header_seen = false;
    let mut text_idx: Vec<usize> = Vec::new();

    for (lineno, raw) in content.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if !header_seen {
                if let Some((k, v)) = rest.split_once(':') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            continue;
        }
        if !header_seen {
            header_seen = true;
            for (idx, name) in line.split(',').enumerate() {
                let name = name.trim();
                if !required.contains(&name) && !optional.contains(&name) {
                    return Err(Error::parse(
                        lineno,
                        format!("unknown column `{name}`"),
                    ));
                }
                if columns.insert(name.to_string(), idx).is_some() {
                    return Err(Error::parse(
                        lineno,
                        format!("duplicate column `{name}`"),
                    ));
                }
                if text_columns.contains(&name) {
                    text_idx.push(idx);
                }
            }
            for name in required {
                if !columns.contains_key(*name) {
                    return Err(Error::parse(
                        lineno,
                        format!("missing required column `{name}`"),
                    ));
                }
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(Error::parse(
                lineno,
                format!(
                    "expected {} fields, found {}",
                    columns.len(),
                    cells.len()
                ),
            ));
        }
        let mut numeric = Vec::with_capacity(cells.len());
        for (idx, cell) in cells.iter().enumerate() {
            if text_idx.contains(&idx) {
                numeric.push(f64::NAN);
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) => numeric.push(v),
                Err(_) => {
                    return Err(Error::parse(
                        lineno,
                        format!("`{cell}` is not a number"),
                    ))
                }
            }
        }
        rows.push((lineno, numeric));
        raw_rows.push(cells.iter().map(|s| s.to_string()).collect());
    }

    if !header_seen {
        return Err(Error::parse(1, "empty file: no header line"));
    }
    Ok(Table {
        meta,
        columns,
        rows,
        raw_rows,
    })
}

/// Constant value of an optional per-row metadata column, verifying that all
/// rows agree to within a relative 1e-9.
pub(crate) fn constant_column(table: &Table, name: &str) -> Result<Option<f64>> {
    let Some(&idx) = table.columns.get(name) else {
        return Ok(None);
    };
    let mut value = None;
    for (lineno, row) in &table.rows {
        let v = row[idx];
        match value {
            None => value = Some(v),
            Some(prev) => {
                if (v - prev).abs() > 1e-9 * prev.abs().max(1.0) {
                    return Err(Error::Metadata(format!(
                        "column `{name}` is not constant (line {lineno}: {v} vs {prev})"
                    )));
                }
            }
        }
    }
    Ok(value)
}

pub(crate) fn meta_f64(table: &Table, key: &str) -> Result<Option<f64>> {
    match table.meta.get(key) {
        None => Ok(None),
        Some(s) => s.parse::<f64>().map(Some).map_err(|_| {
            Error::Metadata(format!("metadata `{key}: {s}` is not a number"))
        }),
    }
}

/// Merge a sidecar metadata value with a column-derived one, rejecting
/// conflicts.
pub(crate) fn merge_meta(
    key: &str,
    sidecar: Option<f64>,
    column: Option<f64>,
) -> Result<Option<f64>> {
    match (sidecar, column) {
        (Some(a), Some(b)) if (a - b).abs() > 1e-9 * a.abs().max(1.0) => Err(Error::Metadata(
            format!("`{key}` given twice with different values ({a} vs {b})"),
        )),
        (a, b) => Ok(a.or(b)),
    }
}
