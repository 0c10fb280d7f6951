//! Numeric CSV tables with a header row.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shortest text that parses back to the same value.
pub fn fmt_real<T: Real>(v: T) -> String {
    format!("{v}")
}

pub fn write_table<T: Real>(path: &Path, header: &[String], rows: &Array2<T>) -> Result<()> {
    if header.len() != rows.ncols() {
        return Err(Error::Shape(format!(
            "{} header fields for {} columns",
            header.len(),
            rows.ncols()
        )));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(header)?;
    let mut rec = Vec::with_capacity(rows.ncols());
    for row in rows.rows() {
        rec.clear();
        rec.extend(row.iter().map(|&v| fmt_real(v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a table; returns header and an `n x k` matrix.
pub fn read_table<T: Real>(path: &Path) -> Result<(Vec<String>, Array2<T>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    let header: Vec<String> = r.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let k = header.len();
    let mut data = Vec::new();
    let mut n = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.len() != k {
            return Err(Error::format(
                path,
                format!("row {} has {} fields, expected {k}", i + 1, rec.len()),
            ));
        }
        for (j, field) in rec.iter().enumerate() {
            let v: T = field.trim().parse().map_err(|_| {
                Error::format(
                    path,
                    format!("row {}, column `{}`: `{field}` is not a number", i + 1, header[j]),
                )
            })?;
            data.push(v);
        }
        n += 1;
    }
    let m = Array2::from_shape_vec((n, k), data).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((header, m))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    }
}
