//! Ingestion of externally recorded EMG exported as delimited text.
//!
//! Exports hold one row per sample and one integer column per channel,
//! optionally preceded by a header. The electrode layout is never guessed:
//! the caller supplies grid and channel map through an `EmgMeta`.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::emg::{save_emg, EmgMeta, EmgRecording};
use crate::error::{Error, Result};

/// Environment variable naming the directory that holds downloaded datasets.
pub const DATA_DIR_ENV: &str = "HDEMG_DATA_DIR";

/// Dataset cache directory, if configured and present.
pub fn data_cache_dir() -> Option<PathBuf> {
    let p = PathBuf::from(std::env::var_os(DATA_DIR_ENV)?);
    p.is_dir().then_some(p)
}

/// Parse one delimited export into a recording described by `meta`.
pub fn convert_text_emg(path: &Path, meta: &EmgMeta, delimiter: u8) -> Result<EmgRecording> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let mut data: Vec<i32> = Vec::new();
    let mut rows = 0usize;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let fields: Vec<&str> = rec.iter().filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        let Ok(vals) = parsed else {
            if line == 0 {
                continue;
            }
            return Err(Error::format(path, format!("line {}: non-numeric field", line + 1)));
        };
        if vals.len() != meta.n_channels {
            return Err(Error::format(
                path,
                format!("line {}: {} columns, expected {}", line + 1, vals.len(), meta.n_channels),
            ));
        }
        for v in vals {
            if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
                return Err(Error::format(path, format!("line {}: {v} is not an ADC count", line + 1)));
            }
            data.push(v as i32);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::format(path, "no samples"));
    }
    let samples = Array2::from_shape_vec((rows, meta.n_channels), data).expect("row-major buffer");
    EmgRecording::new(samples, meta)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvertReport {
    pub converted: Vec<PathBuf>,
    /// Inputs that could not be converted, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

/// Convert every `*.csv` / `*.txt` file in `src` into `dst/<stem>.bin` plus sidecar.
/// Individual failures are recorded and skipped.
pub fn convert_directory(src: &Path, dst: &Path, meta: &EmgMeta, delimiter: u8) -> Result<ConvertReport> {
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(src)
        .map_err(|e| Error::io(src, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "txt")))
        .collect();
    inputs.sort();
    std::fs::create_dir_all(dst).map_err(|e| Error::io(dst, e))?;
    let mut report = ConvertReport::default();
    for p in inputs {
        let out = dst.join(p.file_stem().unwrap_or_default()).with_extension("bin");
        match convert_text_emg(&p, meta, delimiter).and_then(|r| save_emg(&out, &r)) {
            Ok(()) => report.converted.push(out),
            Err(e) => {
                log::warn!("skipping {}: {e}", p.display());
                report.skipped.push((p, e.to_string()));
            }
        }
    }
    Ok(report)
}
