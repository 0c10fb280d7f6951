//! Raw EMG recordings: binary little-endian samples with a JSON sidecar.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling rate of the acquisition units, Hz.
pub const EMG_FS_HZ: f64 = 2048.0;
/// Amplifier gain, V/V.
pub const EMG_GAIN: f64 = 192.0;
/// ADC resolution, bits.
pub const EMG_BITS: u32 = 16;
/// ADC dynamic range, V.
pub const EMG_V_RANGE: f64 = 2.4;
/// Channels per acquisition unit.
pub const CHANNELS_PER_UNIT: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    I16le,
    I32le,
}

impl SampleFormat {
    fn width(self) -> usize {
        match self {
            SampleFormat::I16le => 2,
            SampleFormat::I32le => 4,
        }
    }

    /// Narrowest format holding `bits`-bit samples.
    pub fn for_bits(bits: u32) -> Self {
        if bits <= 16 {
            SampleFormat::I16le
        } else {
            SampleFormat::I32le
        }
    }
}

/// Acquisition constants stored next to the sample file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmgMeta {
    pub n_channels: usize,
    pub fs_hz: f64,
    pub gain: f64,
    pub bits: u32,
    pub v_range: f64,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// `(row, col)` of each channel; row-major when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_map: Option<Vec<(usize, usize)>>,
    /// Sample index at which motion capture started.
    #[serde(default)]
    pub sync_start: usize,
    pub sample_format: SampleFormat,
}

impl EmgMeta {
    /// Acquisition defaults for a `rows x cols` electrode grid.
    pub fn standard(grid_rows: usize, grid_cols: usize) -> Self {
        Self {
            n_channels: grid_rows * grid_cols,
            fs_hz: EMG_FS_HZ,
            gain: EMG_GAIN,
            bits: EMG_BITS,
            v_range: EMG_V_RANGE,
            grid_rows,
            grid_cols,
            channel_map: None,
            sync_start: 0,
            sample_format: SampleFormat::I16le,
        }
    }
}

/// Raw ADC counts, `n x C`, plus acquisition constants and electrode layout.
#[derive(Debug, Clone, PartialEq)]
pub struct EmgRecording {
    pub samples: Array2<i32>,
    pub fs_hz: f64,
    pub gain: f64,
    pub bits: u32,
    pub v_range: f64,
    pub grid: (usize, usize),
    pub channel_map: Vec<(usize, usize)>,
    pub sync_start: usize,
}

fn row_major_map(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect()
}

impl EmgRecording {
    pub fn new(samples: Array2<i32>, meta: &EmgMeta) -> Result<Self> {
        let map = meta
            .channel_map
            .clone()
            .unwrap_or_else(|| row_major_map(meta.grid_rows, meta.grid_cols));
        let rec = Self {
            samples,
            fs_hz: meta.fs_hz,
            gain: meta.gain,
            bits: meta.bits,
            v_range: meta.v_range,
            grid: (meta.grid_rows, meta.grid_cols),
            channel_map: map,
            sync_start: meta.sync_start,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.samples.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.fs_hz
    }

    /// Volts per ADC count at the electrode (gain removed).
    pub fn volts_per_count(&self) -> f64 {
        self.v_range / 2f64.powi(self.bits as i32) / self.gain
    }

    pub fn meta(&self) -> EmgMeta {
        let row_major = self.channel_map == row_major_map(self.grid.0, self.grid.1);
        EmgMeta {
            n_channels: self.n_channels(),
            fs_hz: self.fs_hz,
            gain: self.gain,
            bits: self.bits,
            v_range: self.v_range,
            grid_rows: self.grid.0,
            grid_cols: self.grid.1,
            channel_map: (!row_major).then(|| self.channel_map.clone()),
            sync_start: self.sync_start,
            sample_format: SampleFormat::for_bits(self.bits),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (rows, cols) = self.grid;
        if !(self.fs_hz > 0.0) || !(self.gain > 0.0) || !(self.v_range > 0.0) {
            return Err(Error::Config("sampling rate, gain and range must be positive".into()));
        }
        if !(1..=31).contains(&self.bits) {
            return Err(Error::Config(format!("unsupported ADC resolution {} bits", self.bits)));
        }
        if rows * cols != self.n_channels() {
            return Err(Error::Shape(format!(
                "grid {rows}x{cols} does not match {} channels",
                self.n_channels()
            )));
        }
        if self.channel_map.len() != self.n_channels() {
            return Err(Error::Shape("channel map length differs from channel count".into()));
        }
        let mut seen = HashSet::new();
        for &(r, c) in &self.channel_map {
            if r >= rows || c >= cols || !seen.insert((r, c)) {
                return Err(Error::Config(format!("channel map entry ({r}, {c}) is invalid or repeated")));
            }
        }
        let lo = -(1i64 << (self.bits - 1));
        let hi = (1i64 << (self.bits - 1)) - 1;
        for ((row, col), &v) in self.samples.indexed_iter() {
            let v = v as i64;
            if v < lo || v > hi {
                return Err(Error::SampleOverflow { value: v, row, col, bits: self.bits });
            }
        }
        Ok(())
    }

    /// Channel at grid position `(row, col)`.
    pub fn channel_at(&self, row: usize, col: usize) -> Option<usize> {
        self.channel_map.iter().position(|&rc| rc == (row, col))
    }

    /// Keep the listed channels, in order, with a new grid and layout.
    pub fn select_channels(&self, channels: &[usize], grid: (usize, usize), map: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&c) = channels.iter().find(|&&c| c >= self.n_channels()) {
            return Err(Error::Config(format!("channel {c} out of range")));
        }
        let samples = self.samples.select(Axis(1), channels);
        let out = Self {
            samples,
            grid,
            channel_map: map,
            ..self.clone()
        };
        out.validate()?;
        Ok(out)
    }

    /// Samples `[start, end)` with the sync index shifted accordingly.
    pub fn slice_samples(&self, start: usize, end: usize) -> Self {
        let end = end.min(self.n_samples());
        let start = start.min(end);
        Self {
            samples: self.samples.slice(ndarray::s![start..end, ..]).to_owned(),
            sync_start: self.sync_start.saturating_sub(start),
            ..self.clone()
        }
    }
}

/// Path of the JSON sidecar belonging to a sample file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn load_emg(path: &Path, meta: &EmgMeta) -> Result<EmgRecording> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if meta.n_channels == 0 {
        return Err(Error::Config("declared channel count is zero".into()));
    }
    let width = meta.sample_format.width();
    let row_bytes = width * meta.n_channels;
    if bytes.len() % row_bytes != 0 {
        return Err(Error::format(
            path,
            format!(
                "{} bytes is not a whole number of {}-channel rows",
                bytes.len(),
                meta.n_channels
            ),
        ));
    }
    let values: Vec<i32> = match meta.sample_format {
        SampleFormat::I16le => bytes
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as i32)
            .collect(),
        SampleFormat::I32le => bytes
            .chunks_exact(4)
            .map(|b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect(),
    };
    let n = bytes.len() / row_bytes;
    let samples = Array2::from_shape_vec((n, meta.n_channels), values)
        .map_err(|e| Error::format(path, e.to_string()))?;
    EmgRecording::new(samples, meta)
}

/// Load a sample file using its sidecar.
pub fn load_emg_with_sidecar(path: &Path) -> Result<EmgRecording> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: EmgMeta = serde_json::from_str(&text)?;
    load_emg(path, &meta)
}

/// Write samples and sidecar.
pub fn save_emg(path: &Path, rec: &EmgRecording) -> Result<()> {
    let meta = rec.meta();
    let mut bytes = Vec::with_capacity(rec.samples.len() * meta.sample_format.width());
    for &v in rec.samples.iter() {
        match meta.sample_format {
            SampleFormat::I16le => bytes.extend_from_slice(&(v as i16).to_le_bytes()),
            SampleFormat::I32le => bytes.extend_from_slice(&v.to_le_bytes()),
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let text = serde_json::to_string_pretty(&meta)?;
    std::fs::write(&side, text + "\n").map_err(|e| Error::io(&side, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta64() -> EmgMeta {
        EmgMeta::standard(2, 32)
    }

    #[test]
    fn parses_well_formed_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        let mut bytes = Vec::new();
        for i in 0..(10 * 64) {
            bytes.extend_from_slice(&((i as i16) - 300).to_le_bytes());
        }
        std::fs::write(&p, &bytes).unwrap();
        let rec = load_emg(&p, &meta64()).unwrap();
        assert_eq!(rec.n_channels(), 64);
        assert_eq!(rec.n_samples(), 10);
        assert_eq!(rec.samples[[1, 0]], 64 - 300);
        // byte-identical round trip
        let q = dir.path().join("y.bin");
        save_emg(&q, &rec).unwrap();
        assert_eq!(std::fs::read(&q).unwrap(), bytes);
        assert_eq!(load_emg_with_sidecar(&q).unwrap(), rec);
    }

    #[test]
    fn column_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        std::fs::write(&p, vec![0u8; 2 * 64 * 3 + 2]).unwrap();
        assert!(matches!(load_emg(&p, &meta64()), Err(Error::Format { .. })));
    }

    #[test]
    fn seventeen_bit_value_overflows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        let mut meta = meta64();
        meta.sample_format = SampleFormat::I32le;
        let mut bytes = vec![0u8; 4 * 64 * 2];
        bytes[4 * 70..4 * 71].copy_from_slice(&(1i32 << 16).to_le_bytes());
        std::fs::write(&p, &bytes).unwrap();
        match load_emg(&p, &meta) {
            Err(Error::SampleOverflow { value, row, col, bits }) => {
                assert_eq!((value, row, col, bits), (65536, 1, 6, 16));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_emg(Path::new("/nonexistent/x.bin"), &meta64()), Err(Error::Io { .. })));
    }

    #[test]
    fn duplicate_channel_map_rejected() {
        let mut meta = EmgMeta::standard(1, 2);
        meta.channel_map = Some(vec![(0, 0), (0, 0)]);
        assert!(EmgRecording::new(Array2::zeros((3, 2)), &meta).is_err());
    }

    #[test]
    fn window_duration_constant() {
        // 200 samples at the acquisition rate
        let ms = 200.0 / EMG_FS_HZ * 1e3;
        assert!((ms - 97.7).abs() < 0.05);
    }
}
