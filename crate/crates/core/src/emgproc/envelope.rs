//! Windowed RMS envelope with per-channel standardization.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataio::{read_table, sidecar_path, write_table, EmgRecording};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Divisor applied to RMS volts before standardization.
pub const ENVELOPE_SCALE: f64 = 1e-4;
/// Default analysis window, samples.
pub const DEFAULT_WINDOW: usize = 200;
/// Window slides matching 8, 7 and 6 s prompts.
pub const DOCUMENTED_SLIDES: [usize; 3] = [25, 29, 33];

/// Per-channel standardization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
    /// Channels whose standard deviation was zero and replaced by one.
    #[serde(default)]
    pub dead: Vec<usize>,
}

impl<T: Real> ChannelStats<T> {
    /// Column means and unbiased standard deviations of `values`.
    pub fn from_values(values: ArrayView2<T>) -> Self {
        let n = values.nrows();
        let mut mean = Vec::with_capacity(values.ncols());
        let mut std = Vec::with_capacity(values.ncols());
        let mut dead = Vec::new();
        for (c, col) in values.axis_iter(Axis(1)).enumerate() {
            let m = col.iter().fold(T::zero(), |a, &v| a + v) / T::of_usize(n.max(1));
            let ss = col.iter().fold(T::zero(), |a, &v| a + (v - m) * (v - m));
            let s = if n > 1 { (ss / T::of_usize(n - 1)).sqrt() } else { T::zero() };
            mean.push(m);
            if !(s > T::zero()) || !s.is_finite() {
                dead.push(c);
                std.push(T::one());
            } else {
                std.push(s);
            }
        }
        Self { mean, std, dead }
    }

    pub fn n_channels(&self) -> usize {
        self.mean.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.std.len() {
            return Err(Error::Shape("mean and std lengths differ".into()));
        }
        if self.std.iter().any(|s| !(*s > T::zero()) || !s.is_finite()) {
            return Err(Error::Config("standardization std must be positive and finite".into()));
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("standardization mean must be finite".into()));
        }
        Ok(())
    }

    /// `(x - mean) / std`, column by column.
    pub fn apply(&self, values: ArrayView2<T>) -> Result<Array2<T>> {
        self.validate()?;
        if values.ncols() != self.n_channels() {
            return Err(Error::Shape(format!(
                "statistics for {} channels applied to {}",
                self.n_channels(),
                values.ncols()
            )));
        }
        let mut out = values.to_owned();
        for (c, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[c], self.std[c]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn cast<U: Real>(&self) -> ChannelStats<U> {
        ChannelStats {
            mean: self.mean.iter().map(|v| U::lit(v.as_f64())).collect(),
            std: self.std.iter().map(|v| U::lit(v.as_f64())).collect(),
            dead: self.dead.clone(),
        }
    }
}

/// Standardized envelope, `n x C`, one row per window.
#[derive(Debug, Clone, PartialEq)]
pub struct EmgEnvelope<T> {
    pub values: Array2<T>,
    pub window_len: usize,
    pub slide: usize,
    pub fs_hz: f64,
    pub scale: f64,
    pub stats: ChannelStats<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EnvelopeSidecar<T> {
    window_len: usize,
    slide: usize,
    fs_hz: f64,
    scale: f64,
    stats: ChannelStats<T>,
}

impl<T: Real> EmgEnvelope<T> {
    pub fn n_windows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.values.ncols()
    }

    /// Centre time of each window, seconds from the first sample.
    pub fn timestamps(&self) -> Vec<f64> {
        window_centers(self.n_windows(), self.window_len, self.slide, self.fs_hz)
    }

    /// CSV of `t_s, ch0..` plus a JSON sidecar with windowing and statistics.
    pub fn save(&self, path: &Path) -> Result<()> {
        let n = self.n_windows();
        let mut table = Array2::<T>::zeros((n, self.n_channels() + 1));
        for (i, t) in self.timestamps().into_iter().enumerate() {
            table[[i, 0]] = T::lit(t);
        }
        table.slice_mut(ndarray::s![.., 1..]).assign(&self.values);
        let mut header = vec!["t_s".to_string()];
        header.extend((0..self.n_channels()).map(|c| format!("ch{c}")));
        write_table(path, &header, &table)?;
        let side = EnvelopeSidecar {
            window_len: self.window_len,
            slide: self.slide,
            fs_hz: self.fs_hz,
            scale: self.scale,
            stats: self.stats.clone(),
        };
        let sp = sidecar_path(path);
        let text = serde_json::to_string_pretty(&side)? + "\n";
        std::fs::write(&sp, text).map_err(|e| Error::io(&sp, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let sp = sidecar_path(path);
        let text = std::fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
        let side: EnvelopeSidecar<T> = serde_json::from_str(&text)?;
        let (header, table) = read_table::<T>(path)?;
        if header.first().map(String::as_str) != Some("t_s") || table.ncols() < 2 {
            return Err(Error::format(path, "expected a `t_s` column followed by channels"));
        }
        if table.ncols() - 1 != side.stats.n_channels() {
            return Err(Error::format(path, "channel count differs from sidecar statistics"));
        }
        Ok(Self {
            values: table.slice(ndarray::s![.., 1..]).to_owned(),
            window_len: side.window_len,
            slide: side.slide,
            fs_hz: side.fs_hz,
            scale: side.scale,
            stats: side.stats,
        })
    }
}

/// Centre time of left-aligned windows `k * slide .. k * slide + len`.
pub fn window_centers(n_windows: usize, window_len: usize, slide: usize, fs_hz: f64) -> Vec<f64> {
    let half = (window_len as f64 - 1.0) / 2.0;
    (0..n_windows)
        .map(|k| ((k * slide) as f64 + half) / fs_hz)
        .collect()
}

/// Number of complete windows in `n` samples.
pub fn n_windows(n: usize, window_len: usize, slide: usize) -> usize {
    if window_len == 0 || slide == 0 || window_len > n {
        0
    } else {
        (n - window_len) / slide + 1
    }
}

/// Quadratic mean of each column over sliding windows.
pub fn sliding_rms<T: Real>(signal: ArrayView2<T>, window_len: usize, slide: usize) -> Result<Array2<T>> {
    check_window(signal.nrows(), window_len, slide)?;
    let nw = n_windows(signal.nrows(), window_len, slide);
    let c = signal.ncols();
    let w = T::of_usize(window_len);
    let mut out = Array2::<T>::zeros((nw, c));
    for ch in 0..c {
        let col = signal.column(ch);
        for k in 0..nw {
            let start = k * slide;
            let mut acc = T::zero();
            for i in start..start + window_len {
                acc += col[i] * col[i];
            }
            out[[k, ch]] = (acc / w).sqrt();
        }
    }
    Ok(out)
}

fn check_window(n: usize, window_len: usize, slide: usize) -> Result<()> {
    if window_len == 0 || slide == 0 {
        return Err(Error::Config("window length and slide must be at least 1".into()));
    }
    if window_len > n {
        return Err(Error::InvalidInput(format!(
            "window of {window_len} samples is longer than the {n}-sample signal"
        )));
    }
    Ok(())
}

/// Counts to volts, per-channel offset removal and rectification.
pub fn rectified_volts<T: Real>(raw: &EmgRecording) -> Array2<T> {
    let k = raw.volts_per_count();
    let n = raw.n_samples();
    let mut out = Array2::<T>::zeros(raw.samples.raw_dim());
    for (c, col) in raw.samples.axis_iter(Axis(1)).enumerate() {
        let m = col.iter().map(|&v| v as i64).sum::<i64>() as f64 / n.max(1) as f64;
        for (i, &v) in col.iter().enumerate() {
            out[[i, c]] = T::lit(((v as f64 - m) * k).abs());
        }
    }
    out
}

/// Scaled RMS envelope before standardization.
pub fn rms_envelope<T: Real>(raw: &EmgRecording, window_len: usize, slide: usize) -> Result<Array2<T>> {
    check_window(raw.n_samples(), window_len, slide)?;
    let rect = rectified_volts::<T>(raw);
    let scale = T::lit(ENVELOPE_SCALE);
    Ok(sliding_rms(rect.view(), window_len, slide)?.mapv(|v| v / scale))
}

/// Envelope standardized with `stats`, or with its own statistics if `None`.
pub fn preprocess<T: Real>(
    raw: &EmgRecording,
    window_len: usize,
    slide: usize,
    stats: Option<&ChannelStats<T>>,
) -> Result<EmgEnvelope<T>> {
    let rms = rms_envelope::<T>(raw, window_len, slide)?;
    let stats = match stats {
        Some(s) => s.clone(),
        None => ChannelStats::from_values(rms.view()),
    };
    if !stats.dead.is_empty() {
        log::warn!("dead channels (zero variance): {:?}", stats.dead);
    }
    let values = stats.apply(rms.view())?;
    Ok(EmgEnvelope {
        values,
        window_len,
        slide,
        fs_hz: raw.fs_hz,
        scale: ENVELOPE_SCALE,
        stats,
    })
}

/// Column means of a matrix.
pub fn column_means<T: Real>(m: ArrayView2<T>) -> Array1<T> {
    m.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(m.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::EmgMeta;
    use proptest::prelude::*;

    fn recording(samples: Array2<i32>, rows: usize, cols: usize) -> EmgRecording {
        EmgRecording::new(samples, &EmgMeta::standard(rows, cols)).unwrap()
    }

    #[test]
    fn constant_channel_gives_zero_envelope() {
        let rec = recording(Array2::from_elem((400, 2), 1234), 1, 2);
        let env = rms_envelope::<f64>(&rec, 200, 25).unwrap();
        assert!(env.iter().all(|&v| v == 0.0));
        let pre = preprocess::<f64>(&rec, 200, 25, None).unwrap();
        assert_eq!(pre.stats.dead, vec![0, 1]);
        assert!(pre.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_rms_is_amplitude_over_root_two() {
        // 64 Hz sine: 32 samples per period, window of 8 whole periods
        let rec0 = recording(Array2::zeros((1, 1)), 1, 1);
        let amp_v = 2.0e-3;
        let counts = amp_v / rec0.volts_per_count();
        let n = 2048;
        let s = Array2::from_shape_fn((n, 1), |(i, _)| {
            (counts * (2.0 * std::f64::consts::PI * 64.0 * i as f64 / 2048.0).sin()).round() as i32
        });
        let rec = recording(s, 1, 1);
        let env = rms_envelope::<f64>(&rec, 256, 29).unwrap();
        let want = amp_v / 2f64.sqrt() / ENVELOPE_SCALE;
        for &v in env.iter() {
            assert!((v / want - 1.0).abs() < 0.01, "{v} vs {want}");
        }
    }

    #[test]
    fn standardized_training_channels() {
        let s = Array2::from_shape_fn((3000, 3), |(i, c)| (((i * 7919 + c * 104729) % 2001) as i32) - 1000);
        let rec = recording(s, 1, 3);
        let env = preprocess::<f64>(&rec, 200, 25, None).unwrap();
        for col in env.values.axis_iter(Axis(1)) {
            let v = col.to_vec();
            assert!(crate::stats::mean(&v).abs() < 1e-9);
            assert!((crate::stats::std_dev(&v) - 1.0).abs() < 1e-9);
        }
        // re-standardizing with recomputed statistics changes nothing
        let again = ChannelStats::from_values(env.values.view()).apply(env.values.view()).unwrap();
        for (a, b) in again.iter().zip(env.values.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        // supplied statistics are reused verbatim
        let reused = preprocess::<f64>(&rec, 200, 25, Some(&env.stats)).unwrap();
        assert_eq!(reused.values, env.values);
    }

    #[test]
    fn window_longer_than_signal() {
        let rec = recording(Array2::zeros((100, 1)), 1, 1);
        assert!(preprocess::<f64>(&rec, 200, 25, None).is_err());
        assert!(preprocess::<f64>(&rec, 50, 0, None).is_err());
    }

    #[test]
    fn window_timing() {
        let t = window_centers(3, 200, 25, 2048.0);
        assert!((t[0] - 99.5 / 2048.0).abs() < 1e-15);
        assert!((t[2] - t[1] - 25.0 / 2048.0).abs() < 1e-15);
        assert_eq!(n_windows(1000, 200, 25), 33);
    }

    #[test]
    fn save_load_round_trip() {
        let s = Array2::from_shape_fn((700, 2), |(i, c)| ((i * 31 + c * 17) % 97) as i32 - 48);
        let env = preprocess::<f64>(&recording(s, 1, 2), 200, 33, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("env.csv");
        env.save(&p).unwrap();
        assert_eq!(EmgEnvelope::<f64>::load(&p).unwrap(), env);
    }

    proptest! {
        #[test]
        fn sliding_rms_matches_direct(
            data in proptest::collection::vec(-1000.0f64..1000.0, 300..600),
            slide_idx in 0usize..4,
            w in 1usize..120,
        ) {
            let slide = [1, 25, 29, 33][slide_idx];
            let n = data.len();
            let m = Array2::from_shape_vec((n, 1), data.clone()).unwrap();
            let got = sliding_rms(m.view(), w, slide).unwrap();
            for k in 0..got.nrows() {
                let win = &data[k * slide..k * slide + w];
                let direct = (win.iter().map(|v| v * v).sum::<f64>() / w as f64).sqrt();
                prop_assert!((got[[k, 0]] - direct).abs() <= 1e-9 * direct.max(1.0));
            }
            prop_assert_eq!(got.nrows(), (n - w) / slide + 1);
        }
    }
}
