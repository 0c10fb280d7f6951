use ndarray::{Array2, ArrayView2};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::emgproc::{n_windows, sliding_rms, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Floor applied to zero-power bins, dB.
pub const SPEC_FLOOR_DB: f64 = -120.0;

/// One-sided power spectral density over frames, in dB re 1 unit^2/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram<T> {
    /// `n_freqs x n_frames`.
    pub db: Array2<T>,
    pub freqs_hz: Vec<f64>,
    /// Frame centres.
    pub times_s: Vec<f64>,
    pub window_len: usize,
    pub hop: usize,
}

fn hann<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| T::lit(0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos()))
        .collect()
}

/// One-sided PSD of each frame with a periodic Hann taper, before the dB conversion.
fn frame_psd<T: Real>(x: &[T], fs_hz: f64, window_len: usize, hop: usize) -> Result<Array2<T>> {
    if window_len < 2 || hop == 0 {
        return Err(Error::Config("spectrogram window must be at least 2 samples and hop at least 1".into()));
    }
    if window_len > x.len() {
        return Err(Error::InvalidInput(format!(
            "spectrogram window of {window_len} samples exceeds the {}-sample signal",
            x.len()
        )));
    }
    if !(fs_hz > 0.0) {
        return Err(Error::Config("sampling rate must be positive".into()));
    }
    let w = hann::<T>(window_len);
    let wss = w.iter().fold(T::zero(), |a, &v| a + v * v);
    let norm = T::one() / (wss * T::lit(fs_hz));
    let nf = window_len / 2 + 1;
    let frames = n_windows(x.len(), window_len, hop);
    let fft = FftPlanner::<T>::new().plan_fft_forward(window_len);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); window_len];
    let mut out = Array2::<T>::zeros((nf, frames));
    for k in 0..frames {
        let seg = &x[k * hop..k * hop + window_len];
        for ((b, &v), &wv) in buf.iter_mut().zip(seg).zip(&w) {
            *b = Complex::new(v * wv, T::zero());
        }
        fft.process(&mut buf);
        for f in 0..nf {
            let edge = f == 0 || (window_len % 2 == 0 && f == nf - 1);
            let two = if edge { T::one() } else { T::lit(2.0) };
            out[[f, k]] = buf[f].norm_sqr() * norm * two;
        }
    }
    Ok(out)
}

/// Short-time Fourier power in dB, floored at `SPEC_FLOOR_DB`.
pub fn spectrogram<T: Real>(x: &[T], fs_hz: f64, window_len: usize, hop: usize) -> Result<Spectrogram<T>> {
    let psd = frame_psd(x, fs_hz, window_len, hop)?;
    let floor = T::lit(SPEC_FLOOR_DB);
    let ten = T::lit(10.0);
    let db = psd.mapv(|p| if p > T::zero() { (ten * p.log10()).max(floor) } else { floor });
    let frames = db.ncols();
    Ok(Spectrogram {
        db,
        freqs_hz: (0..window_len / 2 + 1).map(|f| f as f64 * fs_hz / window_len as f64).collect(),
        times_s: (0..frames).map(|k| (k * hop) as f64 / fs_hz + (window_len - 1) as f64 / (2.0 * fs_hz)).collect(),
        window_len,
        hop,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareOptions {
    pub rms_window: usize,
    pub rms_slide: usize,
    pub spec_window: usize,
    pub spec_hop: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { rms_window: DEFAULT_WINDOW, rms_slide: 25, spec_window: 256, spec_hop: 128 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmgComparison {
    pub rmse_rms_mv: f64,
    pub rmse_spec_db: f64,
}

fn rms_trace<T: Real>(x: &[T], opts: &CompareOptions) -> Result<Vec<f64>> {
    let rect = ArrayView2::from_shape((x.len(), 1), x).expect("column view").mapv(|v| v.abs());
    Ok(sliding_rms(rect.view(), opts.rms_window, opts.rms_slide)?.iter().map(|v| v.as_f64()).collect())
}

fn rmse(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (x, y) in a.zip(b) {
        s += (x - y) * (x - y);
        n += 1;
    }
    (s / n.max(1) as f64).sqrt()
}

/// RMSE between sliding-RMS traces (mV, inputs in V) and between spectrograms (dB).
pub fn compare_emg<T: Real>(a: &[T], b: &[T], fs_hz: f64, opts: &CompareOptions) -> Result<EmgComparison> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("recordings hold {} and {} samples", a.len(), b.len())));
    }
    let (ra, rb) = (rms_trace(a, opts)?, rms_trace(b, opts)?);
    let (sa, sb) = (spectrogram(a, fs_hz, opts.spec_window, opts.spec_hop)?, spectrogram(b, fs_hz, opts.spec_window, opts.spec_hop)?);
    Ok(EmgComparison {
        rmse_rms_mv: 1e3 * rmse(ra.into_iter(), rb.into_iter()),
        rmse_spec_db: rmse(sa.db.iter().map(|v| v.as_f64()), sb.db.iter().map(|v| v.as_f64())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn sine_peaks_at_its_bin() {
        let fs = 2048.0;
        let x: Vec<f64> = (0..4096).map(|i| (std::f64::consts::TAU * 64.0 * i as f64 / fs).sin()).collect();
        let s = spectrogram(&x, fs, 256, 128).unwrap();
        assert_eq!(s.db.dim(), (129, 31));
        for k in 0..s.db.ncols() {
            let col = s.db.column(k);
            let best = (0..col.len()).max_by(|&a, &b| col[a].total_cmp(&col[b])).unwrap();
            assert_eq!(s.freqs_hz[best], 64.0);
        }
    }

    #[test]
    fn silence_hits_floor() {
        let s = spectrogram(&vec![0.0f64; 1000], 1000.0, 256, 128).unwrap();
        assert!(s.db.iter().all(|&v| v == SPEC_FLOOR_DB));
    }

    #[test]
    fn parseval() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fs = 2048.0;
        let psd = frame_psd(&x, fs, 256, 256).unwrap();
        let w = hann::<f64>(256);
        let wss: f64 = w.iter().map(|v| v * v).sum();
        let time: f64 = x.iter().zip(&w).map(|(a, b)| (a * b).powi(2)).sum();
        let freq = psd.column(0).sum() * fs / 256.0 * wss;
        assert!((freq / time - 1.0).abs() < 0.01, "{freq} vs {time}");
    }

    #[test]
    fn window_errors() {
        assert!(spectrogram(&[0.0f64; 10], 100.0, 16, 8).is_err());
        assert!(spectrogram(&[0.0f64; 10], 100.0, 8, 0).is_err());
    }

    #[test]
    fn comparison_arithmetic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let a: Vec<f64> = (0..4096).map(|_| rng.random_range(-1e-3..1e-3)).collect();
        let o = CompareOptions::default();
        assert_eq!(compare_emg(&a, &a, 2048.0, &o).unwrap(), EmgComparison { rmse_rms_mv: 0.0, rmse_spec_db: 0.0 });
        let zero = vec![0.0; 4096];
        let one_mv = vec![1e-3; 4096];
        let c = compare_emg(&zero, &one_mv, 2048.0, &o).unwrap();
        assert!((c.rmse_rms_mv - 1.0).abs() < 1e-9);
        assert!(compare_emg(&a, &a[1..], 2048.0, &o).is_err());
    }
}
